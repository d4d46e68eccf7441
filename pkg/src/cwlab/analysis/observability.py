"""Ingham-type observability functionals for the conservative adjoint systems."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import BelowInghamTime, InvalidParams
from ..models import ModalState, ModelKind, adjoint_frequencies, check_frequencies, trace_coefficients

SMALL_ARG = 1e-8
TIE_TOL = 1e-12


def ingham_threshold(cfg):
    """Minimal horizon of the Ingham estimate for the example.

    ``sqrt(beta² + 4)`` (Dirichlet) or ``(beta² + 4) / (beta + sqrt(beta² + 4))``
    (mixed); both equal 2 at ``beta = 0``.
    """
    if cfg.kind is ModelKind.DIRICHLET:
        return cfg.s
    return cfg.s**2 / (cfg.beta + cfg.s)


@dataclass(frozen=True)
class InghamResult:
    T: float
    integral: float
    modal_sum: float
    ratio: float

    def to_dict(self):
        return {"T": self.T, "integral": self.integral, "modal_sum": self.modal_sum, "ratio": self.ratio}


def _exp_integral(z, T):
    """``int_0^T exp(z t) dt`` elementwise, stable near ``z = 0``."""
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    small = np.abs(z) * T < SMALL_ARG
    zs = z[small]
    out[small] = T * (1 + zs * T / 2)
    zb = z[~small]
    out[~small] = np.expm1(zb * T) / zb
    return out


def trace_integral(cfg, state, T):
    """``int_0^T |d/dt phi(t, xi)|² dt`` from the pairwise cross terms."""
    c = trace_coefficients(cfg, state.n)
    w = state.lam * state.a * c
    Z = state.lam[:, None] + np.conj(state.lam)[None, :]
    G = _exp_integral(Z, float(T))
    return float(np.real(np.conj(w) @ (G.T @ w)))


def modal_sum(cfg, state):
    c = trace_coefficients(cfg, state.n)
    return float(np.sum(np.abs(state.lam) ** 2 * np.abs(state.a) ** 2 * c**2))


def ingham_ratio(cfg, state: ModalState, T) -> InghamResult:
    """Compare the observed trace energy on ``[0, T]`` with its modal weight."""
    T = float(T)
    thr = ingham_threshold(cfg)
    if not T > thr:
        raise BelowInghamTime(f"horizon T={T} must exceed the Ingham threshold {thr:.12g}")
    check_frequencies(cfg, state)
    integral = trace_integral(cfg, state, T)
    msum = modal_sum(cfg, state)
    ratio = integral / msum if msum > 0 else float("nan")
    return InghamResult(T, integral, msum, ratio)


def random_state(cfg, rng, n_max=None, formula="paper"):
    """Complex Gaussian coefficients on all modes up to ``n_max``."""
    base = adjoint_frequencies(cfg, n_max, formula)
    a = rng.standard_normal(len(base)) + 1j * rng.standard_normal(len(base))
    return base.with_coefficients(a)


def _infimum(values, n):
    # rounding noise in cos/sin must not decide between equal minima
    mags = np.abs(values)
    lo = mags.min()
    i = int(np.flatnonzero(mags <= lo + TIE_TOL)[0])
    return float(lo), int(n[i])


def modal_infimum(cfg, N_scan):
    """``min |c_n|`` over ``1 <= n <= N_scan`` and the first minimiser."""
    N_scan = int(N_scan)
    if N_scan < 1:
        raise InvalidParams(f"N_scan must be >= 1, got {N_scan}")
    n = np.arange(1, N_scan + 1)
    return _infimum(trace_coefficients(cfg, n), n)


def mixed_modal_infimum(xi, N_scan):
    """Mixed-example infimum ``min |cos(n pi xi)|``, which depends on ``xi`` only."""
    n = np.arange(1, int(N_scan) + 1)
    return _infimum(np.cos(n * np.pi * float(xi)), n)


def weak_modes(cfg, count, n_min=None):
    """The ``count`` indices in ``[n_min, N]`` with the smallest ``|c_n|``.

    Initial data carried by these modes is the least visible at ``xi`` and
    therefore the slowest to be damped. Default ``n_min`` is ``N // 2``.
    """
    n_min = max(1, cfg.N // 2) if n_min is None else int(n_min)
    n = np.arange(n_min, cfg.N + 1)
    if count < 1 or count > len(n):
        raise InvalidParams(f"count must lie in [1, {len(n)}], got {count}")
    order = np.argsort(np.abs(trace_coefficients(cfg, n)), kind="stable")
    return np.sort(n[order[:count]])
