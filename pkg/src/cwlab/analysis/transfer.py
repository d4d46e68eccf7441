"""Transfer functions of the two string examples.

For ``Re lam > 0`` the point-actuated resolvent problem reduces to the
two-point boundary value problem

    phi1'' = (lam² + kappa) phi1 + lam beta phi2'
    phi2'' = (lam² + kappa) phi2 + lam beta phi1'

on ``(0, xi) ∪ (xi, 1)`` with a unit jump of ``phi1'`` at ``xi`` and
``kappa = 0`` (Dirichlet example) or ``kappa = 1`` (mixed example).  The sum
and difference ``phi1 ± phi2`` decouple; ``H1`` and ``H2`` are their traces
``lam (phi1 ± phi2)(xi) / 2`` and ``H = H1 + H2 = lam phi1(xi)``.

Closed forms are written so that every exponential has non-positive real
part; the boundary value solve is an independent check built from matrix
exponentials.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .._parallel import pmap
from ..errors import CoincidentRoots, InvalidParams, OverflowGuard, SingularMatching
from ..models import ModelConfig, ModelKind

METHODS = ("closed_form", "numeric_bvp")
ROOT_TOL = 1e-12
MATCH_COND_MAX = 1e12
SCAN_HEADER = ("re_lambda", "im_lambda", "abs_H", "abs_H1", "abs_H2", "method")


@dataclass(frozen=True)
class TransferSample:
    lam: complex
    H1: complex
    H2: complex
    H: complex
    method: str

    def row(self):
        return [
            f"{self.lam.real:.17g}",
            f"{self.lam.imag:.17g}",
            f"{abs(self.H):.17g}",
            f"{abs(self.H1):.17g}",
            f"{abs(self.H2):.17g}",
            self.method,
        ]


def _require_right_half_plane(lam):
    lam = complex(lam)
    if not np.isfinite(lam) or lam.real <= 0:
        raise InvalidParams(f"transfer evaluation requires finite lambda with Re > 0, got {lam}")
    return lam


def characteristic_roots(kind, beta, lam):
    """Roots ``(r1, r2)`` of the characteristic polynomial, ``r1`` on the + branch.

    Dirichlet: ``r² - beta lam r - lam² = 0``.
    Mixed:     ``r² - beta lam r - lam² - 1 = 0``.
    """
    kind = ModelKind(kind)
    lam = complex(lam)
    beta = float(beta)
    if kind is ModelKind.DIRICHLET:
        if lam == 0:
            raise InvalidParams("lambda must be nonzero for the Dirichlet example")
        s = np.sqrt(beta**2 + 4.0)
        r1, r2 = lam / 2 * (beta + s), lam / 2 * (beta - s)
    else:
        root = np.sqrt(beta**2 * lam**2 / 4 + lam**2 + 1)
        r1, r2 = beta * lam / 2 + root, beta * lam / 2 - root
    if abs(r1 - r2) < ROOT_TOL * (1 + abs(r1)):
        raise CoincidentRoots(f"double characteristic root {r1} at lambda={lam}")
    return complex(r1), complex(r2)


def _dirichlet_half(cfg, lam):
    # sinh(d(xi-1)/2) sinh(d xi/2) / (sqrt(s) sinh(d/2)) scaled by exp(-d/2), d = lam s
    d = lam * cfg.s
    xi = cfg.xi
    return np.expm1(-d * (1 - xi)) * np.expm1(-d * xi) / (2 * cfg.s * np.expm1(-d))


def _q_plus(r, xi):
    """``cosh(r(xi-1)) exp(r xi) / sinh r`` without overflow."""
    if r.real < 0:
        return -_q_minus(-r, xi)
    return (np.exp(2 * r * (xi - 1)) + 1) / -np.expm1(-2 * r)


def _q_minus(r, xi):
    """``cosh(r(xi-1)) exp(-r xi) / sinh r`` without overflow."""
    if r.real < 0:
        return -_q_plus(-r, xi)
    return (np.exp(-2 * r) + np.exp(-2 * r * xi)) / -np.expm1(-2 * r)


def transfer_closed_form(cfg: ModelConfig, lam) -> TransferSample:
    """Closed-form ``H1``, ``H2`` and ``H`` at ``lam``.

    The Dirichlet halves do not depend on the sign of ``beta`` (they only
    see ``sqrt(beta² + 4)``), so ``H2 = H1`` there.
    """
    lam = _require_right_half_plane(lam)
    if cfg.kind is ModelKind.DIRICHLET:
        characteristic_roots(cfg.kind, cfg.beta, lam)
        characteristic_roots(cfg.kind, -cfg.beta, lam)
        H1 = _dirichlet_half(cfg, lam)
        # beta -> -beta leaves s unchanged
        H2 = H1
    else:
        r1, r2 = characteristic_roots(cfg.kind, cfg.beta, lam)
        scale = lam / (2 * (r1 - r2))
        H1 = scale * (_q_plus(r2, cfg.xi) - _q_plus(r1, cfg.xi))
        H2 = scale * (_q_minus(r2, cfg.xi) - _q_minus(r1, cfg.xi))
    H1, H2 = complex(H1), complex(H2)
    if not (np.isfinite(H1) and np.isfinite(H2)):
        raise OverflowGuard(f"closed-form transfer is not finite at lambda={lam}")
    return TransferSample(lam, H1, H2, H1 + H2, "closed_form")


def transfer_numeric_bvp(cfg: ModelConfig, lam, k=1.0) -> TransferSample:
    """Solve the jump problem by matching fundamental solutions at ``xi``.

    The state ``Y = (phi1, phi2, phi1', phi2')`` is propagated from each end
    with ``expm``; the two free components at either end and the interface
    conditions ``[Y] = (0, 0, k, 0)`` give a 4×4 system.
    """
    lam = _require_right_half_plane(lam)
    k = float(k)
    if k == 0 or not np.isfinite(k):
        raise InvalidParams(f"jump amplitude k must be finite and nonzero, got {k}")
    kappa = 0.0 if cfg.kind is ModelKind.DIRICHLET else 1.0
    a = lam**2 + kappa
    g = lam * cfg.beta
    K = np.array(
        [[0, 0, 1, 0], [0, 0, 0, 1], [a, 0, 0, g], [0, a, g, 0]],
        dtype=complex,
    )
    # free components at an end: velocities (Dirichlet) or (phi1, phi2') (mixed)
    free = [2, 3] if cfg.kind is ModelKind.DIRICHLET else [0, 3]
    left = expm(K * cfg.xi)[:, free]
    right = expm(-K * (1 - cfg.xi))[:, free]
    match = np.hstack([-left, right])
    cond = np.linalg.cond(match)
    if not np.isfinite(cond) or cond > MATCH_COND_MAX:
        raise SingularMatching(f"matching matrix condition {cond:.3e} at lambda={lam}")
    coef = np.linalg.solve(match, np.array([0, 0, k, 0], dtype=complex))
    Y = left @ coef[:2]
    x, y = Y[0], Y[1]
    H1 = complex(lam * (x + y) / (2 * k))
    H2 = complex(lam * (x - y) / (2 * k))
    return TransferSample(lam, H1, H2, complex(lam * x / k), "numeric_bvp")


def evaluate(cfg, lam, method="closed_form"):
    if method == "closed_form":
        return transfer_closed_form(cfg, lam)
    if method == "numeric_bvp":
        return transfer_numeric_bvp(cfg, lam)
    raise InvalidParams(f"method must be one of {METHODS}, got {method!r}")


def paper_h1_bound(cfg: ModelConfig, gamma):
    """Analytic bound on ``sup |H1|`` over ``Re lam = 2 gamma``.

    Dirichlet:
        cosh(g s (1-xi)) cosh(g s xi) / (s sinh(g s))
    Mixed, with ``a = g (beta + s)``, ``b = g (s - beta)``:
        cosh(a (xi-1)) cosh(a) exp(a xi) / (s sinh(a) sinh(b))
    Both are evaluated in scaled form.
    """
    g = float(gamma)
    if g <= 0:
        raise InvalidParams(f"gamma must be positive, got {gamma}")
    s, xi, beta = cfg.s, cfg.xi, cfg.beta
    if cfg.kind is ModelKind.DIRICHLET:
        a = g * s
        val = (1 + np.exp(-2 * a * (1 - xi))) * (1 + np.exp(-2 * a * xi)) / (2 * -np.expm1(-2 * a))
        return float(val / s)
    a = g * (beta + s)
    b = g * (s - beta)
    val = (
        np.exp(a - b)
        * (1 + np.exp(-2 * a * (1 - xi)))
        * (1 + np.exp(-2 * a))
        / (np.expm1(-2 * a) * np.expm1(-2 * b))
    )
    return float(val / s)


def scan(cfg, lambdas, methods=METHODS, threads=None):
    """Evaluate every ``lam`` with every method; samples ordered by method then ``lam``."""
    for m in methods:
        if m not in METHODS:
            raise InvalidParams(f"method must be one of {METHODS}, got {m!r}")
    jobs = [(m, complex(l)) for m in methods for l in lambdas]
    return pmap(lambda job: evaluate(cfg, job[1], job[0]), jobs, threads)


def write_scan_csv(samples, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SCAN_HEADER)
        for smp in samples:
            writer.writerow(smp.row())


@dataclass(frozen=True)
class VerticalLineSup:
    gamma: float
    re_lambda: float
    sup_H: float
    argmax_H: complex
    sup_H1: float
    argmax_H1: complex
    paper_bound: float
    samples: tuple

    def to_dict(self):
        return {
            "gamma": self.gamma,
            "re_lambda": self.re_lambda,
            "sup_H": self.sup_H,
            "argmax_H": [self.argmax_H.real, self.argmax_H.imag],
            "sup_H1": self.sup_H1,
            "argmax_H1": [self.argmax_H1.real, self.argmax_H1.imag],
            "paper_bound": self.paper_bound,
            "n_samples": len(self.samples),
        }


def vertical_line_sup(cfg, gamma, omega_max, n_samples=1001, method="closed_form", threads=None):
    """Grid maximum of ``|H|`` and ``|H1|`` on ``Re lam = 2 gamma``, ``|Im lam| <= omega_max``.

    Grids with ``n_samples - 1`` doubling are nested, so the estimate can only
    grow under that refinement.
    """
    gamma = float(gamma)
    if gamma <= 0 or omega_max <= 0:
        raise InvalidParams("gamma and omega_max must be positive")
    if n_samples < 100:
        raise InvalidParams(f"n_samples must be >= 100, got {n_samples}")
    im = np.linspace(-omega_max, omega_max, int(n_samples))
    lams = 2 * gamma + 1j * im
    samples = scan(cfg, lams, (method,), threads)
    absH = np.array([abs(s.H) for s in samples])
    absH1 = np.array([abs(s.H1) for s in samples])
    iH, iH1 = int(np.argmax(absH)), int(np.argmax(absH1))
    return VerticalLineSup(
        gamma,
        2 * gamma,
        float(absH[iH]),
        complex(lams[iH]),
        float(absH1[iH1]),
        complex(lams[iH1]),
        paper_h1_bound(cfg, gamma),
        tuple(samples),
    )
