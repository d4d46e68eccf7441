"""Galerkin truncations of the two coupled-string examples.

``dirichlet``
    Both strings clamped, ``A1 = A2 = -d²/dx²``, orthonormal sine basis
    ``√2 sin(nπx)``, n = 1..N.  The coupling ``β d/dx`` leaves the sine span,
    so its matrix is the L² projection.

``mixed``
    ``A1 = A2 = -d²/dx² + I``; string 1 has Neumann ends (basis ``1``,
    ``√2 cos(nπx)``, n = 0..N), string 2 Dirichlet ends (sine basis, n = 1..N).
    Here ``β d/dx`` maps sine n exactly onto cosine n.

Point control at ``xi`` enters through ``B = (basis values at xi)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .errors import FrequencyMismatch, InvalidParams
from .galerkin import InitialData, OperatorQuadruple

SQRT2 = np.sqrt(2.0)


class ModelKind(str, enum.Enum):
    DIRICHLET = "dirichlet"
    MIXED = "mixed"


@dataclass(frozen=True)
class ModelConfig:
    kind: ModelKind
    beta: float
    xi: float
    N: int

    def __post_init__(self):
        try:
            kind = ModelKind(self.kind)
        except ValueError as exc:
            raise InvalidParams(f"unknown model kind {self.kind!r}") from exc
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "xi", float(self.xi))
        if int(self.N) != self.N:
            raise InvalidParams(f"N must be an integer, got {self.N}")
        object.__setattr__(self, "N", int(self.N))
        if not 0.0 < self.xi < 1.0:
            raise InvalidParams(f"control point xi must lie in (0, 1), got {self.xi}")
        if not 0.0 <= self.beta < 1.0:
            raise InvalidParams(f"coupling beta must lie in [0, 1), got {self.beta}")
        if self.N < 2:
            raise InvalidParams(f"truncation order N must be >= 2, got {self.N}")

    @property
    def s(self):
        """``sqrt(beta² + 4)``, the wave-speed factor of the coupled system."""
        return float(np.sqrt(self.beta**2 + 4.0))

    def to_dict(self):
        return {"kind": self.kind.value, "beta": self.beta, "xi": self.xi, "N": self.N}

    @classmethod
    def from_dict(cls, doc):
        return cls(doc["kind"], doc["beta"], doc["xi"], doc["N"])


@dataclass(frozen=True, eq=False)
class ModalModel:
    cfg: ModelConfig
    quad: OperatorQuadruple
    evalB: np.ndarray
    index1: np.ndarray
    index2: np.ndarray
    basis1: str
    basis2: str
    coupling_exact: bool


def _modes(cfg):
    if cfg.kind is ModelKind.DIRICHLET:
        return np.arange(1, cfg.N + 1), np.arange(1, cfg.N + 1)
    return np.arange(0, cfg.N + 1), np.arange(1, cfg.N + 1)


def point_control_vector(cfg):
    """Values of the orthonormal basis of string 1 at the control point."""
    idx1, _ = _modes(cfg)
    if cfg.kind is ModelKind.DIRICHLET:
        return SQRT2 * np.sin(idx1 * np.pi * cfg.xi)
    out = SQRT2 * np.cos(idx1 * np.pi * cfg.xi)
    out[0] = 1.0
    return out


def dirichlet_coupling(beta, N):
    """Projection of ``beta d/dx`` onto the sine basis.

    Entry (m, n) is ``2 beta n pi int_0^1 sin(m pi x) cos(n pi x) dx``, which is
    ``4 beta m n / (m² - n²)`` when m + n is odd and zero otherwise.
    """
    m = np.arange(1, N + 1)[:, None]
    n = np.arange(1, N + 1)[None, :]
    odd = (m + n) % 2 == 1
    with np.errstate(divide="ignore", invalid="ignore"):
        C = np.where(odd, 4.0 * beta * m * n / (m**2 - n**2), 0.0)
    return C


def assemble_model(cfg):
    idx1, idx2 = _modes(cfg)
    evalB = point_control_vector(cfg)
    if cfg.kind is ModelKind.DIRICHLET:
        A1 = np.diag((idx1 * np.pi) ** 2)
        A2 = np.diag((idx2 * np.pi) ** 2)
        C = dirichlet_coupling(cfg.beta, cfg.N)
        basis1 = basis2 = "sine"
        exact = False
    else:
        A1 = np.diag((idx1 * np.pi) ** 2 + 1.0)
        A2 = np.diag((idx2 * np.pi) ** 2 + 1.0)
        # sine n differentiates to n pi times cosine n; row 0 is the constant mode
        C = np.zeros((cfg.N + 1, cfg.N))
        C[idx2, idx2 - 1] = cfg.beta * idx2 * np.pi
        basis1, basis2 = "cosine", "sine"
        exact = True
    quad = OperatorQuadruple(A1, A2, evalB.reshape(-1, 1), C)
    return ModalModel(cfg, quad, evalB, idx1, idx2, basis1, basis2, exact)


# --------------------------------------------------------------------------
# conservative adjoint solutions
# --------------------------------------------------------------------------

FORMULAS = ("paper", "exact")


@dataclass(frozen=True, eq=False)
class ModalState:
    """Superposition ``sum_k a_k exp(lam_k t) (mode shape)`` of the conservative system.

    ``n`` is the signed mode index, ``branch`` the ±1 root selector (always +1
    for the Dirichlet example).
    """

    n: np.ndarray
    branch: np.ndarray
    lam: np.ndarray
    a: np.ndarray

    def __post_init__(self):
        n = np.asarray(self.n, dtype=int)
        branch = np.asarray(self.branch, dtype=int)
        lam = np.asarray(self.lam, dtype=complex)
        a = np.broadcast_to(np.asarray(self.a, dtype=complex), lam.shape).copy()
        if not (n.shape == branch.shape == lam.shape):
            raise InvalidParams("mode index, branch and frequency arrays must have equal length")
        for name, v in (("n", n), ("branch", branch), ("lam", lam), ("a", a)):
            object.__setattr__(self, name, v)

    def with_coefficients(self, a):
        return replace(self, a=a)

    def __len__(self):
        return len(self.n)


def mode_frequencies(cfg, n, branch, formula="paper"):
    """Frequencies for given signed mode indices and branches.

    ``formula="paper"`` reproduces the published expressions. For the mixed
    example these carry ``beta² + 4`` where the modal equations of the
    truncated operator give ``4``; ``formula="exact"`` uses the latter and
    matches the eigenvalues of the conservative generator.
    """
    if formula not in FORMULAS:
        raise InvalidParams(f"formula must be one of {FORMULAS}, got {formula!r}")
    n = np.asarray(n, dtype=float)
    branch = np.asarray(branch, dtype=float)
    b = cfg.beta
    if cfg.kind is ModelKind.DIRICHLET:
        return 2j * n * np.pi / cfg.s + 0.0 * branch
    denom = cfg.s**2 if formula == "paper" else 4.0
    centre = 2.0 * n * np.pi * b / denom
    radius = np.sqrt(4 * n**2 * np.pi**2 * b**2 / denom**2 + (4 + 4 * n**2 * np.pi**2) / denom)
    return 1j * (centre + branch * radius)


def adjoint_frequencies(cfg, n_max=None, formula="paper", include_zero=False):
    """All modes with ``0 < |n| <= n_max`` (default ``N``), unit coefficients."""
    n_max = cfg.N if n_max is None else int(n_max)
    if n_max < 1:
        raise InvalidParams("n_max must be >= 1")
    pos = np.arange(1, n_max + 1)
    ns = np.concatenate([-pos[::-1], pos])
    if include_zero:
        if cfg.kind is not ModelKind.MIXED:
            raise InvalidParams("only the mixed example has a constant mode")
        ns = np.concatenate([[0], ns])
    if cfg.kind is ModelKind.DIRICHLET:
        n = ns
        branch = np.ones_like(ns)
    else:
        n = np.repeat(ns, 2)
        branch = np.tile([1, -1], len(ns))
    lam = mode_frequencies(cfg, n, branch, formula)
    return ModalState(n, branch, lam, np.ones(len(n)))


def trace_coefficients(cfg, n):
    """Factor multiplying mode ``n`` in the velocity trace at ``xi``."""
    n = np.asarray(n, dtype=float)
    if cfg.kind is ModelKind.DIRICHLET:
        return np.cos(n * cfg.beta * np.pi * cfg.xi / cfg.s) * np.sin(n * np.pi * cfg.xi)
    return np.cos(n * np.pi * cfg.xi)


def check_frequencies(cfg, state, tol=1e-9):
    """Raise :class:`FrequencyMismatch` unless every frequency fits one of the formulas."""
    lam = state.lam
    scale = 1.0 + np.abs(lam)
    ok = np.zeros(len(lam), dtype=bool)
    for formula in FORMULAS:
        ref = mode_frequencies(cfg, state.n, state.branch, formula)
        ok |= np.abs(lam - ref) <= tol * scale
    if not np.all(ok):
        bad = int(np.flatnonzero(~ok)[0])
        raise FrequencyMismatch(
            f"frequency {lam[bad]} of mode n={state.n[bad]} (branch {state.branch[bad]}) "
            f"does not belong to the {cfg.kind.value} example with beta={cfg.beta}"
        )


def adjoint_trace(cfg, state, t):
    """Velocity trace ``d/dt phi(t, xi) = sum lam_n a_n exp(lam_n t) c_n``."""
    check_frequencies(cfg, state)
    t = np.asarray(t, dtype=float)
    c = trace_coefficients(cfg, state.n)
    w = state.lam * state.a * c
    phase = np.exp(np.multiply.outer(t, state.lam))
    return phase @ w


def _dirichlet_mode_shapes(cfg, n, x):
    theta = n * cfg.beta * np.pi / cfg.s
    phi = np.cos(theta * x) * np.sin(n * np.pi * x)
    psi = 1j * np.sin(theta * x) * np.sin(n * np.pi * x)
    return phi, psi


def modal_initial_data(model, state):
    """Real initial data ``Re(sum a_k (mode_k, lam_k mode_k))`` in the Galerkin basis.

    For the mixed example the mode pair is ``(cos(n pi x), -i sin(n pi x))``,
    exact for the truncation when the frequencies come from
    ``formula="exact"``. The Dirichlet mode shapes
    ``(cos(theta x) sin(n pi x), i sin(theta x) sin(n pi x))`` are projected
    onto the sine basis by Gauss-Legendre quadrature.
    """
    cfg = model.cfg
    n1, n2, _ = model.quad.dims
    c1 = np.zeros(n1, dtype=complex)
    c2 = np.zeros(n2, dtype=complex)
    d1 = np.zeros(n1, dtype=complex)
    d2 = np.zeros(n2, dtype=complex)
    if cfg.kind is ModelKind.MIXED:
        for n, lam, a in zip(state.n, state.lam, state.a):
            k = abs(int(n))
            if k > cfg.N:
                raise InvalidParams(f"mode {n} exceeds truncation N={cfg.N}")
            ca = a if k == 0 else a / SQRT2
            c1[k] += ca
            d1[k] += lam * ca
            if k > 0:
                cb = np.sign(n) * (-1j) * a / SQRT2
                c2[k - 1] += cb
                d2[k - 1] += lam * cb
    else:
        nodes, weights = np.polynomial.legendre.leggauss(64)
        panels = 4 * (cfg.N + int(np.max(np.abs(state.n), initial=1)))
        edges = np.linspace(0.0, 1.0, panels + 1)
        half = np.diff(edges) / 2
        x = (edges[:-1, None] + half[:, None] * (nodes[None, :] + 1)).ravel()
        w = (half[:, None] * weights[None, :]).ravel()
        basis = SQRT2 * np.sin(np.outer(model.index1, np.pi * x))
        for n, lam, a in zip(state.n, state.lam, state.a):
            phi, psi = _dirichlet_mode_shapes(cfg, float(n), x)
            pc = basis @ (w * phi) * a
            qc = basis @ (w * psi) * a
            c1 += pc
            c2 += qc
            d1 += lam * pc
            d2 += lam * qc
    return InitialData(c1.real, c2.real, d1.real, d2.real)
