"""Finite-dimensional realisation of the coupled second-order system.

A coupled pair

    w1'' + A1 w1 + B B^T w1' + C w2' = 0
    w2'' + A2 w2 - C^T w1'           = 0

is described by an :class:`OperatorQuadruple` ``(A1, A2, B, C)``.  This module
builds the change of variables ``P`` that turns it into a single damped
second-order equation ``W'' + A W + B0 B0^T W' = 0``, the first-order
generators of both forms, and the three equivalent expressions for the
open-loop transfer function.

First-order states are ordered ``(w1, w2, w1', w2')`` (sizes n1, n2, n1, n2).
Fractional powers are principal roots taken from a symmetric eigendecomposition.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla

from .errors import (
    DimensionMismatch,
    NearSingularResolvent,
    NotPositiveDefinite,
    NotSymmetric,
    NumericalError,
    SingularPencil,
    SqrtFailure,
    ValidationError,
)

SYM_TOL = 1e-10
PD_TOL = 1e-10
STRUCT_TOL = 1e-10
RESOLVENT_TOL = 1e-8
RESIDUAL_TOL = 1e-6


def _as_matrix(name, value, ncols=None):
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 1 and ncols == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise DimensionMismatch(f"{name} must be a 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    return arr


def _sym_root(M, name):
    """Return ``(M^{1/2}, M^{-1/2})`` for a symmetric positive-definite matrix."""
    try:
        evals, evecs = np.linalg.eigh(M)
    except np.linalg.LinAlgError as exc:
        raise SqrtFailure(f"eigendecomposition of {name} did not converge") from exc
    if evals[0] <= PD_TOL * max(abs(evals[-1]), 1.0):
        raise NotPositiveDefinite(
            f"{name} is not positive definite (min eigenvalue {evals[0]:.3e})"
        )
    root = (evecs * np.sqrt(evals)) @ evecs.T
    inv_root = (evecs / np.sqrt(evals)) @ evecs.T
    return root, inv_root


@dataclass(frozen=True, eq=False)
class OperatorQuadruple:
    """Matrices ``A1 (n1 x n1)``, ``A2 (n2 x n2)``, ``B (n1 x m)``, ``C (n1 x n2)``.

    Shapes are checked on construction. Symmetry and positivity are checked
    by :func:`validate_quadruple`; the square-root properties raise
    :class:`NotPositiveDefinite` lazily if they fail.
    """

    A1: np.ndarray
    A2: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        A1 = _as_matrix("A1", self.A1)
        A2 = _as_matrix("A2", self.A2)
        B = _as_matrix("B", self.B, ncols=1)
        C = _as_matrix("C", self.C)
        n1, n2 = A1.shape[0], A2.shape[0]
        if A1.shape != (n1, n1):
            raise DimensionMismatch(f"A1 must be square, got {A1.shape}")
        if A2.shape != (n2, n2):
            raise DimensionMismatch(f"A2 must be square, got {A2.shape}")
        if B.shape[0] != n1:
            raise DimensionMismatch(f"B must have {n1} rows, got {B.shape}")
        if C.shape != (n1, n2):
            raise DimensionMismatch(f"C must be {(n1, n2)}, got {C.shape}")
        for name, arr in (("A1", A1), ("A2", A2), ("B", B), ("C", C)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def dims(self):
        return self.A1.shape[0], self.A2.shape[0], self.B.shape[1]

    @cached_property
    def _roots1(self):
        return _sym_root(self.A1, "A1")

    @cached_property
    def _roots2(self):
        return _sym_root(self.A2, "A2")

    @property
    def sqrtA1(self):
        return self._roots1[0]

    @property
    def inv_sqrtA1(self):
        return self._roots1[1]

    @property
    def sqrtA2(self):
        return self._roots2[0]

    @property
    def inv_sqrtA2(self):
        return self._roots2[1]

    def to_dict(self):
        n1, n2, m = self.dims
        return {
            "n1": n1,
            "n2": n2,
            "m": m,
            "A1": self.A1.tolist(),
            "A2": self.A2.tolist(),
            "B": self.B.tolist(),
            "C": self.C.tolist(),
        }

    @classmethod
    def from_dict(cls, doc):
        q = cls(doc["A1"], doc["A2"], doc["B"], doc["C"])
        declared = tuple(int(doc[k]) for k in ("n1", "n2", "m"))
        if declared != q.dims:
            raise DimensionMismatch(f"declared dims {declared} but matrices give {q.dims}")
        return q

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))


class InitialData(NamedTuple):
    """Coupled state in the original coordinates ``(w1, w2, w1', w2')``."""

    w1: np.ndarray
    w2: np.ndarray
    w1dot: np.ndarray
    w2dot: np.ndarray

    @classmethod
    def zeros(cls, q):
        n1, n2, _ = q.dims
        return cls(np.zeros(n1), np.zeros(n2), np.zeros(n1), np.zeros(n2))

    def stacked(self):
        return np.concatenate([self.w1, self.w2, self.w1dot, self.w2dot])


def random_quadruple(rng, n1, n2, m=1, eig_range=(1.0, 100.0), coupling=1.0):
    """Draw a random well-conditioned quadruple (eigenvalues log-uniform in ``eig_range``)."""

    def spd(n):
        Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
        lo, hi = np.log(eig_range[0]), np.log(eig_range[1])
        evals = np.exp(rng.uniform(lo, hi, n))
        M = (Q * evals) @ Q.T
        return (M + M.T) / 2

    A1 = spd(n1)
    A2 = spd(n2)
    B = rng.standard_normal((n1, m))
    C = coupling * rng.standard_normal((n1, n2))
    return OperatorQuadruple(A1, A2, B, C)


# --------------------------------------------------------------------------
# validation
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    value: float
    threshold: float | None = None


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[Check, ...]

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def __getitem__(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self):
        return {
            "passed": self.passed,
            "checks": [
                {"name": c.name, "passed": c.passed, "value": c.value, "threshold": c.threshold}
                for c in self.checks
            ],
        }


def _rel_asym(M):
    scale = max(np.linalg.norm(M), np.finfo(float).tiny)
    return float(np.linalg.norm(M - M.T) / scale)


def validate_quadruple(q, strict=True):
    """Check symmetry, positivity and the bounded-extension norms of ``q``.

    With ``strict`` (the default) the first failed structural check raises
    the matching exception; otherwise all failures are only recorded in the
    returned report.
    """
    checks = []
    failures = []
    for name, M in (("A1", q.A1), ("A2", q.A2)):
        asym = _rel_asym(M)
        ok = asym <= SYM_TOL
        checks.append(Check(f"symmetric_{name}", ok, asym, SYM_TOL))
        if not ok:
            failures.append(NotSymmetric(f"{name} is not symmetric (relative residual {asym:.3e})"))
    for name, M in (("A1", q.A1), ("A2", q.A2)):
        evals = np.linalg.eigvalsh((M + M.T) / 2)
        ok = bool(evals[0] > PD_TOL * max(abs(evals[-1]), 1.0))
        checks.append(Check(f"min_eig_{name}", ok, float(evals[0]), 0.0))
        if not ok:
            failures.append(
                NotPositiveDefinite(f"{name} is not positive definite (min eigenvalue {evals[0]:.3e})")
            )
    if failures:
        if strict:
            raise failures[0]
        return ValidationReport(tuple(checks))

    norms = {
        "norm_C_invsqrtA2": np.linalg.norm(q.C @ q.inv_sqrtA2, 2),
        "norm_Ct_invsqrtA1": np.linalg.norm(q.C.T @ q.inv_sqrtA1, 2),
        "norm_Bt_invsqrtA1": np.linalg.norm(q.B.T @ q.inv_sqrtA1, 2),
    }
    for name, value in norms.items():
        checks.append(Check(name, bool(np.isfinite(value)), float(value), None))
    return ValidationReport(tuple(checks))


# --------------------------------------------------------------------------
# coupling bound
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class DeltaEstimate:
    delta_min: float
    admissible: bool


def estimate_delta(q):
    """Smallest ``delta`` with ``|<x, C y>| <= delta (|A1^½ x|² + |y|² + |C^T x|²)``.

    The ratio is a Rayleigh quotient of the symmetric pencil
    ``S = [[0, C/2], [C^T/2, 0]]`` against ``R = diag(A1 + C C^T, I)``, so the
    bound is its largest generalised eigenvalue. The spectrum is symmetric
    about zero, which takes care of the absolute value.
    """
    n1, n2, _ = q.dims
    S = np.zeros((n1 + n2, n1 + n2))
    S[:n1, n1:] = q.C / 2
    S[n1:, :n1] = q.C.T / 2
    R = sla.block_diag(q.A1 + q.C @ q.C.T, np.eye(n2))
    R = (R + R.T) / 2
    try:
        evals = sla.eigh(S, R, eigvals_only=True)
    except np.linalg.LinAlgError as exc:
        raise SingularPencil("right-hand quadratic form is not positive definite") from exc
    delta = max(float(evals[-1]), 0.0)
    return DeltaEstimate(delta, delta < 0.5)


# --------------------------------------------------------------------------
# change of variables and block operator
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TransformPair:
    P: np.ndarray
    Pinv: np.ndarray
    cond: float


def build_transform(q):
    """Assemble ``P`` mapping ``(w1, w2, w1', w2')`` to ``(u, v, u', v')`` and its inverse.

    ``u = w1``, ``v = A2^{-½}(w2' - C^T w1)``, ``u' = w1'``, ``v' = -A2^{½} w2``.
    """
    n1, n2, _ = q.dims
    I1 = np.eye(n1)
    Z = np.zeros
    S2, iS2 = q.sqrtA2, q.inv_sqrtA2
    P = np.block(
        [
            [I1, Z((n1, n2)), Z((n1, n1)), Z((n1, n2))],
            [-iS2 @ q.C.T, Z((n2, n2)), Z((n2, n1)), iS2],
            [Z((n1, n1)), Z((n1, n2)), I1, Z((n1, n2))],
            [Z((n2, n1)), -S2, Z((n2, n1)), Z((n2, n2))],
        ]
    )
    Pinv = np.block(
        [
            [I1, Z((n1, n2)), Z((n1, n1)), Z((n1, n2))],
            [Z((n2, n1)), Z((n2, n2)), Z((n2, n1)), -iS2],
            [Z((n1, n1)), Z((n1, n2)), I1, Z((n1, n2))],
            [q.C.T, S2, Z((n2, n1)), Z((n2, n2))],
        ]
    )
    ident_err = np.linalg.norm(P @ Pinv - np.eye(P.shape[0]))
    if ident_err > STRUCT_TOL * np.linalg.norm(P) * np.linalg.norm(Pinv):
        raise NumericalError(f"P @ Pinv deviates from identity by {ident_err:.3e}")
    return TransformPair(P, Pinv, float(np.linalg.cond(P)))


@dataclass(frozen=True, eq=False)
class BlockSystem:
    A: np.ndarray
    B0: np.ndarray
    sqrtA1: np.ndarray
    sqrtA2: np.ndarray
    sqrtA: np.ndarray

    def quadratic_form(self, x, y):
        z = np.concatenate([x, y])
        return float(z @ self.A @ z)


def build_block_system(q):
    """Block stiffness ``A = [[A1 + C C^T, C A2^½], [A2^½ C^T, A2]]`` and ``B0 = [B; 0]``."""
    n1, n2, m = q.dims
    S2 = q.sqrtA2
    A = np.block([[q.A1 + q.C @ q.C.T, q.C @ S2], [S2 @ q.C.T, q.A2]])
    A = (A + A.T) / 2
    sqrtA, _ = _sym_root(A, "A")
    B0 = np.vstack([q.B, np.zeros((n2, m))])
    return BlockSystem(A, B0, q.sqrtA1, S2, sqrtA)


# --------------------------------------------------------------------------
# first-order generators
# --------------------------------------------------------------------------


class GeneratorKind(enum.Enum):
    COUPLED = "coupled"
    TRANSFORMED = "transformed"
    OPEN_LOOP_COUPLED = "open_loop_coupled"
    OPEN_LOOP_TRANSFORMED = "open_loop_transformed"


@dataclass(frozen=True, eq=False)
class FirstOrderGenerator:
    M: np.ndarray
    kind: GeneratorKind


def build_generators(q, damping=True):
    """Return the generators of the coupled form and of the transformed form.

    With ``damping=False`` the feedback block ``-B B^T`` is dropped, giving
    the open-loop generators.
    """
    n1, n2, _ = q.dims
    n = n1 + n2
    D = q.B @ q.B.T if damping else np.zeros((n1, n1))
    Z = np.zeros

    M1 = np.block(
        [
            [Z((n, n)), np.eye(n)],
            [-q.A1, Z((n1, n2)), -D, -q.C],
            [Z((n2, n1)), -q.A2, q.C.T, Z((n2, n2))],
        ]
    )
    blk = build_block_system(q)
    damp = np.zeros((n, n))
    damp[:n1, :n1] = D
    M2 = np.block([[Z((n, n)), np.eye(n)], [-blk.A, -damp]])

    if damping:
        kinds = GeneratorKind.COUPLED, GeneratorKind.TRANSFORMED
    else:
        kinds = GeneratorKind.OPEN_LOOP_COUPLED, GeneratorKind.OPEN_LOOP_TRANSFORMED
    return FirstOrderGenerator(M1, kinds[0]), FirstOrderGenerator(M2, kinds[1])


def conjugation_residual(q, damping=True):
    """Relative Frobenius defect of ``A_coupled = P^{-1} A_transformed P``."""
    g1, g2 = build_generators(q, damping=damping)
    tp = build_transform(q)
    diff = g1.M - tp.Pinv @ g2.M @ tp.P
    return float(np.linalg.norm(diff) / np.linalg.norm(g1.M))


# --------------------------------------------------------------------------
# transfer function
# --------------------------------------------------------------------------


class TransferTriple(NamedTuple):
    G1: np.ndarray
    G2: np.ndarray
    Gamma_form: np.ndarray

    def max_discrepancy(self):
        """Largest pairwise entrywise difference relative to ``1 + |G|``."""
        scale = 1.0 + np.max(np.abs(self.G2))
        pairs = ((self.G1, self.G2), (self.G1, self.Gamma_form), (self.G2, self.Gamma_form))
        return float(max(np.max(np.abs(a - b)) for a, b in pairs) / scale)


def _checked_solve(M, rhs, what):
    try:
        X = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError as exc:
        raise NearSingularResolvent(f"{what} is singular") from exc
    res = np.linalg.norm(M @ X - rhs) / max(np.linalg.norm(rhs), np.finfo(float).tiny)
    if not np.isfinite(res) or res > RESIDUAL_TOL:
        raise NearSingularResolvent(f"{what}: solve residual {res:.3e} exceeds {RESIDUAL_TOL}")
    return X


def gamma_matrix(q, lam):
    """``[lam² + A1 + lam² C (lam² + A2)^{-1} C^T]^{-1}``."""
    n1, n2, _ = q.dims
    lam2 = complex(lam) ** 2
    inner = _checked_solve(lam2 * np.eye(n2) + q.A2, q.C.T.astype(complex), "lam^2 + A2")
    K = lam2 * np.eye(n1) + q.A1 + lam2 * (q.C @ inner)
    return _checked_solve(K, np.eye(n1, dtype=complex), "Gamma")


def transfer_resolvent_pair(q, lam):
    """Evaluate the open-loop transfer function three independent ways.

    * ``G1``: first-order resolvent of the coupled open-loop generator, with
      the input entering and the output read from the ``w1'`` slot.
    * ``G2``: ``lam B0^T (lam² + A)^{-1} B0`` from the block operator.
    * ``Gamma_form``: ``lam B^T Gamma B``.
    """
    lam = complex(lam)
    if lam.real <= 0:
        raise ValidationError(f"transfer evaluation requires Re(lambda) > 0, got {lam}")
    n1, n2, m = q.dims
    n = n1 + n2

    g1, _ = build_generators(q, damping=False)
    E = np.zeros((2 * n, m))
    E[n : n + n1] = q.B
    X = _checked_solve(lam * np.eye(2 * n) - g1.M, E.astype(complex), "lambda - A1_open")
    G1 = E.T @ X

    blk = build_block_system(q)
    Y = _checked_solve(lam**2 * np.eye(n) + blk.A, blk.B0.astype(complex), "lambda^2 + A")
    G2 = lam * (blk.B0.T @ Y)

    Gamma = gamma_matrix(q, lam)
    G3 = lam * (q.B.T @ Gamma @ q.B)

    return TransferTriple(G1, G2, G3)
