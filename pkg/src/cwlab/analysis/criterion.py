"""Rational control-point criterion for the mixed example.

``xi = p/q`` in lowest terms with ``p`` odd is the published stability rule.
The verdict always carries the infimum of ``|cos(n pi xi)|`` as well, since
that quantity vanishes exactly when ``q`` is even and the two need not agree.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd

from ..errors import InvalidParams
from .observability import mixed_modal_infimum

DEFAULT_TOL = 1e-9
DEFAULT_DENOM_CAP = 10**4
IRRATIONAL_SCAN = 1000


def convergents(x):
    """Continued-fraction convergents ``(p, q)`` of ``x`` (exact for floats)."""
    r = Fraction(x)
    p0, q0, p1, q1 = 0, 1, 1, 0
    while True:
        a = r.numerator // r.denominator
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        yield p1, q1
        frac = r - a
        if frac == 0:
            return
        r = 1 / frac


@dataclass(frozen=True)
class CriterionVerdict:
    xi: float
    rational: bool
    p: int | None
    q: int | None
    paper_rule: bool
    modal_infimum: float
    argmin_n: int
    N_scan: int

    def to_dict(self):
        return {
            "xi": self.xi,
            "rational": self.rational,
            "p": self.p,
            "q": self.q,
            "paper_rule": self.paper_rule,
            "modal_infimum": self.modal_infimum,
            "argmin_n": self.argmin_n,
        }


def rational_approximation(xi, denom_cap=DEFAULT_DENOM_CAP, tol=DEFAULT_TOL):
    """First convergent with ``q <= denom_cap`` and ``|xi - p/q| <= tol``, else ``None``."""
    for p, q in convergents(xi):
        if q > denom_cap:
            return None
        if abs(Fraction(xi) - Fraction(p, q)) <= tol:
            return p, q
    return None


def stability_criterion(xi, denom_cap=DEFAULT_DENOM_CAP, tol=DEFAULT_TOL, N_scan=None):
    """Verdict of the ``p`` odd rule together with the modal infimum.

    ``N_scan`` defaults to ``10 q`` for a detected rational and 1000 otherwise.
    """
    xi = float(xi)
    if not 0.0 < xi < 1.0:
        raise InvalidParams(f"xi must lie in (0, 1), got {xi}")
    if denom_cap < 2:
        raise InvalidParams(f"denom_cap must be >= 2, got {denom_cap}")
    if not tol > 0:
        raise InvalidParams(f"tol must be positive, got {tol}")
    pq = rational_approximation(xi, int(denom_cap), tol)
    if pq is None:
        p = q = None
        rule = False
        scan = IRRATIONAL_SCAN if N_scan is None else int(N_scan)
    else:
        p, q = pq
        assert gcd(p, q) == 1
        rule = p % 2 == 1
        scan = 10 * q if N_scan is None else int(N_scan)
    # a detected rational is scanned at p/q itself, so the period pattern is exact
    inf, argmin = mixed_modal_infimum(xi if pq is None else p / q, scan)
    return CriterionVerdict(xi, pq is not None, p, q, rule, inf, argmin, scan)
