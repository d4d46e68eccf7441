"""Closed loop with delayed point feedback.

Integrates the transformed second-order system

    W'' + A W + alpha1 B0 B0^T W'(t) + alpha2 B0 B0^T W'(t - tau) = 0

with a trapezoidal (Crank-Nicolson) step.  The conservative part and the
instantaneous damping are implicit; the delayed output is read from a ring
buffer.  The ring stores the step-averaged outputs ``B0^T (V_k + V_{k+1})/2``,
i.e. the output at each step midpoint, so the delayed read at step k is the
midpoint value exactly ``tau`` earlier and the buffer integral is a midpoint
rule.  With that choice the discrete delay energy obeys the same
dissipation inequality as the continuous one, step by step.

The delay energy uses weight ``mu / (2 tau)`` on ``int_{-tau}^0 |B^T w1'|²``,
which makes ``tau*alpha2 <= mu <= tau*(2 alpha1 - alpha2)`` the dissipativity
window.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import BlowUp, DegenerateWindow, InvalidParams, StepMismatch
from .galerkin import InitialData, OperatorQuadruple, build_block_system

BLOWUP_FACTOR = 1e6
STEP_TOL = 1e-9
MIN_FIT_SAMPLES = 10


def delay_weight_bounds(alpha1, alpha2, tau):
    """Interval ``[tau*alpha2, tau*(2 alpha1 - alpha2)]`` of admissible energy weights."""
    if tau <= 0:
        raise InvalidParams(f"tau must be positive, got {tau}")
    if not 0 <= alpha2 <= alpha1:
        raise InvalidParams(f"need 0 <= alpha2 <= alpha1, got alpha1={alpha1}, alpha2={alpha2}")
    return tau * alpha2, tau * (2 * alpha1 - alpha2)


@dataclass(frozen=True)
class DelayParams:
    alpha1: float
    alpha2: float
    tau: float
    mu: float | None = None

    def __post_init__(self):
        for name in ("alpha1", "alpha2", "tau"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if self.alpha1 < 0 or self.alpha2 < 0:
            raise InvalidParams("damping gains must be nonnegative")
        if self.alpha2 > self.alpha1:
            raise InvalidParams(
                f"delayed gain alpha2={self.alpha2} exceeds instantaneous gain alpha1={self.alpha1}"
            )
        lo, hi = delay_weight_bounds(self.alpha1, self.alpha2, self.tau)
        mu = (lo + hi) / 2 if self.mu is None else float(self.mu)
        if not lo - 1e-12 <= mu <= hi + 1e-12:
            raise InvalidParams(f"energy weight mu={mu} outside admissible [{lo}, {hi}]")
        object.__setattr__(self, "mu", mu)

    def to_dict(self):
        return {"alpha1": self.alpha1, "alpha2": self.alpha2, "tau": self.tau, "mu": self.mu}


@dataclass(eq=False)
class DelayState:
    """Transformed state ``(W, W')`` plus the ring of midpoint outputs.

    ``history[(head + j) % L]`` is the output at ``t - tau + (j + ½) dt``;
    ``head`` points at the oldest slot.
    """

    w: np.ndarray
    wdot: np.ndarray
    history: np.ndarray
    head: int
    t: float
    dt: float

    @property
    def L(self):
        return self.history.shape[0]

    def ordered_history(self):
        return np.roll(self.history, -self.head, axis=0)


@dataclass(frozen=True, eq=False)
class EnergyTrace:
    times: np.ndarray
    Ed: np.ndarray
    Etilde: np.ndarray

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["t", "Ed", "Etilde"])
            for row in zip(self.times, self.Ed, self.Etilde):
                writer.writerow([f"{v:.17g}" for v in row])


@dataclass(frozen=True)
class DecayFit:
    omega: float
    C: float
    residual: float
    window: tuple[float, float]
    n_samples: int = field(default=0)


class _Operators:
    """Matrices reused by the energy functionals."""

    def __init__(self, q: OperatorQuadruple):
        self.q = q
        n1, n2, _ = q.dims
        self.n1, self.n2 = n1, n2
        blk = build_block_system(q)
        self.A = blk.A
        self.B0 = blk.B0

    def to_transformed(self, init: InitialData):
        q = self.q
        u = np.asarray(init.w1, float)
        v = q.inv_sqrtA2 @ (np.asarray(init.w2dot, float) - q.C.T @ u)
        udot = np.asarray(init.w1dot, float)
        vdot = -q.sqrtA2 @ np.asarray(init.w2, float)
        return np.concatenate([u, v]), np.concatenate([udot, vdot])

    def to_original(self, W, V):
        q, n1 = self.q, self.n1
        u, v = W[:n1], W[n1:]
        udot, vdot = V[:n1], V[n1:]
        w2 = -q.inv_sqrtA2 @ vdot
        w2dot = q.C.T @ u + q.sqrtA2 @ v
        return InitialData(u.copy(), w2, udot.copy(), w2dot)

    def state_energy(self, W, V):
        """½(|A1^½ w1|² + |A2^½ w2|² + |w1'|² + |w2'|²) in original coordinates."""
        q = self.q
        orig = self.to_original(W, V)
        pot = orig.w1 @ q.A1 @ orig.w1 + orig.w2 @ q.A2 @ orig.w2
        kin = orig.w1dot @ orig.w1dot + orig.w2dot @ orig.w2dot
        return 0.5 * (pot + kin)

    def transformed_energy(self, W, V):
        """½(|A1^½ u|² + |A2^½ v|² + |u'|² + |v'|²), the product-norm energy of ``(u, v)``."""
        q, n1 = self.q, self.n1
        u, v = W[:n1], W[n1:]
        pot = u @ q.A1 @ u + v @ q.A2 @ v
        return 0.5 * (pot + V @ V)


def _model_quad(model):
    return model if isinstance(model, OperatorQuadruple) else model.quad


def _history_term(params, state):
    hist = state.history
    return params.mu / (2.0 * params.tau) * state.dt * float(np.sum(hist * hist))


def delay_energy(model, params, state):
    """State energy plus ``(mu / 2 tau) int_{-tau}^0 |B^T w1'(t + s)|² ds``."""
    ops = _Operators(_model_quad(model))
    return ops.state_energy(state.w, state.wdot) + _history_term(params, state)


def transformed_delay_energy(model, params, state):
    ops = _Operators(_model_quad(model))
    return ops.transformed_energy(state.w, state.wdot) + _history_term(params, state)


def _steps_per_delay(tau, dt):
    ratio = tau / dt
    L = int(round(ratio))
    if L < 1 or abs(ratio - L) > STEP_TOL * max(1.0, ratio):
        raise StepMismatch(f"tau={tau} is not a positive integer multiple of dt={dt}")
    return L


def initial_state(model, params, init, dt, history=None):
    """Build the starting :class:`DelayState`.

    ``history(s)`` returns the string-1 velocity coefficients at ``s`` in
    ``[-tau, 0)``; it is sampled at the step midpoints. Default is zero.
    """
    q = _model_quad(model)
    ops = _Operators(q)
    L = _steps_per_delay(params.tau, dt)
    if init is None:
        init = InitialData.zeros(q)
    W, V = ops.to_transformed(InitialData(*init))
    m = q.dims[2]
    hist = np.zeros((L, m))
    if history is not None:
        for j in range(L):
            s = -params.tau + (j + 0.5) * dt
            hist[j] = q.B.T @ np.asarray(history(s), dtype=float)
    return DelayState(W, V, hist, 0, 0.0, float(dt))


def simulate(model, params, init=None, dt=1 / 128, T=10.0, history=None):
    """Integrate on ``[0, T]`` and return ``(EnergyTrace, final DelayState)``.

    Energies are sampled at every step. Raises :class:`BlowUp` if the delay
    energy exceeds ``1e6`` times its initial value or turns non-finite.
    """
    q = _model_quad(model)
    if dt <= 0 or T <= 0:
        raise InvalidParams(f"dt and T must be positive, got dt={dt}, T={T}")
    ops = _Operators(q)
    state = initial_state(model, params, init, dt, history)
    n = ops.n1 + ops.n2
    b = ops.B0
    n_steps = int(round(T / dt))

    # z = (W, V);  (I - dt/2 M) z+ = (I + dt/2 M) z + dt F d
    M = np.zeros((2 * n, 2 * n))
    M[:n, n:] = np.eye(n)
    M[n:, :n] = -ops.A
    M[n:, n:] = -params.alpha1 * (b @ b.T)
    F = np.zeros((2 * n, b.shape[1]))
    F[n:] = -params.alpha2 * b
    lhs = np.eye(2 * n) - 0.5 * dt * M
    step = np.linalg.solve(lhs, np.eye(2 * n) + 0.5 * dt * M)
    kick = dt * np.linalg.solve(lhs, F)

    hist = state.history
    L = hist.shape[0]
    head = state.head
    z = np.concatenate([state.w, state.wdot])
    weight = params.mu / (2.0 * params.tau) * dt
    hist_sq = float(np.sum(hist * hist))

    times = np.empty(n_steps + 1)
    Ed = np.empty(n_steps + 1)
    Et = np.empty(n_steps + 1)

    def record(k, z):
        W, V = z[:n], z[n:]
        times[k] = k * dt
        Ed[k] = ops.state_energy(W, V) + weight * hist_sq
        Et[k] = ops.transformed_energy(W, V) + weight * hist_sq

    record(0, z)
    E0 = Ed[0]
    for k in range(n_steps):
        delayed = hist[head]
        z_new = step @ z + kick @ delayed
        y_mid = 0.5 * (b.T @ (z[n:] + z_new[n:]))
        hist[head] = y_mid
        hist_sq = float(np.sum(hist * hist))
        head = (head + 1) % L
        z = z_new
        record(k + 1, z)
        e = Ed[k + 1]
        if not np.isfinite(e) or (E0 > 0 and e > BLOWUP_FACTOR * E0):
            raise BlowUp(f"delay energy reached {e:.3e} at t={times[k + 1]:.6g} (initial {E0:.3e})")

    final = DelayState(z[:n].copy(), z[n:].copy(), hist, head, n_steps * dt, float(dt))
    return EnergyTrace(times, Ed, Et), final


def fit_decay_rate(trace, window=None):
    """Least-squares line through ``(t, log Ed)`` on ``window``.

    ``omega`` is minus the slope and ``C = exp(intercept) / Ed(0)``; a
    non-positive ``omega`` means no decay was observed. Samples after the
    first non-positive energy are dropped.
    """
    t = np.asarray(trace.times)
    E = np.asarray(trace.Ed)
    if window is None:
        window = (float(t[0]), float(t[-1]))
    t0, t1 = window
    if t1 <= t0:
        raise DegenerateWindow(f"window {window} is empty")
    sel = (t >= t0 - 1e-12) & (t <= t1 + 1e-12)
    tw, Ew = t[sel], E[sel]
    nonpos = np.flatnonzero(Ew <= 0)
    if nonpos.size:
        tw, Ew = tw[: nonpos[0]], Ew[: nonpos[0]]
    if tw.size < MIN_FIT_SAMPLES:
        raise DegenerateWindow(f"only {tw.size} usable samples in window {window}")
    logE = np.log(Ew)
    design = np.column_stack([tw, np.ones_like(tw)])
    (slope, intercept), *_ = np.linalg.lstsq(design, logE, rcond=None)
    resid = logE - design @ np.array([slope, intercept])
    rms = float(np.sqrt(np.mean(resid**2)))
    C = float(np.exp(intercept) / E[0]) if E[0] > 0 else float("nan")
    return DecayFit(float(-slope), C, rms, (float(t0), float(t1)), int(tw.size))
