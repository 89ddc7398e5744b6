"""Adaptive embedded Runge-Kutta integration with smooth dense output.

The propagating scheme is the Dormand-Prince 5(4) pair with PI step-size
control. Node values, node derivatives and (for second-order mechanical
structure) node second derivatives are kept, so profiles expose a piecewise
quintic Hermite interpolant that is C2 across steps. The tight interpolant
matters downstream: verification grids apply third-order finite-difference
stencils to reconstructed fields, which amplify any interpolation roughness
by 1/dx^3.

The independent cross-check integrator (different order family) is scipy's
DOP853, wrapped at the bottom of this module.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, SingularStateError, StepUnderflowError

__all__ = [
    "OdeResult",
    "SecondOrderDense",
    "integrate_adaptive",
    "oracle_terminal_state",
]

# Dormand-Prince 5(4) tableau, FSAL form.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = (
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
)
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# Weights of (5th order - 4th order), applied to k1..k7.
_E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
_PI_ALPHA = 0.7 / 5.0
_PI_BETA = 0.4 / 5.0


@dataclass
class OdeResult:
    """Raw output of the adaptive integrator.

    ``ts``/``ys``/``fs`` hold the accepted nodes, states and RHS values.
    ``status`` is one of ``"completed"``, ``"guard"`` (a guard function
    crossed zero; ``event_t``/``event_y`` locate the crossing) or
    ``"underflow"`` (step size collapsed, typically a movable singularity).
    """

    ts: np.ndarray
    ys: np.ndarray
    fs: np.ndarray
    status: str
    event_t: float | None = None
    event_y: np.ndarray | None = None
    nfev: int = 0
    n_accepted: int = 0
    n_rejected: int = 0


def _rms_norm(x):
    return float(np.sqrt(np.mean(x * x)))


def _initial_step(f, t0, y0, f0, direction, rtol, atol, max_step, span):
    scale = atol + rtol * np.abs(y0)
    d0 = _rms_norm(y0 / scale)
    d1 = _rms_norm(f0 / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span)
    try:
        y1 = y0 + h0 * direction * f0
        f1 = f(t0 + h0 * direction, y1)
        d2 = _rms_norm((f1 - f0) / scale) / h0
    except (SingularStateError, FloatingPointError, ZeroDivisionError):
        d2 = d1
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, max_step, span)


def _cubic_state(t, t0, h, y0, f0, y1, f1):
    # local cubic Hermite, used only for guard localization inside a step
    s = (t - t0) / h
    h00 = (1 + 2 * s) * (1 - s) ** 2
    h10 = s * (1 - s) ** 2
    h01 = s * s * (3 - 2 * s)
    h11 = s * s * (s - 1)
    return h00 * y0 + h * h10 * f0 + h01 * y1 + h * h11 * f1


def integrate_adaptive(
    f: Callable[[float, np.ndarray], np.ndarray],
    t0: float,
    y0: Sequence[float],
    t_end: float,
    rtol: float,
    atol: float,
    max_step: float = np.inf,
    guard: Callable[[float, np.ndarray], float] | None = None,
    max_steps: int = 1_000_000,
) -> OdeResult:
    """Integrate ``y' = f(t, y)`` from ``t0`` to ``t_end``.

    ``guard(t, y)`` returns a margin that must stay positive; on a sign
    change the result is truncated at the last accepted node and the
    crossing is located by bisection on the local interpolant. A RHS that
    raises ``SingularStateError`` causes the step to be retried smaller,
    so singular approaches end in a ``"guard"`` or ``"underflow"`` status
    instead of propagating garbage.
    """
    y0 = np.asarray(y0, dtype=float)
    if y0.ndim != 1:
        raise ValueError("state must be one-dimensional")
    if t_end == t0:
        f0 = f(t0, y0)
        return OdeResult(
            ts=np.array([t0]),
            ys=y0[None, :].copy(),
            fs=np.asarray(f0, dtype=float)[None, :],
            status="completed",
            nfev=1,
            n_accepted=0,
        )

    direction = 1.0 if t_end > t0 else -1.0
    span = abs(t_end - t0)
    nfev = 0

    t = t0
    y = y0.copy()
    k1 = np.asarray(f(t, y), dtype=float)
    nfev += 1
    if guard is not None and guard(t, y) <= 0.0:
        raise SingularStateError("initial state violates the guard", xi=t, last_state=y)

    h = _initial_step(f, t, y, k1, direction, rtol, atol, max_step, span)
    nfev += 1

    ts = [t]
    ys = [y.copy()]
    fs = [k1.copy()]
    n_acc = 0
    n_rej = 0
    err_prev = 1.0
    k = np.empty((7, y.size))

    while (t_end - t) * direction > 0:
        if n_acc + n_rej > max_steps:
            raise StepUnderflowError("step budget exhausted", t=t)
        hmin = 16 * np.finfo(float).eps * max(abs(t), abs(t_end))
        h = min(h, abs(t_end - t), max_step)
        if h < hmin:
            return OdeResult(
                ts=np.array(ts), ys=np.array(ys), fs=np.array(fs),
                status="underflow", event_t=t, event_y=y.copy(),
                nfev=nfev, n_accepted=n_acc, n_rejected=n_rej,
            )

        failed = False
        try:
            k[0] = k1
            for i in range(1, 7):
                yi = y + h * direction * (_A[i - 1] @ k[:i])
                k[i] = f(t + _C[i] * h * direction, yi)
            nfev += 6
            y_new = y + h * direction * (_B @ k)
            err_vec = h * (_E @ k)
            if not np.all(np.isfinite(y_new)):
                failed = True
        except (SingularStateError, FloatingPointError, ZeroDivisionError, OverflowError):
            nfev += 6
            failed = True

        if failed:
            n_rej += 1
            h *= 0.5
            continue

        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = _rms_norm(err_vec / scale)

        if err > 1.0:
            n_rej += 1
            h *= max(_MIN_FACTOR, _SAFETY * err ** -0.2)
            continue

        t_new = t + h * direction
        k_new = k[6].copy()  # FSAL
        if guard is not None:
            t_mid = t + 0.5 * h * direction
            y_mid = _cubic_state(t_mid, t, h * direction, y, k1, y_new, k_new)
            if guard(t_new, y_new) <= 0.0 or guard(t_mid, y_mid) <= 0.0:
                lo, hi = t, t_new
                for _ in range(80):
                    mid = 0.5 * (lo + hi)
                    y_m = _cubic_state(mid, t, h * direction, y, k1, y_new, k_new)
                    if guard(mid, y_m) <= 0.0:
                        hi = mid
                    else:
                        lo = mid
                y_ev = _cubic_state(lo, t, h * direction, y, k1, y_new, k_new)
                return OdeResult(
                    ts=np.array(ts), ys=np.array(ys), fs=np.array(fs),
                    status="guard", event_t=float(lo), event_y=y_ev,
                    nfev=nfev, n_accepted=n_acc, n_rejected=n_rej,
                )

        t, y, k1 = t_new, y_new, k_new
        ts.append(t)
        ys.append(y.copy())
        fs.append(k1.copy())
        n_acc += 1

        err = max(err, 1e-10)
        factor = _SAFETY * err ** -_PI_ALPHA * err_prev ** _PI_BETA
        h *= min(_MAX_FACTOR, max(_MIN_FACTOR, factor))
        err_prev = err

    return OdeResult(
        ts=np.array(ts), ys=np.array(ys), fs=np.array(fs),
        status="completed", nfev=nfev, n_accepted=n_acc, n_rejected=n_rej,
    )


# quintic Hermite basis and its first two derivatives, on s in [0, 1]
def _h5(s):
    s2, s3 = s * s, s * s * s
    s4, s5 = s3 * s, s3 * s * s
    return (
        1 - 10 * s3 + 15 * s4 - 6 * s5,
        s - 6 * s3 + 8 * s4 - 3 * s5,
        0.5 * (s2 - 3 * s3 + 3 * s4 - s5),
        10 * s3 - 15 * s4 + 6 * s5,
        -4 * s3 + 7 * s4 - 3 * s5,
        0.5 * (s3 - 2 * s4 + s5),
    )


def _h5d(s):
    s2, s3 = s * s, s * s * s
    s4 = s3 * s
    return (
        -30 * s2 + 60 * s3 - 30 * s4,
        1 - 18 * s2 + 32 * s3 - 15 * s4,
        s - 4.5 * s2 + 6 * s3 - 2.5 * s4,
        30 * s2 - 60 * s3 + 30 * s4,
        -12 * s2 + 28 * s3 - 15 * s4,
        1.5 * s2 - 4 * s3 + 2.5 * s4,
    )


def _h5dd(s):
    s2, s3 = s * s, s * s * s
    return (
        -60 * s + 180 * s2 - 120 * s3,
        -36 * s + 96 * s2 - 60 * s3,
        1 - 9 * s + 18 * s2 - 10 * s3,
        60 * s - 180 * s2 + 120 * s3,
        -24 * s + 84 * s2 - 60 * s3,
        3 * s - 12 * s2 + 10 * s3,
    )


class SecondOrderDense:
    """C2 dense output for states with (position, velocity) structure.

    ``pairs`` lists ``(pos_index, vel_index)`` into the state vector; for
    each pair the position is interpolated by a two-point quintic Hermite
    using (value, first, second derivative) at the step ends, where the
    second derivative is read off the stored RHS. Velocities are evaluated
    as the exact derivative of the same quintic, so the interpolated state
    stays internally consistent.
    """

    def __init__(self, ts: np.ndarray, ys: np.ndarray, fs: np.ndarray,
                 pairs: Sequence[tuple[int, int]]):
        if len(ts) < 1:
            raise ValueError("empty node set")
        order = np.argsort(ts)
        self.ts = np.asarray(ts, dtype=float)[order]
        ys = np.asarray(ys, dtype=float)[order]
        fs = np.asarray(fs, dtype=float)[order]
        self.pairs = list(pairs)
        self.n_state = ys.shape[1]
        self._P = np.stack([ys[:, i] for i, _ in self.pairs], axis=1)
        self._V = np.stack([ys[:, j] for _, j in self.pairs], axis=1)
        self._A = np.stack([fs[:, j] for _, j in self.pairs], axis=1)

    @property
    def t_min(self):
        return float(self.ts[0])

    @property
    def t_max(self):
        return float(self.ts[-1])

    def _locate(self, t):
        t = np.asarray(t, dtype=float)
        pad = 1e-12 * max(1.0, abs(self.t_min), abs(self.t_max))
        if np.any(t < self.t_min - pad) or np.any(t > self.t_max + pad):
            raise DomainError(
                f"dense output queried at t={t} outside "
                f"[{self.t_min}, {self.t_max}]; extrapolation is refused"
            )
        if len(self.ts) == 1:
            return np.zeros(t.shape, dtype=int), np.zeros_like(t), np.ones_like(t)
        idx = np.clip(np.searchsorted(self.ts, t, side="right") - 1, 0, len(self.ts) - 2)
        h = self.ts[idx + 1] - self.ts[idx]
        s = np.clip((t - self.ts[idx]) / h, 0.0, 1.0)
        return idx, s, h

    def _eval(self, t, deriv):
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        if len(self.ts) == 1:
            base = {0: self._P, 1: self._V, 2: self._A}[deriv]
            out = np.broadcast_to(base[0], t_arr.shape + (len(self.pairs),)).copy()
        else:
            idx, s, h = self._locate(t_arr)
            basis = {0: _h5, 1: _h5d, 2: _h5dd}[deriv](s)
            p0, v0, a0 = self._P[idx], self._V[idx], self._A[idx]
            p1, v1, a1 = self._P[idx + 1], self._V[idx + 1], self._A[idx + 1]
            hh = h[..., None]
            b = [np.asarray(bi)[..., None] for bi in basis]
            out = (
                b[0] * p0 + hh * b[1] * v0 + hh * hh * b[2] * a0
                + b[3] * p1 + hh * b[4] * v1 + hh * hh * b[5] * a1
            )
            out /= hh ** deriv
        if np.isscalar(t) or np.asarray(t).ndim == 0:
            return out[0]
        return out

    def positions(self, t):
        """Position components at ``t`` (shape ``(..., n_pairs)``)."""
        return self._eval(t, 0)

    def velocities(self, t):
        return self._eval(t, 1)

    def accelerations(self, t):
        return self._eval(t, 2)

    def state(self, t):
        """Full state vector(s) at ``t``, same component layout as ``y``."""
        pos = self._eval(t, 0)
        vel = self._eval(t, 1)
        out = np.empty(pos.shape[:-1] + (self.n_state,))
        for col, (i, j) in enumerate(self.pairs):
            out[..., i] = pos[..., col]
            out[..., j] = vel[..., col]
        return out


def oracle_terminal_state(
    f: Callable[[float, np.ndarray], np.ndarray],
    t0: float,
    y0: Sequence[float],
    t_end: float,
    rtol: float = 1e-12,
    atol: float = 1e-12,
) -> np.ndarray:
    """Terminal state from the independent higher-order scheme (DOP853).

    Kept deliberately separate from :func:`integrate_adaptive`; tests use it
    as the cross-integrator oracle.
    """
    from scipy.integrate import solve_ivp

    if t_end == t0:
        return np.asarray(y0, dtype=float)
    sol = solve_ivp(
        f, (t0, t_end), np.asarray(y0, dtype=float),
        method="DOP853", rtol=rtol, atol=atol, dense_output=False,
    )
    if not sol.success:
        raise SingularStateError(f"oracle integration failed: {sol.message}", xi=sol.t[-1])
    return sol.y[:, -1]
