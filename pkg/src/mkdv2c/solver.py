"""The reduced coupled ODE pair: integration and its conserved quantity.

After the scaling reduction the amplitudes satisfy

    Phi'' = (1/3)*xi*Phi - alpha*(Phi^2+Psi^2)*Phi - lam*S(theta)/(Phi^2*Psi) + alpha_I
    Psi'' = (1/3)*xi*Psi - alpha*(Phi^2+Psi^2)*Psi - lam*T/(Psi^2*Phi)      + alpha_II

with ``theta = Psi/Phi`` and (S, T) generated from a single function J (see
:mod:`mkdv2c.coupling`). With ``alpha_I = alpha_II = 0`` the pair conserves

    I = (1/2)*(Phi*Psi' - Phi'*Psi)^2 - lam*(1 + theta^2)*J(theta)

which follows by direct differentiation: the Wronskian W = Phi*Psi'-Phi'*Psi
obeys W' = lam*[2*theta*J + (1+theta^2)*J']/Phi^2, and that is exactly the
derivative of lam*(1+theta^2)*J(theta) along the flow. A published variant
of this quantity circulates with a damaged amplitude factor and a dropped
lam; ``invariant_candidate_drifts`` measures every reading empirically so
the conserved one is documented by data rather than by fiat.

Integration is the embedded 5(4) pair from :mod:`mkdv2c.rk`. Movable
singularities are expected: amplitudes entering the 1e-12 guard band or a
blowup both end the run with a loud error carrying the last good state.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .coupling import CouplingSpec, make_coupling, source_functions
from .errors import SingularStateError, StepUnderflowError
from .params import SystemParams
from .rk import OdeResult, SecondOrderDense, integrate_adaptive, oracle_terminal_state

__all__ = [
    "GUARD_BAND",
    "ReducedState",
    "ReducedProfile",
    "InvariantSeries",
    "rhs",
    "integrate",
    "merge_profiles",
    "oracle_terminal",
    "ermakov_invariant",
    "invariant_drift",
    "invariant_candidate_drifts",
]

GUARD_BAND = 1e-12

_PAIRS = ((0, 1), (2, 3))  # (Phi, Phi'), (Psi, Psi') in the state vector


@dataclass(frozen=True)
class ReducedState:
    """Point state (xi, Phi, Phi', Psi, Psi') of the reduced pair."""

    xi: float
    phi: float
    phi_prime: float
    psi: float
    psi_prime: float

    def as_array(self):
        return np.array([self.phi, self.phi_prime, self.psi, self.psi_prime])

    @staticmethod
    def from_array(xi, y):
        return ReducedState(float(xi), float(y[0]), float(y[1]), float(y[2]), float(y[3]))


def _check_guard(phi, psi, lam, xi):
    if lam != 0.0 and (abs(phi) < GUARD_BAND or abs(psi) < GUARD_BAND):
        raise SingularStateError(
            f"amplitude inside guard band |.| < {GUARD_BAND:g} at xi={xi}: "
            f"Phi={phi:.3e}, Psi={psi:.3e}",
            xi=xi,
        )


def rhs(state: ReducedState, params: SystemParams, coupling: CouplingSpec):
    """Second derivatives (Phi'', Psi'') at a state.

    The coupling sources are only evaluated when ``lam != 0``; the linear
    and cubic parts are regular through vanishing amplitudes, so e.g. the
    Airy-type case ``alpha = lam = 0`` may cross zero freely.
    """
    xi, phi, psi = state.xi, state.phi, state.psi
    amp2 = phi * phi + psi * psi
    phi_dd = (xi / 3.0) * phi - params.alpha * amp2 * phi + params.alpha_I
    psi_dd = (xi / 3.0) * psi - params.alpha * amp2 * psi + params.alpha_II
    if params.lam != 0.0:
        _check_guard(phi, psi, params.lam, xi)
        s_val, t_val = source_functions(coupling, psi / phi)
        phi_dd -= params.lam * s_val / (phi * phi * psi)
        psi_dd -= params.lam * t_val / (psi * psi * phi)
    return phi_dd, psi_dd


def _rhs_flat(params, coupling):
    # flat fast path for the integrator; mirrors rhs() exactly
    alpha, lam = params.alpha, params.lam
    a_one, a_two = params.alpha_I, params.alpha_II
    if coupling.theta_domain is None:
        j, jp = coupling.J, coupling.J_prime
    else:
        j, jp = coupling.j, coupling.j_prime

    def f(xi, y):
        phi, phi_p, psi, psi_p = y
        amp2 = phi * phi + psi * psi
        phi_dd = (xi / 3.0) * phi - alpha * amp2 * phi + a_one
        psi_dd = (xi / 3.0) * psi - alpha * amp2 * psi + a_two
        if lam != 0.0:
            if abs(phi) < GUARD_BAND or abs(psi) < GUARD_BAND:
                raise SingularStateError(
                    f"amplitude inside guard band at xi={xi}", xi=xi
                )
            theta = psi / phi
            jv = float(j(theta))
            jpv = float(jp(theta))
            s_val = 2.0 * theta * jv + theta * theta * jpv
            t_val = -(theta * theta) * jpv
            if not (np.isfinite(s_val) and np.isfinite(t_val)):
                raise SingularStateError(
                    f"non-finite coupling sources at xi={xi}", xi=xi
                )
            phi_dd -= lam * s_val / (phi * phi * psi)
            psi_dd -= lam * t_val / (psi * psi * phi)
        return (phi_p, phi_dd, psi_p, psi_dd)

    return f


@dataclass(frozen=True)
class InvariantSeries:
    """Conserved-quantity samples along a profile and their spread."""

    xi_samples: np.ndarray
    I_values: np.ndarray
    I_reference: float
    max_drift: float


class ReducedProfile:
    """A solved trajectory with C2 dense output.

    Immutable after construction; evaluation never extrapolates beyond the
    solved ``xi_range``.
    """

    def __init__(self, result: OdeResult, params: SystemParams, coupling: CouplingSpec):
        self._result = result
        self.params = params
        self.coupling = coupling
        self.dense = SecondOrderDense(result.ts, result.ys, result.fs, _PAIRS)

    @property
    def xi_nodes(self):
        return self._result.ts

    @property
    def node_states(self):
        return self._result.ys

    @property
    def node_derivs(self):
        return self._result.fs

    @property
    def xi_range(self):
        return (self.dense.t_min, self.dense.t_max)

    @property
    def alpha_I(self):
        return self.params.alpha_I

    @property
    def alpha_II(self):
        return self.params.alpha_II

    @property
    def n_steps(self):
        return len(self._result.ts) - 1

    def state_array(self, xi):
        """(..., 4) array (Phi, Phi', Psi, Psi') at ``xi`` (scalar or array)."""
        return self.dense.state(xi)

    def amplitudes(self, xi):
        """(Phi, Psi) values at ``xi``; vectorized."""
        pos = self.dense.positions(xi)
        return pos[..., 0], pos[..., 1]

    def evaluate(self, xi: float) -> ReducedState:
        y = self.dense.state(float(xi))
        return ReducedState.from_array(float(xi), y)

    # -- serialization ----------------------------------------------------
    def to_dict(self):
        seconds = self._result.fs
        return {
            "schema": "mkdv2c/profile/1",
            "params": {
                "alpha": self.params.alpha,
                "lambda": self.params.lam,
                "a": self.params.a,
                "mu": self.params.mu,
                "alpha_I": self.params.alpha_I,
                "alpha_II": self.params.alpha_II,
            },
            "coupling": self.coupling.label,
            "xi_range": list(self.xi_range),
            "nodes": {
                "xi": self._result.ts.tolist(),
                "phi": self._result.ys[:, 0].tolist(),
                "phi_prime": self._result.ys[:, 1].tolist(),
                "phi_second": seconds[:, 1].tolist(),
                "psi": self._result.ys[:, 2].tolist(),
                "psi_prime": self._result.ys[:, 3].tolist(),
                "psi_second": seconds[:, 3].tolist(),
            },
        }

    @staticmethod
    def from_dict(doc, coupling: CouplingSpec | None = None):
        if doc.get("schema") != "mkdv2c/profile/1":
            raise ValueError(f"unsupported profile schema {doc.get('schema')!r}")
        p = doc["params"]
        params = SystemParams(
            alpha=p["alpha"], lam=p["lambda"], a=p["a"], mu=p["mu"],
            alpha_I=p.get("alpha_I", 0.0), alpha_II=p.get("alpha_II", 0.0),
        )
        if coupling is None:
            coupling = make_coupling(doc["coupling"])
        n = doc["nodes"]
        ts = np.asarray(n["xi"], dtype=float)
        ys = np.stack(
            [np.asarray(n[k], dtype=float) for k in ("phi", "phi_prime", "psi", "psi_prime")],
            axis=1,
        )
        fs = np.stack(
            [
                np.asarray(n["phi_prime"], dtype=float),
                np.asarray(n["phi_second"], dtype=float),
                np.asarray(n["psi_prime"], dtype=float),
                np.asarray(n["psi_second"], dtype=float),
            ],
            axis=1,
        )
        result = OdeResult(ts=ts, ys=ys, fs=fs, status="completed")
        return ReducedProfile(result, params, coupling)

    @staticmethod
    def from_json(text, coupling: CouplingSpec | None = None):
        return ReducedProfile.from_dict(json.loads(text), coupling=coupling)

    def write_csv(self, path):
        """Node table (xi, Phi, Phi', Psi, Psi', I) as CSV."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("xi,phi,phi_prime,psi,psi_prime,I\n")
            for i, xi in enumerate(self._result.ts):
                st = ReducedState.from_array(xi, self._result.ys[i])
                inv = ermakov_invariant(st, self.params, self.coupling)
                row = [xi, st.phi, st.phi_prime, st.psi, st.psi_prime, inv]
                fh.write(",".join(format(v, ".17g") for v in row) + "\n")


def integrate(
    initial: ReducedState,
    xi_end: float,
    params: SystemParams,
    coupling: CouplingSpec,
    tol: float = 1e-10,
    max_step: float = np.inf,
) -> ReducedProfile:
    """Solve the reduced pair from ``initial.xi`` to ``xi_end``.

    ``tol`` is applied as both relative and absolute local error per step
    and must lie in [1e-14, 1e-6]. Profiles used for field reconstruction
    and residual grids should cap ``max_step`` (the pipeline default is
    1e-3) so the dense interpolant is tight enough for third-derivative
    finite differencing.

    Raises ``SingularStateError`` when the amplitude guard band is hit and
    ``StepUnderflowError`` when the step collapses (blowup without a guard
    crossing, e.g. in the pure cubic regime).
    """
    if not (1e-14 <= tol <= 1e-6):
        raise ValueError(f"tol must lie in [1e-14, 1e-6], got {tol:g}")
    if params.lam != 0.0:
        _check_guard(initial.phi, initial.psi, params.lam, initial.xi)
        guard = lambda t, y: min(abs(y[0]), abs(y[2])) - GUARD_BAND
    else:
        guard = None

    result = integrate_adaptive(
        _rhs_flat(params, coupling),
        initial.xi,
        initial.as_array(),
        xi_end,
        rtol=tol,
        atol=tol,
        max_step=max_step,
        guard=guard,
    )
    if result.status == "guard":
        last = ReducedState.from_array(result.ts[-1], result.ys[-1])
        raise SingularStateError(
            f"guard band hit at xi={result.event_t:.8g} before xi_end={xi_end}",
            xi=result.event_t,
            last_state=last,
        )
    if result.status == "underflow":
        last = ReducedState.from_array(result.ts[-1], result.ys[-1])
        raise StepUnderflowError(
            f"step size underflow at xi={result.event_t:.8g} "
            f"(movable singularity before xi_end={xi_end})",
            t=result.event_t,
        )
    return ReducedProfile(result, params, coupling)


def merge_profiles(back: ReducedProfile, forward: ReducedProfile) -> ReducedProfile:
    """Join a backward-integrated and a forward-integrated profile.

    Both must start from the same state (the seam node appears once); used
    to cover [xi0 - pad, xi1] when initial data is prescribed at xi0.
    """
    if back.params != forward.params:
        raise ValueError("profiles carry different parameters")
    rb, rf = back._result, forward._result
    if not np.allclose(rb.ys[0], rf.ys[0]) or rb.ts[0] != rf.ts[0]:
        raise ValueError("profiles do not share their seam state")
    ts = np.concatenate([rb.ts[::-1][:-1], rf.ts])
    ys = np.concatenate([rb.ys[::-1][:-1], rf.ys])
    fs = np.concatenate([rb.fs[::-1][:-1], rf.fs])
    result = OdeResult(ts=ts, ys=ys, fs=fs, status="completed")
    return ReducedProfile(result, forward.params, forward.coupling)


def oracle_terminal(
    initial: ReducedState,
    xi_end: float,
    params: SystemParams,
    coupling: CouplingSpec,
    tol: float = 1e-12,
) -> ReducedState:
    """Terminal state from the independent order-8 scheme (cross-check)."""
    y = oracle_terminal_state(
        _rhs_flat(params, coupling), initial.xi, initial.as_array(), xi_end,
        rtol=tol, atol=tol,
    )
    return ReducedState.from_array(xi_end, y)


def wronskian(state: ReducedState) -> float:
    return state.phi * state.psi_prime - state.phi_prime * state.psi


def ermakov_invariant(state: ReducedState, params: SystemParams, coupling: CouplingSpec) -> float:
    """The conserved quantity I = W^2/2 - lam*(1+theta^2)*J(theta).

    With ``lam = 0`` the coupling term is absent and I reduces to half the
    squared Wronskian. The lam-explicit convention is fixed here; absorbing
    lam into J (J -> lam*J) yields the same numbers.
    """
    w = wronskian(state)
    inv = 0.5 * w * w
    if params.lam != 0.0:
        _check_guard(state.phi, state.psi, params.lam, state.xi)
        theta = state.psi / state.phi
        inv -= params.lam * (1.0 + theta * theta) * float(coupling.j(theta))
    return inv


_CANDIDATE_READINGS = ("reconciled", "printed_literal", "printed_no_lambda", "printed_plus_lambda")


def _candidate_value(reading, state, params, coupling):
    w = wronskian(state)
    base = 0.5 * w * w
    if params.lam == 0.0 and reading == "reconciled":
        return base
    theta = state.psi / state.phi
    j = float(coupling.j(theta))
    if reading == "reconciled":
        return base - params.lam * (1.0 + theta * theta) * j
    if reading == "printed_literal":
        num = (state.phi ** 2 + state.psi) ** 2
        return base + num / state.phi ** 2 * j
    if reading == "printed_no_lambda":
        return base + (1.0 + theta * theta) * j
    if reading == "printed_plus_lambda":
        return base + params.lam * (1.0 + theta * theta) * j
    raise ValueError(f"unknown reading {reading!r}")


def _sample_grid(profile: ReducedProfile, n_samples: int):
    lo, hi = profile.xi_range
    if lo == hi:
        return np.array([lo])
    return np.linspace(lo, hi, max(int(n_samples), 200))


def invariant_drift(profile: ReducedProfile, n_samples: int = 256) -> InvariantSeries:
    """Sample I on the dense output and report the drift from its start."""
    xis = _sample_grid(profile, n_samples)
    states = profile.state_array(xis)
    vals = np.empty(len(xis))
    for i, xi in enumerate(xis):
        vals[i] = ermakov_invariant(
            ReducedState.from_array(xi, np.atleast_2d(states)[i]),
            profile.params, profile.coupling,
        )
    ref = float(vals[0])
    return InvariantSeries(
        xi_samples=xis, I_values=vals, I_reference=ref,
        max_drift=float(np.max(np.abs(vals - ref))),
    )


def invariant_candidate_drifts(profile: ReducedProfile, n_samples: int = 256) -> dict:
    """Max drift of every candidate reading of the conserved quantity.

    Returns ``{reading_name: max_drift}``; along a valid trajectory only the
    reconciled reading should be flat, which is the empirical evidence for
    that form.
    """
    xis = _sample_grid(profile, n_samples)
    states = np.atleast_2d(profile.state_array(xis))
    out = {}
    for reading in _CANDIDATE_READINGS:
        vals = np.array([
            _candidate_value(
                reading, ReducedState.from_array(xi, states[i]),
                profile.params, profile.coupling,
            )
            for i, xi in enumerate(xis)
        ])
        out[reading] = float(np.max(np.abs(vals - vals[0])))
    return out
