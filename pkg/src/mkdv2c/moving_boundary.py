"""Moving boundary problems on a region bounded by two scaling curves.

The domain is gamma1*(t+a)^(1/3) <= x <= gamma2*(t+a)^(1/3). On the left
curve the u-component satisfies a flux condition and a value condition; on
the right curve the v-component does. For fields built from a reduced
profile all four conditions hold with boundary constants

    L_m = P_m = gamma1 * Phi(gamma1),   M_m = R_m = gamma2 * Psi(gamma2)

and curve exponents -1. None of that is taken on trust here:
``verify_boundary_conditions`` re-measures every condition from the
reconstructed fields with one-sided finite differences, recomputes the
constants from the measured fluxes at each sample time, and recovers the
exponents by log-log regression.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coupling import CouplingSpec, source_functions
from .errors import DomainError, ShootingError, SingularStateError, StepUnderflowError
from .fields import reconstruct_fields
from .params import SystemParams
from .report import ResidualReport
from .solver import ReducedProfile, ReducedState, ermakov_invariant, integrate

__all__ = [
    "MovingBoundaryProblem",
    "BoundaryConstants",
    "build_problem",
    "boundary_curves",
    "derive_constants",
    "verify_boundary_conditions",
    "shoot_for_targets",
    "DEFAULT_SAMPLE_TIMES",
]

DEFAULT_SAMPLE_TIMES = (0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0)

# one-sided second-derivative stencil, 6 points, 4th order
_ONESIDED_D2 = np.array([15 / 4, -77 / 6, 107 / 6, -13.0, 61 / 12, -5 / 6])


@dataclass(frozen=True)
class MovingBoundaryProblem:
    """Geometry, system parameters, coupling and the solved profile."""

    gamma1: float
    gamma2: float
    params: SystemParams
    coupling: CouplingSpec
    profile: ReducedProfile

    def __post_init__(self):
        if not self.gamma1 < self.gamma2:
            raise ValueError(f"need gamma1 < gamma2, got ({self.gamma1}, {self.gamma2})")
        lo, hi = self.profile.xi_range
        pad = 1e-9 * max(1.0, abs(self.gamma1), abs(self.gamma2))
        if lo > self.gamma1 + pad or hi < self.gamma2 - pad:
            raise ValueError(
                f"profile xi_range [{lo}, {hi}] does not cover "
                f"[{self.gamma1}, {self.gamma2}]"
            )

    @property
    def a(self):
        return self.params.a


def build_problem(
    gamma1: float,
    gamma2: float,
    params: SystemParams,
    coupling: CouplingSpec,
    initial: ReducedState,
    tol: float = 1e-10,
    max_step: float = 1e-3,
) -> MovingBoundaryProblem:
    """Solve the reduced pair across [gamma1, gamma2] and assemble the problem.

    ``initial.xi`` must equal ``gamma1``. The default ``max_step`` keeps the
    dense output tight enough for the finite-difference verifications."""
    if initial.xi != gamma1:
        raise ValueError(f"initial state sits at xi={initial.xi}, expected gamma1={gamma1}")
    profile = integrate(initial, gamma2, params, coupling, tol=tol, max_step=max_step)
    return MovingBoundaryProblem(gamma1, gamma2, params, coupling, profile)


@dataclass(frozen=True)
class BoundaryConstants:
    """Derived boundary constants and curve exponents."""

    L_m: float
    M_m: float
    P_m: float
    R_m: float
    i: int = -1
    j: int = -1
    l: int = -1

    def __post_init__(self):
        if (self.i, self.j, self.l) != (-1, -1, -1):
            raise ValueError("curve exponents of the solvable class are all -1")
        if self.P_m != self.L_m or self.R_m != self.M_m:
            raise ValueError("the value constants must equal the flux constants")


def boundary_curves(mbp: MovingBoundaryProblem, t: float):
    """Boundary positions and speeds (Sigma1, Sigma2, dSigma1, dSigma2) at t."""
    a = mbp.a
    t = np.asarray(t, dtype=float)
    if np.any(t + a <= 0):
        raise DomainError(f"t + a must be positive, got t={t}, a={a}")
    s = (t + a) ** (1.0 / 3.0)
    sig1, sig2 = mbp.gamma1 * s, mbp.gamma2 * s
    dsig1 = mbp.gamma1 / (3.0 * s * s)
    dsig2 = mbp.gamma2 / (3.0 * s * s)
    if np.ndim(t) == 0:
        return float(sig1), float(sig2), float(dsig1), float(dsig2)
    return sig1, sig2, dsig1, dsig2


def derive_constants(mbp: MovingBoundaryProblem) -> BoundaryConstants:
    """Constants read off the profile endpoints; exponents are all -1."""
    phi1, _ = mbp.profile.amplitudes(mbp.gamma1)
    _, psi2 = mbp.profile.amplitudes(mbp.gamma2)
    L = mbp.gamma1 * float(phi1)
    M = mbp.gamma2 * float(psi2)
    return BoundaryConstants(L_m=L, M_m=M, P_m=L, R_m=M)


def _uxx_onesided(mbp, t, x0, h, component, direction):
    # 6-point one-sided stencil pointing into the domain interior
    offsets = direction * h * np.arange(6.0)
    u, v = reconstruct_fields(mbp.profile, t, x0 + offsets)
    vals = u if component == "u" else v
    return float(_ONESIDED_D2 @ vals) / (h * h)


def _flux_lhs(mbp, t, which):
    """Left side of a flux condition from reconstructed fields only."""
    sig1, sig2, _, _ = boundary_curves(mbp, t)
    a, alpha, lam = mbp.a, mbp.params.alpha, mbp.params.lam
    h = (mbp.gamma2 - mbp.gamma1) * (t + a) ** (1.0 / 3.0) / 400.0
    if which == 1:
        x0, direction, component = sig1, +1, "u"
    else:
        x0, direction, component = sig2, -1, "v"
    d2 = _uxx_onesided(mbp, t, x0, h, component, direction)
    u0, v0 = reconstruct_fields(mbp.profile, t, x0)
    cubic = alpha * (u0 * u0 + v0 * v0) * (u0 if which == 1 else v0)
    lhs = d2 + cubic
    if lam != 0.0:
        s_val, t_val = source_functions(mbp.coupling, v0 / u0)
        mod = (t + a) ** (-2.0)
        if which == 1:
            lhs += lam * mod * s_val / (u0 * u0 * v0)
        else:
            lhs += lam * mod * t_val / (v0 * v0 * u0)
    return lhs


def _slope_loglog(xs, ys):
    lx, ly = np.log(np.abs(xs)), np.log(np.abs(ys))
    A = np.stack([lx, np.ones_like(lx)], axis=1)
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    return float(coef[0])


def verify_boundary_conditions(
    mbp: MovingBoundaryProblem,
    constants: BoundaryConstants,
    times=DEFAULT_SAMPLE_TIMES,
    tolerance: float = 1e-6,
) -> ResidualReport:
    """Measure all four boundary conditions at the sample times.

    Flux conditions: second x-derivatives come from one-sided finite
    differences of the reconstructed fields (stencil step
    (gamma2-gamma1)*(t+a)^(1/3)/400, pointing into the domain), the
    algebraic terms are evaluated exactly at the boundary point, and the
    result is compared with ``K * Sigma^(-1) * dSigma``. Value conditions
    compare the boundary trace with ``K * Sigma^(-1)``.

    Also recomputes the flux constants from the measured left sides at each
    time (their relative spread certifies time independence) and recovers
    the value-condition exponents by log-log regression over the samples.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) == 0:
        raise ValueError("need a non-empty sequence of sample times")
    if np.any(times <= 0):
        raise ValueError("boundary conditions are imposed for t > 0 only")

    rows = []
    rel = {1: [], 2: [], 3: [], 4: []}
    L_meas, M_meas, u_trace, v_trace, s1s, s2s = [], [], [], [], [], []
    for t in times:
        sig1, sig2, dsig1, dsig2 = boundary_curves(mbp, float(t))
        lhs1 = _flux_lhs(mbp, float(t), 1)
        lhs2 = _flux_lhs(mbp, float(t), 2)
        rhs1 = constants.L_m * dsig1 / sig1
        rhs2 = constants.M_m * dsig2 / sig2
        u0, _ = reconstruct_fields(mbp.profile, float(t), sig1)
        _, v0 = reconstruct_fields(mbp.profile, float(t), sig2)
        rhs3 = constants.P_m / sig1
        rhs4 = constants.R_m / sig2
        r1 = abs(lhs1 - rhs1) / max(abs(rhs1), 1e-300)
        r2 = abs(lhs2 - rhs2) / max(abs(rhs2), 1e-300)
        r3 = abs(u0 - rhs3) / max(abs(rhs3), 1e-300)
        r4 = abs(v0 - rhs4) / max(abs(rhs4), 1e-300)
        for k, r in zip((1, 2, 3, 4), (r1, r2, r3, r4)):
            rel[k].append(r)
        L_meas.append(lhs1 * sig1 / dsig1)
        M_meas.append(lhs2 * sig2 / dsig2)
        u_trace.append(u0)
        v_trace.append(v0)
        s1s.append(sig1)
        s2s.append(sig2)
        rows.append([float(t), r1, r2, r3, r4])

    L_meas, M_meas = np.array(L_meas), np.array(M_meas)
    spread_L = float(np.ptp(L_meas) / max(abs(np.mean(L_meas)), 1e-300))
    spread_M = float(np.ptp(M_meas) / max(abs(np.mean(M_meas)), 1e-300))
    metrics = {
        "flux_u_max_rel": float(np.max(rel[1])),
        "flux_v_max_rel": float(np.max(rel[2])),
        "value_u_max_rel": float(np.max(rel[3])),
        "value_v_max_rel": float(np.max(rel[4])),
        "constant_L_rel_spread": spread_L,
        "constant_M_rel_spread": spread_M,
    }
    if len(times) >= 3:
        metrics["value_u_slope_error"] = abs(_slope_loglog(np.array(s1s), np.array(u_trace)) + 1.0)
        metrics["value_v_slope_error"] = abs(_slope_loglog(np.array(s2s), np.array(v_trace)) + 1.0)
    return ResidualReport.from_metrics(
        label="boundary-conditions",
        tolerance=tolerance,
        metrics=metrics,
        checked_metrics=("flux_u_max_rel", "flux_v_max_rel", "value_u_max_rel", "value_v_max_rel"),
        tables={"per_time": rows, "per_time_columns": ["t", "flux_u", "flux_v", "value_u", "value_v"]},
        meta={
            "constants": {"L_m": constants.L_m, "M_m": constants.M_m,
                          "P_m": constants.P_m, "R_m": constants.R_m},
            "exponents": {"i": constants.i, "j": constants.j, "l": constants.l},
            "times": times.tolist(),
        },
    )


def shoot_for_targets(
    targets: dict,
    geometry: dict,
    params: SystemParams,
    coupling: CouplingSpec,
    free: dict,
    aux: tuple = ("invariant", None),
    tol: float = 1e-10,
    max_step: float = 1e-3,
    max_iter: int = 50,
    newton_tol: float = 1e-10,
) -> MovingBoundaryProblem:
    """Recover a problem whose boundary constants hit prescribed targets.

    ``targets`` gives ``P_m`` and ``R_m``; ``Phi(gamma1) = P_m/gamma1`` is
    then fixed, and a damped 2x2 Newton iteration adjusts two of the three
    remaining initial values to satisfy ``Psi(gamma2) = R_m/gamma2`` plus
    one auxiliary condition:

    - ``("invariant", value)``: prescribe the conserved quantity (adjusts
      Psi and Psi' at gamma1; Phi' stays at its ``free`` guess),
    - ``("psi_start", value)``: pin Psi(gamma1) (adjusts Psi' only),
    - ``("phi_prime_start", value)``: pin Phi'(gamma1) (adjusts Psi').

    Raises ``ShootingError`` with the residual history on stagnation or
    when trial trajectories keep hitting singularities.
    """
    g1, g2, a = geometry["gamma1"], geometry["gamma2"], geometry.get("a", params.a)
    if not g1 < g2:
        raise ValueError(f"need gamma1 < gamma2, got ({g1}, {g2})")
    if g1 == 0.0 or g2 == 0.0:
        raise ValueError("shooting requires nonzero gamma1, gamma2")
    if a != params.a:
        raise ValueError("geometry time shift must match params.a")
    P_m, R_m = targets["P_m"], targets["R_m"]
    if P_m == 0.0 or R_m == 0.0:
        raise ValueError("targets must be nonzero")
    phi0 = P_m / g1
    psi_target = R_m / g2

    aux_kind, aux_value = aux
    if aux_kind not in ("invariant", "psi_start", "phi_prime_start"):
        raise ValueError(f"unknown auxiliary condition {aux_kind!r}")

    def unpack(x):
        if aux_kind == "phi_prime_start":
            phi_p, psi_p = x
            psi0 = free["psi_start"]
        else:
            psi0, psi_p = x
            phi_p = free["phi_prime_start"]
        return ReducedState(g1, phi0, phi_p, psi0, psi_p)

    def residuals(x):
        state0 = unpack(x)
        profile = integrate(state0, g2, params, coupling, tol=tol, max_step=max_step)
        _, psi_end = profile.amplitudes(g2)
        f1 = float(psi_end) - psi_target
        if aux_kind == "invariant":
            f2 = ermakov_invariant(state0, params, coupling) - aux_value
        elif aux_kind == "psi_start":
            f2 = state0.psi - aux_value
        else:
            f2 = state0.phi_prime - aux_value
        return np.array([f1, f2]), profile

    if aux_kind == "phi_prime_start":
        x = np.array([free["phi_prime_start"], free["psi_prime_start"]], dtype=float)
    else:
        x = np.array([free["psi_start"], free["psi_prime_start"]], dtype=float)

    history = []
    profile = None
    try:
        F, profile = residuals(x)
    except (SingularStateError, StepUnderflowError, DomainError) as exc:
        raise ShootingError(
            f"initial guess already fails: {exc}", history=history
        ) from exc

    for it in range(max_iter):
        norm = float(np.max(np.abs(F)))
        history.append({"iteration": it, "residual": norm, "x": x.tolist()})
        if norm <= newton_tol:
            return MovingBoundaryProblem(g1, g2, params, coupling, profile)
        # forward-difference Jacobian
        J = np.empty((2, 2))
        ok = True
        for k in range(2):
            eps = 1e-7 * max(1.0, abs(x[k]))
            xp = x.copy()
            xp[k] += eps
            try:
                Fp, _ = residuals(xp)
            except (SingularStateError, StepUnderflowError, DomainError):
                ok = False
                break
            J[:, k] = (Fp - F) / eps
        if not ok:
            raise ShootingError(
                "singularity while probing the Jacobian; targets appear infeasible "
                "from this guess", history=history,
            )
        try:
            step = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError as exc:
            raise ShootingError("singular shooting Jacobian", history=history) from exc
        # damped update: backtrack until the residual norm decreases
        lam_damp, accepted = 1.0, False
        for _ in range(10):
            try:
                F_new, prof_new = residuals(x + lam_damp * step)
            except (SingularStateError, StepUnderflowError, DomainError):
                lam_damp *= 0.5
                continue
            if np.max(np.abs(F_new)) < norm:
                x = x + lam_damp * step
                F, profile = F_new, prof_new
                accepted = True
                break
            lam_damp *= 0.5
        if not accepted:
            raise ShootingError(
                f"Newton stagnated at residual {norm:.3e} after {it + 1} iterations",
                history=history,
            )

    raise ShootingError(
        f"no convergence within {max_iter} iterations "
        f"(last residual {float(np.max(np.abs(F))):.3e})",
        history=history,
    )
