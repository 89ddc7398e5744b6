import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mkdv2c import (
    ReducedProfile,
    ReducedState,
    SystemParams,
    ermakov_invariant,
    integrate,
    invariant_candidate_drifts,
    invariant_drift,
    make_coupling,
    merge_profiles,
    oracle_terminal,
    reconstruct_fields,
    rhs,
)
from mkdv2c.errors import DomainError, SingularStateError, StepUnderflowError
from mkdv2c.solver import wronskian


class TestRhs:
    def test_only_linear_term_survives(self):
        p = SystemParams(alpha=0.0, lam=0.0)
        out = rhs(ReducedState(3.0, 1.0, 0.0, 1.0, 0.0), p, make_coupling("const"))
        assert out == (1.0, 1.0)

    def test_pure_cubic_term(self):
        p = SystemParams(alpha=1.0, lam=0.0)
        out = rhs(ReducedState(0.0, 1.0, 0.0, 2.0, 0.0), p, make_coupling("const"))
        assert out == (-5.0, -10.0)

    def test_coupled_point_value_against_symbolic_substitution(self):
        # independent symbolic evaluation of the same right side
        import sympy as sp

        xi, phi, psi, al, lm = sp.symbols("xi phi psi alpha lam")
        th = psi / phi
        t_sym = sp.Symbol("t_sym")
        Jt = t_sym ** 2
        S = (2 * t_sym * Jt + t_sym ** 2 * sp.diff(Jt, t_sym)).subs(t_sym, th)
        T = (-(t_sym ** 2) * sp.diff(Jt, t_sym)).subs(t_sym, th)
        phi_dd = xi / 3 * phi - al * (phi ** 2 + psi ** 2) * phi - lm * S / (phi ** 2 * psi)
        psi_dd = xi / 3 * psi - al * (phi ** 2 + psi ** 2) * psi - lm * T / (psi ** 2 * phi)
        subs = {xi: 0, phi: 1, psi: 1, al: 1, lm: 1}
        expect = (float(phi_dd.subs(subs)), float(psi_dd.subs(subs)))
        assert expect == (-6.0, 0.0)  # hand substitution

        p = SystemParams(alpha=1.0, lam=1.0)
        out = rhs(ReducedState(0.0, 1.0, 0.0, 1.0, 0.0), p, make_coupling("quadratic:c=1"))
        assert out == pytest.approx(expect, abs=1e-14)

    def test_guard_band_is_a_hard_error(self):
        p = SystemParams(alpha=1.0, lam=1.0)
        with pytest.raises(SingularStateError):
            rhs(ReducedState(0.0, 1.0, 0.0, 1e-13, 0.0), p, make_coupling("const"))

    def test_lambda_zero_skips_the_sources_entirely(self):
        p = SystemParams(alpha=1.0, lam=0.0)
        out = rhs(ReducedState(0.0, 1.0, 0.0, 0.0, 1.0), p, make_coupling("const"))
        assert out == (-1.0, 0.0)


class TestIntegrate:
    def test_airy_case_matches_fixture(self, airy_table, linear_params):
        init = ReducedState(0.0, airy_table[0, 1], airy_table[0, 2], 1.0, 0.3)
        prof = integrate(init, 2.0, linear_params, make_coupling("const"), tol=1e-12)
        states = prof.state_array(airy_table[:, 0])
        assert np.max(np.abs(states[:, 0] - airy_table[:, 1])) < 1e-8
        assert np.max(np.abs(states[:, 1] - airy_table[:, 2])) < 1e-8

    def test_empty_interval_keeps_the_initial_state(self, std_params):
        init = ReducedState(0.7, 1.0, 0.2, 0.9, -0.1)
        prof = integrate(init, 0.7, std_params, make_coupling("quadratic:c=1"), tol=1e-10)
        assert prof.xi_range == (0.7, 0.7)
        end = prof.evaluate(0.7)
        assert (end.phi, end.phi_prime, end.psi, end.psi_prime) == (1.0, 0.2, 0.9, -0.1)

    def test_movable_singularity_is_loud_and_located(self, std_params):
        init = ReducedState(0.0, 1.0, 0.1, 0.8, -0.05)
        with pytest.raises((SingularStateError, StepUnderflowError)) as err:
            integrate(init, 2.0, std_params, make_coupling("quadratic:c=1"), tol=1e-10)
        where = getattr(err.value, "xi", None) or getattr(err.value, "t", None)
        assert 0.0 < where < 2.0

    def test_tolerance_is_validated(self, std_params):
        init = ReducedState(0.0, 1.0, 0.0, 1.0, 0.0)
        with pytest.raises(ValueError, match="tol"):
            integrate(init, 1.0, std_params, make_coupling("const"), tol=1e-3)

    def test_cross_integrator_agreement(self, std_params):
        init = ReducedState(0.5, 0.9176841583169848, 1.4442721575961341,
                            0.4805711060221911, 0.3119657532408584)
        coupling = make_coupling("const:c=1")
        prof = integrate(init, 1.5, std_params, coupling, tol=1e-10)
        end = prof.evaluate(1.5)
        orc = oracle_terminal(init, 1.5, std_params, coupling)
        diff = max(
            abs(end.phi - orc.phi), abs(end.phi_prime - orc.phi_prime),
            abs(end.psi - orc.psi), abs(end.psi_prime - orc.psi_prime),
        )
        assert diff < 1e-8

    def test_merge_profiles_covers_both_sides(self, std_params):
        coupling = make_coupling("rational:c=1")
        init = ReducedState(0.5, 0.79, 1.07, -0.79, -1.07)
        fwd = integrate(init, 1.5, std_params, coupling, tol=1e-10)
        back = integrate(init, 0.3, std_params, coupling, tol=1e-10)
        merged = merge_profiles(back, fwd)
        assert merged.xi_range == (0.3, 1.5)
        for xi in (0.35, 0.5, 1.2):
            direct = fwd if xi >= 0.5 else back
            assert np.allclose(merged.state_array(xi), direct.state_array(xi), atol=1e-12)


class TestInvariant:
    def test_parallel_states_with_zero_coupling_give_zero(self, std_params):
        c = make_coupling("const:c=0")  # J identically zero
        st_ = ReducedState(0.3, 1.1, 0.4, 2.2, 0.8)  # Psi = 2*Phi, Psi' = 2*Phi'
        assert ermakov_invariant(st_, std_params, c) == pytest.approx(0.0, abs=1e-15)

    def test_lambda_zero_reduces_to_half_squared_wronskian(self, linear_params):
        st_ = ReducedState(0.0, 1.3, -0.2, 0.5, 0.9)
        w = wronskian(st_)
        val = ermakov_invariant(st_, linear_params, make_coupling("sin:c=1"))
        assert val == pytest.approx(0.5 * w * w, abs=1e-15)

    def test_closed_form_value(self, std_params):
        st_ = ReducedState(0.0, 1.2, 0.3, 0.7, -0.4)
        theta = 0.7 / 1.2
        w = 1.2 * (-0.4) - 0.3 * 0.7
        expect = 0.5 * w * w - 1.0 * (1 + theta ** 2) * theta ** 2
        got = ermakov_invariant(st_, std_params, make_coupling("quadratic:c=1"))
        assert got == pytest.approx(expect, abs=1e-14)

    def test_linear_case_drift_is_tiny(self, airy_table, linear_params):
        init = ReducedState(0.0, airy_table[0, 1], airy_table[0, 2], 1.0, 0.3)
        prof = integrate(init, 2.0, linear_params, make_coupling("const"), tol=1e-12)
        series = invariant_drift(prof)
        assert len(series.xi_samples) >= 200
        assert series.max_drift < 1e-10

    def test_single_state_profile_has_zero_drift(self, std_params):
        init = ReducedState(0.2, 1.0, 0.0, 1.0, 0.0)
        prof = integrate(init, 0.2, std_params, make_coupling("quadratic:c=1"), tol=1e-10)
        assert invariant_drift(prof).max_drift == 0.0

    def test_coupled_conservation(self, std_params):
        init = ReducedState(0.5, 0.9582362760045666, 1.162311371967066,
                            -0.5425627048338064, -0.09713473208463069)
        prof = integrate(init, 1.5, std_params, make_coupling("quadratic:c=1"), tol=1e-12)
        assert invariant_drift(prof).max_drift < 1e-8

    def test_only_the_reconciled_reading_is_conserved(self, std_params):
        init = ReducedState(0.5, 0.9582362760045666, 1.162311371967066,
                            -0.5425627048338064, -0.09713473208463069)
        prof = integrate(init, 1.5, std_params, make_coupling("quadratic:c=1"), tol=1e-12)
        drifts = invariant_candidate_drifts(prof)
        assert drifts["reconciled"] < 1e-8
        for name in ("printed_literal", "printed_no_lambda", "printed_plus_lambda"):
            assert drifts[name] > 1e-3, name

    def test_drift_shrinks_with_tolerance_at_nominal_order(self, std_params):
        init = ReducedState(0.5, 0.9176841583169848, 1.4442721575961341,
                            0.4805711060221911, 0.3119657532408584)
        coupling = make_coupling("const:c=1")
        tols = (1e-8, 1e-10, 1e-12)
        drifts = [
            invariant_drift(integrate(init, 1.5, std_params, coupling, tol=tol)).max_drift
            for tol in tols
        ]
        assert drifts[0] > drifts[1] > drifts[2]
        slope = np.polyfit(np.log(tols), np.log(drifts), 1)[0]
        assert 0.5 < slope < 1.5


def test_wronskian_dynamics_match_closed_form(std_params):
    # (Phi Psi' - Phi' Psi)' = lam * [S/Phi^2 - T/Psi^2] along solutions
    from mkdv2c.coupling import source_functions

    coupling = make_coupling("rational:c=1")
    init = ReducedState(0.5, 0.7902731098161835, 1.0746040394494616,
                        -0.7902776335615238, -1.0746147069361012)
    prof = integrate(init, 1.5, std_params, coupling, tol=1e-12, max_step=1e-3)
    h = 1e-4
    for xi in np.linspace(0.6, 1.4, 7):
        w_plus = wronskian(prof.evaluate(xi + h))
        w_minus = wronskian(prof.evaluate(xi - h))
        fd = (w_plus - w_minus) / (2 * h)
        st_ = prof.evaluate(xi)
        s_val, t_val = source_functions(coupling, st_.psi / st_.phi)
        closed = std_params.lam * (s_val / st_.phi ** 2 - t_val / st_.psi ** 2)
        assert fd == pytest.approx(closed, rel=1e-6, abs=1e-8)


@given(s=st.floats(0.6, 1.8), x=st.floats(-0.4, 0.4))
@settings(max_examples=60, deadline=None)
def test_scaling_covariance_of_reconstruction(s, x, linear_params, airy_table):
    init = ReducedState(-0.5, airy_table[0, 1], airy_table[0, 2], 0.9, 0.1)
    prof = _LINEAR_CACHE.setdefault(
        "prof", integrate(init, 0.5, linear_params, make_coupling("const"), tol=1e-10)
    )
    t = 0.4
    a = linear_params.a
    t_scaled = s ** 3 * (t + a) - a
    u, v = reconstruct_fields(prof, t, x)
    u2, v2 = reconstruct_fields(prof, t_scaled, s * x)
    assert u2 == pytest.approx(u / s, rel=1e-12, abs=1e-13)
    assert v2 == pytest.approx(v / s, rel=1e-12, abs=1e-13)


_LINEAR_CACHE = {}


class TestSerialization:
    def test_json_round_trip_preserves_dense_output(self, std_params, tmp_path):
        coupling = make_coupling("quadratic:c=1")
        init = ReducedState(0.5, 0.9582362760045666, 1.162311371967066,
                            -0.5425627048338064, -0.09713473208463069)
        prof = integrate(init, 1.5, std_params, coupling, tol=1e-10)
        doc = prof.to_dict()
        text = json.dumps(doc)
        again = ReducedProfile.from_json(text)
        xs = np.linspace(0.5, 1.5, 37)
        assert np.allclose(again.state_array(xs), prof.state_array(xs), atol=0, rtol=0)
        assert again.params == std_params
        assert again.coupling.label == coupling.label

    def test_csv_dump_has_expected_columns(self, std_params, tmp_path):
        init = ReducedState(0.5, 0.9582362760045666, 1.162311371967066,
                            -0.5425627048338064, -0.09713473208463069)
        prof = integrate(init, 1.5, std_params, make_coupling("quadratic:c=1"), tol=1e-10)
        path = tmp_path / "profile.csv"
        prof.write_csv(path)
        header = path.read_text().splitlines()[0]
        assert header == "xi,phi,phi_prime,psi,psi_prime,I"
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        assert data.shape[0] == prof.n_steps + 1
        # invariant column should be flat
        assert np.ptp(data[:, 5]) < 1e-8

    def test_out_of_range_evaluation_is_refused(self, std_params):
        init = ReducedState(0.5, 1.0, 0.0, 1.0, 0.0)
        prof = integrate(init, 1.0, std_params, make_coupling("rational:c=1"), tol=1e-10)
        with pytest.raises(DomainError):
            prof.evaluate(1.2)
        with pytest.raises(DomainError):
            reconstruct_fields(prof, 0.0, 5.0)
