import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mkdv2c import make_coupling, source_functions
from mkdv2c.errors import ConfigError, DomainError


def test_constant_coupling_sources():
    c = make_coupling("const:c=1.5")
    s, t = source_functions(c, 2.0)
    assert s == pytest.approx(6.0, abs=1e-15)  # 2*theta*c with theta=2
    assert t == 0.0


def test_quadratic_coupling_sources():
    c = make_coupling("quadratic:c=1")
    s, t = source_functions(c, 1.0)
    assert s == pytest.approx(4.0, abs=1e-15)
    assert t == pytest.approx(-2.0, abs=1e-15)


def test_sine_coupling_against_symbolic_oracle():
    import sympy as sp

    th = sp.Symbol("theta")
    J = sp.sin(th)
    S_sym = sp.lambdify(th, 2 * th * J + th ** 2 * sp.diff(J, th))
    T_sym = sp.lambdify(th, -(th ** 2) * sp.diff(J, th))
    c = make_coupling("sin:c=1")
    s, t = source_functions(c, 0.7)
    assert abs(s - S_sym(0.7)) < 1e-12
    assert abs(t - T_sym(0.7)) < 1e-12


@pytest.mark.parametrize("spec_id", ["const:c=0.7", "quadratic:c=-0.3", "rational:c=2",
                                     "sin:c=1.1", "inv_square:c=-0.5"])
def test_derivative_consistency_of_builtins(spec_id):
    c = make_coupling(spec_id)
    thetas = np.linspace(0.3, 2.5, 9)
    assert c.derivative_mismatch(thetas, h=1e-6) < 1e-8


@pytest.mark.parametrize("spec_id", ["const:c=0.7", "quadratic:c=-0.3", "rational:c=2"])
def test_derivative_mismatch_is_second_order_in_h(spec_id):
    c = make_coupling(spec_id)
    # not identically zero for quadratic/rational only at generic theta
    m1 = c.derivative_mismatch([1.3], h=1e-3)
    m2 = c.derivative_mismatch([1.3], h=2e-3)
    if m2 > 1e-12:  # skip couplings whose FD error vanishes identically
        assert m2 / m1 == pytest.approx(4.0, rel=0.2)


@given(
    theta=st.floats(-3, 3, allow_nan=False).filter(lambda x: abs(x) > 1e-2),
    phi=st.floats(0.2, 3, allow_nan=False),
    psi=st.floats(0.2, 3, allow_nan=False),
    c=st.floats(-2, 2, allow_nan=False),
)
@settings(max_examples=150)
def test_source_pair_identity(theta, phi, psi, c):
    # S/Phi^2 - T/Psi^2 must equal [2*theta*J + (1+theta^2)*J'] / Phi^2
    # when theta = Psi/Phi; evaluate with Psi = theta*Phi
    coupling = make_coupling(f"sin:c={c!r}")
    psi = theta * phi
    if abs(psi) < 1e-2:
        return
    s, t = source_functions(coupling, theta)
    lhs = s / phi ** 2 - t / psi ** 2
    rhs = (
        2 * theta * float(coupling.j(theta))
        + (1 + theta ** 2) * float(coupling.j_prime(theta))
    ) / phi ** 2
    assert abs(lhs - rhs) < 1e-12 * max(1.0, abs(lhs))


def test_bare_name_defaults_to_unit_constant():
    c = make_coupling("const")
    assert float(c.j(0.4)) == 1.0


def test_label_round_trips_through_parser():
    c = make_coupling("rational:c=0.12345678901234567")
    again = make_coupling(c.label)
    assert float(again.j(1.7)) == float(c.j(1.7))


@pytest.mark.parametrize("bad", ["", "nope", "const:d=1", "const:c=abc", "quadratic:c="])
def test_malformed_ids_rejected(bad):
    with pytest.raises(ConfigError):
        make_coupling(bad)


def test_non_finite_sources_flagged():
    c = make_coupling("inv_square:c=1")  # J has a pole at theta = 0
    with pytest.raises(DomainError):
        source_functions(c, 0.0)


@pytest.fixture
def sine_table(tmp_path):
    thetas = np.linspace(0.1, 3.0, 120)
    path = tmp_path / "table.csv"
    with open(path, "w") as fh:
        fh.write("theta,J\n")
        for th in thetas:
            fh.write(f"{th:.17g},{np.sin(th):.17g}\n")
    return path


def test_tabulated_coupling_tracks_its_source(sine_table):
    c = make_coupling(f"table:{sine_table}")
    ref = make_coupling("sin:c=1")
    for th in np.linspace(0.3, 2.8, 11):
        assert float(c.j(th)) == pytest.approx(float(ref.j(th)), abs=5e-9)
        assert float(c.j_prime(th)) == pytest.approx(float(ref.j_prime(th)), abs=5e-6)
    s, t = source_functions(c, 0.7)
    s_ref, t_ref = source_functions(ref, 0.7)
    assert s == pytest.approx(s_ref, abs=1e-7)
    assert t == pytest.approx(t_ref, abs=1e-7)


def test_tabulated_coupling_refuses_extrapolation(sine_table):
    c = make_coupling(f"table:{sine_table}")
    with pytest.raises(DomainError):
        c.j(3.5)
    with pytest.raises(DomainError):
        source_functions(c, 0.05)


def test_tabulated_coupling_rejects_bad_files(tmp_path):
    missing = tmp_path / "nope.csv"
    with pytest.raises(ConfigError):
        make_coupling(f"table:{missing}")
    bad = tmp_path / "bad.csv"
    bad.write_text("theta,J\n1,2\n0.5,3\n2,1\n3,0\n")  # non-monotone theta
    with pytest.raises(ConfigError):
        make_coupling(f"table:{bad}")
    short = tmp_path / "short.csv"
    short.write_text("theta,J\n1,2\n2,3\n")
    with pytest.raises(ConfigError):
        make_coupling(f"table:{short}")
