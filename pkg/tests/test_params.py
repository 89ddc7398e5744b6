from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from mkdv2c import SimilarityParams, SystemParams, reduce_exponents


def test_reducing_system_returns_the_forced_triple():
    red = reduce_exponents(SystemParams(alpha=1.0, lam=1.0, a=1.0, mu=-2.0))
    assert red.reducing
    assert red.similarity.m == Fraction(-1, 3)
    assert red.similarity.n == Fraction(1, 3)
    assert red.similarity.mu == -2.0
    assert red.similarity.is_reducing


def test_all_four_balances_collapse_to_minus_four_thirds():
    # substituting m=-1/3, n=1/3, mu=-2 into each term's power of (t+a)
    red = reduce_exponents(SystemParams(mu=-2.0))
    assert set(red.balances) == {"time_derivative", "dispersion", "cubic", "modulated_source"}
    for name, value in red.balances.items():
        assert value == Fraction(-4, 3), name


def test_wrong_modulation_exponent_is_non_reducing():
    red = reduce_exponents(SystemParams(mu=0.0))
    assert not red.reducing
    assert not red.similarity.is_reducing
    assert "modulated_source" in red.mismatch
    # the three autonomous balances still agree; only the source misses
    assert red.balances["modulated_source"] != red.balances["time_derivative"]


@given(
    alpha=st.floats(-5, 5, allow_nan=False),
    lam=st.floats(-5, 5, allow_nan=False),
    a=st.floats(0.01, 100, allow_nan=False),
)
def test_reduction_is_independent_of_alpha_lambda_a(alpha, lam, a):
    red = reduce_exponents(SystemParams(alpha=alpha, lam=lam, a=a, mu=-2.0))
    again = reduce_exponents(SystemParams(alpha=alpha, lam=lam, a=a, mu=-2.0))
    assert red.reducing
    assert red.similarity == again.similarity == SimilarityParams()


def test_time_shift_must_be_positive():
    with pytest.raises(ValueError, match="positive"):
        SystemParams(a=0.0)
    with pytest.raises(ValueError, match="positive"):
        SystemParams(a=-1.0)
