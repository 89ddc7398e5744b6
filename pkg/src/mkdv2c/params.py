"""System parameters, the scaling ansatz, and exponent matching.

The two-component system carries a cubic coupling coefficient ``alpha``, a
modulation coefficient ``lambda`` and a temporally modulated source with
exponent ``mu`` in powers of ``t + a``. The scaling substitution

    u = (t+a)^m * Phi(x / (t+a)^n),   v = (t+a)^m * Psi(x / (t+a)^n)

collapses the PDEs to a coupled ODE pair only when the powers of ``t + a``
multiplying the four terms of each equation coincide. Matching them forces
``m = -1/3``, ``n = 1/3`` and ``mu = -2``; any other ``mu`` is non-reducing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

__all__ = ["SystemParams", "SimilarityParams", "ExponentReduction", "reduce_exponents"]

REDUCING_M = Fraction(-1, 3)
REDUCING_N = Fraction(1, 3)
REDUCING_MU = -2.0


@dataclass(frozen=True)
class SystemParams:
    """Coefficients of the two-component system plus the time shift.

    ``a > 0`` keeps ``(t+a)^(1/3)`` real for all ``t >= 0``. ``alpha_I`` and
    ``alpha_II`` are the integration constants of the reduced second-order
    pair; the solvable moving-boundary class has both equal to zero, and the
    conserved-quantity machinery assumes that.
    """

    alpha: float = 1.0
    lam: float = 1.0
    a: float = 1.0
    mu: float = -2.0
    alpha_I: float = 0.0
    alpha_II: float = 0.0

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError(f"time shift a must be positive, got {self.a}")


@dataclass(frozen=True)
class SimilarityParams:
    """Exponent triple (m, n, mu) of the scaling ansatz."""

    m: Fraction = REDUCING_M
    n: Fraction = REDUCING_N
    mu: float = REDUCING_MU

    @property
    def is_reducing(self) -> bool:
        return self.m == REDUCING_M and self.n == REDUCING_N and self.mu == REDUCING_MU


@dataclass(frozen=True)
class ExponentReduction:
    """Outcome of exponent matching, with the balance diagnostics.

    ``balances`` maps each term of the first component equation to the power
    of ``t + a`` it carries after substitution (evaluated at the candidate
    exponents). Reduction succeeds exactly when all four coincide.
    """

    similarity: SimilarityParams
    reducing: bool
    balances: dict[str, Fraction] = field(default_factory=dict)
    mismatch: str | None = None


def _term_balances(m: Fraction, n: Fraction, mu) -> dict[str, Fraction]:
    # float -> Fraction is exact, so the balance comparison is exact too
    mu_q = Fraction(mu)
    return {
        "time_derivative": m - 1,
        "dispersion": m - 3 * n,
        "cubic": 3 * m - n,
        "modulated_source": mu_q - 3 * m - n,
    }


def reduce_exponents(system: SystemParams) -> ExponentReduction:
    """Match powers of ``t + a`` and return the forced exponent triple.

    Independent of ``alpha``, ``lam`` and ``a``: those multiply the terms but
    do not enter the power count. A system with ``mu != -2`` cannot balance
    the modulated source against the other three terms, and the result is
    flagged non-reducing with the offending balance spelled out.
    """
    m, n = REDUCING_M, REDUCING_N
    balances = _term_balances(m, n, system.mu)
    target = balances["time_derivative"]
    if all(b == target for b in balances.values()):
        return ExponentReduction(
            similarity=SimilarityParams(m=m, n=n, mu=REDUCING_MU),
            reducing=True,
            balances=balances,
        )
    bad = {k: v for k, v in balances.items() if v != target}
    return ExponentReduction(
        similarity=SimilarityParams(m=m, n=n, mu=float(system.mu)),
        reducing=False,
        balances=balances,
        mismatch=(
            f"terms {sorted(bad)} carry power(s) "
            f"{[str(v) for _, v in sorted(bad.items())]} instead of {target}; "
            f"mu={system.mu} does not reduce (requires mu=-2)"
        ),
    )
