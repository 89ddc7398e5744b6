"""Coupling generating functions and the induced source pair.

A single scalar function J of the amplitude ratio ``theta = Psi/Phi``
generates both source functions of the coupled system:

    S(theta)  = 2*theta*J(theta) + theta^2*J'(theta)
    T(value)  = -theta^2*J'(theta)

T is formally a function of the reciprocal ratio ``Phi/Psi``; everything
here is stored and evaluated in ``theta`` to avoid the reciprocal-argument
trap, and ``source_functions`` returns the *values* of S and T entering the
equations.

Built-in choices are addressable by string id (``const:c=1.5``,
``quadratic:c=0.2``, ``rational:c=1``, ``sin:c=1``, ``inv_square:c=-0.5``)
plus ``table:<path>`` for a two-column CSV (theta, J) with a header line,
evaluated by a cubic spline and restricted to the tabulated range.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError, DomainError

__all__ = ["CouplingSpec", "source_functions", "make_coupling", "BUILTIN_COUPLINGS"]


@dataclass(frozen=True)
class CouplingSpec:
    """A generating function J, its derivative, and a reporting label.

    ``J`` and ``J_prime`` accept scalars or numpy arrays. ``theta_domain``
    limits evaluation (open interval endpoints excluded); ``None`` means
    unrestricted.
    """

    J: Callable
    J_prime: Callable
    label: str
    theta_domain: tuple[float, float] | None = None

    def _check_domain(self, theta):
        if self.theta_domain is not None:
            lo, hi = self.theta_domain
            th = np.asarray(theta)
            if np.any(th <= lo) or np.any(th >= hi):
                raise DomainError(
                    f"coupling '{self.label}' defined on theta in ({lo}, {hi}), "
                    f"queried at {theta}"
                )

    def j(self, theta):
        self._check_domain(theta)
        return self.J(theta)

    def j_prime(self, theta):
        self._check_domain(theta)
        return self.J_prime(theta)

    def derivative_mismatch(self, thetas, h: float = 1e-6) -> float:
        """Max |central difference of J - J_prime| over ``thetas``.

        Second-order in ``h``; used to validate that J and J_prime describe
        the same function.
        """
        worst = 0.0
        for th in np.atleast_1d(thetas):
            fd = (self.j(th + h) - self.j(th - h)) / (2 * h)
            worst = max(worst, abs(float(fd) - float(self.j_prime(th))))
        return worst


def source_functions(coupling: CouplingSpec, theta: float):
    """Values of the source pair (S, T) generated by J at ratio ``theta``."""
    th = np.asarray(theta, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        j = coupling.j(th)
        jp = coupling.j_prime(th)
        s = 2.0 * th * j + th * th * jp
        t = -(th * th) * jp
    if not (np.all(np.isfinite(s)) and np.all(np.isfinite(t))):
        raise DomainError(
            f"coupling '{coupling.label}' produced non-finite sources at theta={theta}"
        )
    if np.ndim(theta) == 0:
        return float(s), float(t)
    return s, t


def _const(c):
    return CouplingSpec(
        J=lambda th: np.full_like(np.asarray(th, dtype=float), c),
        J_prime=lambda th: np.zeros_like(np.asarray(th, dtype=float)),
        label=f"const:c={c!r}",
    )


def _quadratic(c):
    return CouplingSpec(
        J=lambda th: c * np.asarray(th, dtype=float) ** 2,
        J_prime=lambda th: 2.0 * c * np.asarray(th, dtype=float),
        label=f"quadratic:c={c!r}",
    )


def _rational(c):
    return CouplingSpec(
        J=lambda th: c / (1.0 + np.asarray(th, dtype=float) ** 2),
        J_prime=lambda th: -2.0 * c * np.asarray(th, dtype=float)
        / (1.0 + np.asarray(th, dtype=float) ** 2) ** 2,
        label=f"rational:c={c!r}",
    )


def _sin(c):
    return CouplingSpec(
        J=lambda th: c * np.sin(np.asarray(th, dtype=float)),
        J_prime=lambda th: c * np.cos(np.asarray(th, dtype=float)),
        label=f"sin:c={c!r}",
    )


def _inv_square(c):
    # J = c*(1 + 1/theta^2); under the source parametrization this induces
    # S = -theta/3 and T = -1/(3*theta) when c = -1/6 (the decoupling choice)
    def j(th):
        th = np.asarray(th, dtype=float)
        return c * (1.0 + th ** -2)

    def jp(th):
        th = np.asarray(th, dtype=float)
        return -2.0 * c * th ** -3

    return CouplingSpec(J=j, J_prime=jp, label=f"inv_square:c={c!r}")


BUILTIN_COUPLINGS = {
    "const": _const,
    "quadratic": _quadratic,
    "rational": _rational,
    "sin": _sin,
    "inv_square": _inv_square,
}


def _tabulated(path):
    from scipy.interpolate import CubicSpline

    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except OSError as exc:
        raise ConfigError(f"cannot read coupling table {path!r}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"malformed coupling table {path!r}: {exc}") from exc
    if data.shape[1] != 2 or data.shape[0] < 4:
        raise ConfigError(
            f"coupling table {path!r} must have two columns and >= 4 rows"
        )
    thetas, values = data[:, 0], data[:, 1]
    if np.any(np.diff(thetas) <= 0):
        raise ConfigError(f"coupling table {path!r}: theta column must increase")
    spline = CubicSpline(thetas, values, extrapolate=False)
    dspline = spline.derivative()

    def j(th):
        out = spline(th)
        if np.any(~np.isfinite(np.asarray(out))):
            raise DomainError(
                f"tabulated coupling {path!r} queried outside "
                f"[{thetas[0]}, {thetas[-1]}]"
            )
        return out

    def jp(th):
        out = dspline(th)
        if np.any(~np.isfinite(np.asarray(out))):
            raise DomainError(
                f"tabulated coupling {path!r} queried outside "
                f"[{thetas[0]}, {thetas[-1]}]"
            )
        return out

    return CouplingSpec(J=j, J_prime=jp, label=f"table:{path}")


def make_coupling(spec_id: str) -> CouplingSpec:
    """Build a coupling from its string id.

    ``<name>`` or ``<name>:c=<float>`` for built-ins, ``table:<path>`` for a
    tabulated form. The bare name defaults to ``c=1``.
    """
    if not isinstance(spec_id, str) or not spec_id:
        raise ConfigError(f"coupling id must be a non-empty string, got {spec_id!r}")
    if spec_id.startswith("table:"):
        return _tabulated(spec_id[len("table:"):])
    name, _, arg = spec_id.partition(":")
    if name not in BUILTIN_COUPLINGS:
        raise ConfigError(
            f"unknown coupling {name!r}; known: {sorted(BUILTIN_COUPLINGS)} and table:<path>"
        )
    c = 1.0
    if arg:
        key, _, val = arg.partition("=")
        if key != "c":
            raise ConfigError(f"coupling {spec_id!r}: only parameter 'c' is accepted")
        try:
            c = float(val)
        except ValueError as exc:
            raise ConfigError(f"coupling {spec_id!r}: bad value {val!r}") from exc
    return BUILTIN_COUPLINGS[name](c)
