"""Reconstruction of space-time fields from solved reduced profiles.

The inverse of the scaling substitution: given a profile (Phi, Psi) on a
xi-interval,

    u(x, t) = (t+a)^m * Phi(x / (t+a)^n),   v likewise with Psi,

with the reducing exponents m = -1/3, n = 1/3 by default. Exponents are
overridable so verification can demonstrate that perturbed exponents break
the equations (negative controls).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .params import SimilarityParams
from .solver import ReducedProfile

__all__ = ["FieldGrid", "reconstruct_fields", "similarity_grid"]


def _scaling(profile: ReducedProfile, t, similarity: SimilarityParams | None):
    sim = similarity if similarity is not None else SimilarityParams()
    a = profile.params.a
    t = np.asarray(t, dtype=float)
    if np.any(t + a <= 0):
        raise DomainError(f"t + a must stay positive; got t={t}, a={a}")
    return sim, (t + a) ** float(sim.m), (t + a) ** float(sim.n)


def reconstruct_fields(profile: ReducedProfile, t, x, similarity: SimilarityParams | None = None):
    """Field values (u, v) at time(s) ``t`` and position(s) ``x``.

    ``t`` and ``x`` broadcast against each other. The similarity variable
    ``x / (t+a)^n`` must stay inside the profile's solved range; there is no
    extrapolation.
    """
    _, amp, stretch = _scaling(profile, t, similarity)
    xi = np.asarray(x, dtype=float) / stretch
    phi, psi = profile.amplitudes(xi)
    u = amp * phi
    v = amp * psi
    if np.ndim(u) == 0:
        return float(u), float(v)
    return u, v


@dataclass(frozen=True)
class FieldGrid:
    """Sampled fields on a space-time rectangle.

    ``u`` and ``v`` are (nt, nx) arrays; ``provenance`` records whether the
    values came from the similarity reconstruction or a direct numerical
    solve of the PDEs.
    """

    x_nodes: np.ndarray
    t_nodes: np.ndarray
    u: np.ndarray
    v: np.ndarray
    provenance: str = "similarity"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for name, nodes in (("x_nodes", self.x_nodes), ("t_nodes", self.t_nodes)):
            arr = np.asarray(nodes, dtype=float)
            if arr.ndim != 1 or len(arr) < 2 or np.any(np.diff(arr) <= 0):
                raise ValueError(f"{name} must be strictly increasing, length >= 2")
        nt, nx = len(self.t_nodes), len(self.x_nodes)
        if self.u.shape != (nt, nx) or self.v.shape != (nt, nx):
            raise ValueError(
                f"field shapes {self.u.shape}/{self.v.shape} do not match grid ({nt}, {nx})"
            )

    @property
    def dx(self):
        return float(self.x_nodes[1] - self.x_nodes[0])

    @property
    def dt(self):
        return float(self.t_nodes[1] - self.t_nodes[0])

    def write_csv(self, path, res1=None, res2=None):
        """Long-format dump (t, x, u, v[, res1, res2])."""
        with open(path, "w", encoding="utf-8") as fh:
            cols = "t,x,u,v" + (",res1,res2" if res1 is not None else "")
            fh.write(cols + "\n")
            for i, t in enumerate(self.t_nodes):
                for j, x in enumerate(self.x_nodes):
                    row = [t, x, self.u[i, j], self.v[i, j]]
                    if res1 is not None:
                        row += [res1[i, j], res2[i, j]]
                    fh.write(",".join(format(val, ".17g") for val in row) + "\n")


def similarity_grid(
    profile: ReducedProfile,
    nx: int = 400,
    nt: int = 100,
    t_span: tuple[float, float] = (0.5, 2.0),
    similarity: SimilarityParams | None = None,
) -> FieldGrid:
    """Rectangular grid inside the moving domain, filled by reconstruction.

    The x-window is the largest rectangle that stays between the two
    boundary curves over the whole ``t_span``, inset by two stencil widths
    (the widest downstream stencil spans 3 points per side) so residual
    evaluation never reaches outside the solved profile.
    """
    sim = similarity if similarity is not None else SimilarityParams()
    a = profile.params.a
    t0, t1 = t_span
    if not (t0 + a > 0 and t1 > t0):
        raise ValueError(f"bad t_span {t_span} for a={a}")
    xi_lo, xi_hi = profile.xi_range
    if not xi_lo < xi_hi:
        raise ValueError("profile covers a single point; cannot build a grid")
    n = float(sim.n)
    stretch0, stretch1 = (t0 + a) ** n, (t1 + a) ** n
    lower = max(xi_lo * stretch0, xi_lo * stretch1)
    upper = min(xi_hi * stretch0, xi_hi * stretch1)
    if not lower < upper:
        raise ValueError(
            f"moving domain has empty time-uniform intersection over t in {t_span}"
        )
    # inset by 2 stencil widths (= 6 grid spacings) on each side
    dx = (upper - lower) / (nx - 1 + 12)
    x = np.linspace(lower + 6 * dx, upper - 6 * dx, nx)
    t = np.linspace(t0, t1, nt)
    u, v = reconstruct_fields(profile, t[:, None], x[None, :], similarity=sim)
    return FieldGrid(
        x_nodes=x, t_nodes=t, u=u, v=v, provenance="similarity",
        meta={"exponent_m": float(sim.m), "exponent_n": float(sim.n)},
    )
