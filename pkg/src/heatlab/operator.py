"""Discrete weighted Laplacian in flux form.

The operator realizes u -> (1/A) d/dr (A du/dr) on a finite-volume grid:
cell i sees the difference of face fluxes A(f) * du/dr divided by its
weighted measure.  This makes the radial flux a first-class discrete object,
gives exact discrete integration by parts, and keeps every coefficient O(1)
as a ratio of neighboring weighted quantities.

Boundary conditions: the pole face carries zero flux because A(0) = 0;
at r = R either a homogeneous Dirichlet ghost value (the ball exhaustion)
or a zero-flux Neumann face (conservation checks).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, NumericalFailure
from .geometry import RadialManifold
from .grid import Grid

DIRICHLET = "dirichlet_at_R"
NEUMANN = "neumann_at_R"


@dataclass(frozen=True)
class WeightedOperator:
    """Tridiagonal operator, symmetric in the weighted cell measures."""

    grid: Grid
    lower: np.ndarray   # coupling to cell i-1; lower[0] = 0
    diag: np.ndarray
    upper: np.ndarray   # coupling to cell i+1; upper[N-1] = 0
    bc: str

    def apply(self, u: np.ndarray) -> np.ndarray:
        """Matrix-vector product L u; accepts (N,) or (N, k) stacks."""
        u = np.asarray(u, dtype=float)
        if u.shape[0] != self.grid.N:
            raise InvalidArgumentError(
                f"vector length {u.shape[0]} does not match grid with {self.grid.N} cells")
        if u.ndim == 1:
            out = self.diag * u
            out[:-1] += self.upper[:-1] * u[1:]
            out[1:] += self.lower[1:] * u[:-1]
        else:
            out = self.diag[:, None] * u
            out[:-1] += self.upper[:-1, None] * u[1:]
            out[1:] += self.lower[1:, None] * u[:-1]
        return out

    def banded(self, shift: float, scale: float) -> np.ndarray:
        """The tridiagonal (shift * I + scale * L) in solve_banded layout."""
        n = self.grid.N
        ab = np.zeros((3, n))
        ab[0, 1:] = scale * self.upper[:-1]
        ab[1, :] = shift + scale * self.diag
        ab[2, :-1] = scale * self.lower[1:]
        return ab


def assemble(g: Grid, manifold: RadialManifold, bc: str = DIRICHLET) -> WeightedOperator:
    """Assemble the discrete weighted Laplacian on a grid.

    Coefficients are exp(log sigma + log A(face) - log mu_cell) / dc, with dc
    the distance between the cell centers (or center-to-boundary for the
    Dirichlet ghost).  Interior row sums vanish identically, so constants are
    harmonic away from the boundary.
    """
    if bc not in (DIRICHLET, NEUMANN):
        raise InvalidArgumentError(f"unknown boundary condition {bc!r}")
    n = g.N
    log_sigma = manifold.log_sphere_constant
    centers, faces = g.centers, g.faces

    lower = np.zeros(n)
    upper = np.zeros(n)
    dc = centers[1:] - centers[:-1]
    # interior face j sits between cells j-1 and j
    log_flux = log_sigma + g.log_face_area[1:n]
    upper[:-1] = np.exp(log_flux - g.log_cell_measure[:-1]) / dc
    lower[1:] = np.exp(log_flux - g.log_cell_measure[1:]) / dc

    diag = -(lower + upper)
    if bc == DIRICHLET:
        ghost = np.exp(log_sigma + g.log_face_area[n] - g.log_cell_measure[n - 1])
        diag[n - 1] -= ghost / (faces[n] - centers[n - 1])

    for arr, name in ((lower, "lower"), (diag, "diag"), (upper, "upper")):
        bad = np.nonzero(~np.isfinite(arr))[0]
        if bad.size:
            raise NumericalFailure(
                f"non-finite {name} coefficient at row {bad[0]} (face radius "
                f"{faces[bad[0]]:.6g})")
    return WeightedOperator(grid=g, lower=lower, diag=diag, upper=upper, bc=bc)
