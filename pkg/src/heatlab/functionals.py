"""Discrete BV functionals on radial solutions.

Total variation is accumulated in flux form, face by face: the variation
across the face between cells i and i+1 is sigma * A(face) * |u_{i+1} - u_i|.
This matches the flux identity used by the divergence witness exactly (no
gradient reconstruction), and each term stays inside the floating range
because grids are built under a log-area budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, NumericalFailure, RangeError
from .geometry import RadialManifold
from .grid import Grid


def _values_of(s) -> np.ndarray:
    values = s.values if hasattr(s, "values") else s
    return np.asarray(values, dtype=float)


def _check_grid(s, g: Grid, name: str) -> np.ndarray:
    values = _values_of(s)
    if values.ndim != 1 or values.size != g.N:
        raise InvalidArgumentError(f"{name} is not defined on this grid")
    grid = getattr(s, "grid", None)
    if grid is not None and not np.array_equal(grid.faces, g.faces):
        raise InvalidArgumentError(f"{name} lives on a different grid")
    return values


def weighted_mass(g: Grid, values) -> float:
    """Integral of the profile against the weighted measure, sum mu_i u_i."""
    u = _values_of(values)
    if u.ndim != 1 or u.size != g.N:
        raise InvalidArgumentError("state length does not match the grid")
    return math.fsum(np.exp(g.log_cell_measure) * u)


def weighted_l1_norm(g: Grid, values) -> float:
    u = _values_of(values)
    if u.ndim != 1 or u.size != g.N:
        raise InvalidArgumentError("state length does not match the grid")
    return math.fsum(np.exp(g.log_cell_measure) * np.abs(u))


def weighted_inner(g: Grid, u, v) -> float:
    """Weighted inner product sum mu_i u_i v_i (compensated)."""
    a, b = _values_of(u), _values_of(v)
    if a.shape != (g.N,) or b.shape != (g.N,):
        raise InvalidArgumentError("state length does not match the grid")
    return math.fsum(np.exp(g.log_cell_measure) * a * b)


def l1_mu_distance(a, b, g: Grid, m: RadialManifold | None = None) -> float:
    """Weighted L1 distance between two solutions on the same grid."""
    ua = _check_grid(a, g, "first solution")
    ub = _check_grid(b, g, "second solution")
    return math.fsum(np.exp(g.log_cell_measure) * np.abs(ua - ub))


def face_variation_terms(s, g: Grid, m: RadialManifold) -> np.ndarray:
    """Per-interior-face variation sigma * A(f) * |u_{i+1} - u_i|.

    Faces are indexed 1..N-1; the artificial boundary face at R is excluded,
    so the value measures variation inside the open truncation ball.
    """
    u = _check_grid(s, g, "solution")
    du = np.abs(np.diff(u))
    log_sa = m.log_sphere_constant + g.log_face_area[1:-1]
    with np.errstate(over="ignore"):  # overflow is detected and raised below
        terms = np.exp(log_sa) * du
    if not np.all(np.isfinite(terms)):
        j = int(np.argmax(~np.isfinite(terms)))
        raise RangeError(
            f"variation term overflows at face r={g.faces[j + 1]:.6g}")
    return terms


def total_variation(s, g: Grid, m: RadialManifold) -> float:
    """Weighted total variation of a discrete profile, compensated sum."""
    total = math.fsum(face_variation_terms(s, g, m))
    if not math.isfinite(total):
        raise RangeError("total variation overflows double precision")
    return total


@dataclass(frozen=True)
class FluxProfile:
    """Discrete radial flux q(f) = -A(f) * du/dr at interior faces.

    ``r_t`` is the smallest face radius whose flux exceeds ``threshold`` and
    ``delta_t`` the flux there; both are None when no face crosses.
    """

    t: float
    radii: np.ndarray
    q: np.ndarray
    threshold: float | None = None
    r_t: float | None = None
    delta_t: float | None = None


def flux_profile(s, g: Grid, m: RadialManifold,
                 qthreshold: float | None = None) -> FluxProfile:
    """Flux profile of a positive-time solution at the interior faces."""
    u = _check_grid(s, g, "solution")
    t = getattr(s, "t", None)
    if t is not None and not t > 0:
        raise InvalidArgumentError(f"flux profile needs positive time, got t={t}")
    dc = np.diff(g.centers)
    q = -np.exp(g.log_face_area[1:-1]) * np.diff(u) / dc
    if not np.all(np.isfinite(q)):
        j = int(np.argmax(~np.isfinite(q)))
        raise NumericalFailure(f"flux not finite at face r={g.faces[j + 1]:.6g}")
    r_t = delta_t = None
    if qthreshold is not None:
        above = np.nonzero(q > qthreshold)[0]
        if above.size:
            r_t = float(g.faces[above[0] + 1])
            delta_t = float(q[above[0]])
    return FluxProfile(t=float(t) if t is not None else math.nan,
                       radii=g.faces[1:-1].copy(), q=q,
                       threshold=qthreshold, r_t=r_t, delta_t=delta_t)


@dataclass(frozen=True)
class TVSeries:
    """Total variation along a decreasing time ladder, with its limit."""

    points: tuple[tuple[float, float], ...]
    extrapolated_limit: float
    exact: float
    method: str

    def __post_init__(self):
        ts = [p[0] for p in self.points]
        if any(b >= a for a, b in zip(ts, ts[1:])):
            raise InvalidArgumentError("series times must be strictly decreasing")


@dataclass(frozen=True)
class ExtrapolationResult:
    limit: float
    error_indicator: float
    low_confidence: bool
    method: str


def extrapolate_limit(series, method: str = "aitken",
                      order: float = 2.0) -> ExtrapolationResult:
    """Limit of a sequence sampled at h decreasing to 0.

    ``series`` is a list of (h, value) pairs with h strictly decreasing.
    The default is iterated Aitken delta-squared, which is exact for
    geometric error decay of unknown ratio; ``method="richardson"`` runs a
    Neville tableau for a declared leading error order in h.  The error
    indicator is the magnitude of the last applied correction, and
    ``low_confidence`` flags sequences whose raw differences fail to
    contract.
    """
    pairs = [(float(h), float(v)) for h, v in series]
    if len(pairs) < 3:
        raise InvalidArgumentError("extrapolation needs at least 3 points")
    hs = [h for h, _ in pairs]
    xs = [v for _, v in pairs]
    if any(b >= a for a, b in zip(hs, hs[1:])) or hs[-1] <= 0:
        raise InvalidArgumentError("h must be positive and strictly decreasing")
    if method not in ("aitken", "richardson"):
        raise InvalidArgumentError(f"unknown extrapolation method {method!r}")

    scale = max(abs(x) for x in xs)
    if max(xs) - min(xs) <= 1e-15 * max(scale, 1e-300):
        return ExtrapolationResult(limit=xs[-1], error_indicator=0.0,
                                   low_confidence=False, method=method)

    deltas = [b - a for a, b in zip(xs, xs[1:])]
    low = False
    for d0, d1 in zip(deltas, deltas[1:]):
        if abs(d1) <= 1e-13 * max(scale, 1e-300):
            continue
        if abs(d0) <= 1e-13 * max(scale, 1e-300) or abs(d1) >= 0.9 * abs(d0):
            low = True

    if method == "aitken":
        stages = [xs]
        while len(stages[-1]) >= 3:
            cur = stages[-1]
            nxt = []
            for a, b, c in zip(cur, cur[1:], cur[2:]):
                den = (c - b) - (b - a)
                if abs(den) <= 1e-14 * (abs(a) + abs(b) + abs(c) + 1e-300):
                    nxt = []
                    break
                nxt.append(c - (c - b) ** 2 / den)
            if not nxt:
                break
            stages.append(nxt)
        if len(stages) == 1:
            limit = xs[-1]
            error = abs(deltas[-1])
        else:
            limit = stages[-1][-1]
            error = abs(stages[-1][-1] - stages[-2][-1])
    else:
        if order <= 0:
            raise InvalidArgumentError(f"richardson needs a positive order, got {order}")
        rows = [xs]
        for j in range(1, len(xs)):
            prev = rows[-1]
            row = []
            for k in range(j, len(xs)):
                ratio = (hs[k - j] / hs[k]) ** (order + j - 1)
                a, b = prev[k - j + 1], prev[k - j]
                row.append(a + (a - b) / (ratio - 1.0))
            rows.append(row)
        limit = rows[-1][-1]
        error = abs(rows[-1][-1] - rows[-2][-1])

    if error > 0.05 * max(abs(limit), 1e-30):
        low = True
    return ExtrapolationResult(limit=float(limit), error_indicator=float(error),
                               low_confidence=low, method=method)
