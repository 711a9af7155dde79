"""Rotationally symmetric weighted manifolds and exact geometric functionals.

A model manifold is encoded entirely by its weighted area function A(r): the
(n-1)-dimensional weighted area density of the sphere of radius r.  All
quantities involving A are carried as logarithms so that violently growing
weights (e.g. A(r) = r^2 e^{r^4}) never overflow intermediate arithmetic;
exponentials are taken only for final scalar outputs, behind explicit range
checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import logsumexp

from .errors import InvalidArgumentError, NumericalFailure, RangeError

# log of the largest double with a little headroom; exp() beyond this is an error
LOG_MAX_SCALAR = 709.0
# stricter budget for face areas entering grids: cell measures, flux sums and
# inner products multiply in O(1) factors that must not push past LOG_MAX_SCALAR
LOG_MAX_GRID = 700.0

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def sphere_constant(dimension: int) -> float:
    """Surface measure of the unit (n-1)-sphere, 2*pi^(n/2)/Gamma(n/2)."""
    return 2.0 * math.pi ** (dimension / 2.0) / math.gamma(dimension / 2.0)


class RadialManifold:
    """A weighted rotationally symmetric model manifold.

    Immutable after construction and safe to share across workers.  Use the
    factory functions ``euclidean``, ``power_exp_weight``, ``warped_cone`` and
    ``custom_manifold`` rather than the constructor.
    """

    def __init__(self, family: str, dimension: int, params: dict,
                 log_area_fn):
        if dimension < 2 or int(dimension) != dimension:
            raise InvalidArgumentError(f"dimension must be an integer >= 2, got {dimension}")
        self.family = family
        self.dimension = int(dimension)
        self.params = dict(params)
        self.sphere_constant = sphere_constant(self.dimension)
        self.log_sphere_constant = math.log(self.sphere_constant)
        self._log_area_fn = log_area_fn

    def log_area(self, r):
        """log A(r), elementwise; -inf at r = 0.  Never overflows."""
        arr = np.asarray(r, dtype=float)
        if not np.all(np.isfinite(arr)):
            raise InvalidArgumentError("radius must be finite")
        if np.any(arr < 0):
            raise InvalidArgumentError("radius must be nonnegative")
        with np.errstate(divide="ignore"):
            out = self._log_area_fn(arr)
        if arr.ndim == 0:
            return float(out)
        return out

    def describe(self) -> dict:
        """JSON-friendly description of the model, for report provenance."""
        return {"family": self.family, "dimension": self.dimension, **self.params}

    def __repr__(self):
        extras = "".join(f", {k}={v}" for k, v in self.params.items())
        return f"RadialManifold({self.family}, n={self.dimension}{extras})"


def euclidean(dimension: int = 3) -> RadialManifold:
    """Flat R^n with Lebesgue measure: A(r) = r^(n-1)."""
    k = dimension - 1

    def _log_a(r):
        return k * np.log(r)

    return RadialManifold("euclidean", dimension, {}, _log_a)


def power_exp_weight(p: float, sign: int, dimension: int = 3) -> RadialManifold:
    """R^n weighted by exp(sign * r^p): A(r) = r^(n-1) exp(sign * r^p).

    ``p=4, sign=+1, dimension=3`` is the stochastically incomplete model whose
    complement perimeters blow up; ``p=2, sign=-1`` is the Gaussian-weight
    model with nonnegative generalized curvature.
    """
    if p <= 0:
        raise InvalidArgumentError(f"weight exponent must be positive, got {p}")
    if sign not in (1, -1):
        raise InvalidArgumentError(f"weight sign must be +1 or -1, got {sign}")
    k = dimension - 1

    def _log_a(r):
        return k * np.log(r) + sign * r ** p

    return RadialManifold("power_exp", dimension, {"p": float(p), "sign": int(sign)}, _log_a)


def warped_cone(dimension: int = 3) -> RadialManifold:
    """Warped product over the unit sphere with profile psi(r) = r exp(r^4/2).

    A(r) = psi(r)^(n-1); for n = 3 the radial operator coincides with the
    power_exp(p=4, sign=+1) weighted model.
    """
    k = dimension - 1

    def _log_a(r):
        return k * (np.log(r) + r ** 4 / 2.0)

    return RadialManifold("warped_cone", dimension, {}, _log_a)


def custom_manifold(radii, log_areas, dimension: int = 3) -> RadialManifold:
    """Model defined by a tabulated log A, interpolated monotone-cubically.

    The table must cover every radius later queried; evaluation outside
    [radii[0], radii[-1]] raises, except r = 0 which is always -inf.
    """
    radii = np.asarray(radii, dtype=float)
    log_areas = np.asarray(log_areas, dtype=float)
    if radii.ndim != 1 or radii.shape != log_areas.shape or radii.size < 4:
        raise InvalidArgumentError("need matching 1-d tables with at least 4 entries")
    if radii[0] <= 0 or np.any(np.diff(radii) <= 0):
        raise InvalidArgumentError("table radii must be positive and strictly increasing")
    interp = PchipInterpolator(radii, log_areas, extrapolate=False)
    lo, hi = radii[0], radii[-1]

    def _log_a(r):
        out = np.where(r == 0.0, -np.inf, interp(np.maximum(r, lo)))
        inside = (r == 0.0) | ((r >= lo) & (r <= hi))
        if not np.all(inside):
            raise InvalidArgumentError(
                f"radius outside tabulated range [{lo}, {hi}]")
        return out

    return RadialManifold("custom", dimension, {"table_range": [float(lo), float(hi)]}, _log_a)


def perimeter_ball(manifold: RadialManifold, r: float) -> float:
    """Weighted perimeter of the centered ball of radius r: sigma * A(r)."""
    log_a = manifold.log_area(float(r))
    total = manifold.log_sphere_constant + log_a
    if total > LOG_MAX_SCALAR:
        raise RangeError(f"perimeter overflows double precision at r={r}")
    return manifold.sphere_constant * math.exp(log_a) if log_a > -math.inf else 0.0


def log_area_integral(manifold: RadialManifold, a: float, b: float,
                      rel_tol: float = 1e-12, max_refine: int = 18) -> float:
    """log of the integral of A(s) ds over [a, b], by panelwise Gauss-Legendre.

    All accumulation happens in log space (log-sum-exp), so the result is
    finite and accurate even when A itself would overflow.  Panels are doubled
    until the log value moves by less than rel_tol, which bounds the relative
    error of the underlying integral.
    """
    if b < a:
        raise InvalidArgumentError(f"empty integration range [{a}, {b}]")
    if b == a:
        return -math.inf
    previous = None
    panels = 1
    for _ in range(max_refine):
        edges = np.linspace(a, b, panels + 1)
        mids = 0.5 * (edges[:-1] + edges[1:])
        half = 0.5 * (edges[1:] - edges[:-1])
        # nodes: (panels, 16); weights pick up the panel half-width
        nodes = mids[:, None] + half[:, None] * _GL_NODES[None, :]
        logw = np.log(half)[:, None] + np.log(_GL_WEIGHTS)[None, :]
        value = float(logsumexp(logw + manifold.log_area(nodes)))
        if previous is not None and abs(value - previous) <= rel_tol:
            return value
        previous = value
        panels *= 2
    raise NumericalFailure(f"log-space quadrature failed to converge on [{a}, {b}]")


def ball_volume(manifold: RadialManifold, r: float) -> float:
    """Weighted volume of the centered ball of radius r, to ~1e-10 relative."""
    if r < 0 or not math.isfinite(r):
        raise InvalidArgumentError(f"radius must be finite and nonnegative, got {r}")
    if r == 0.0:
        return 0.0
    log_integral = log_area_integral(manifold, 0.0, float(r), rel_tol=1e-11)
    total = manifold.log_sphere_constant + log_integral
    if total > LOG_MAX_SCALAR:
        raise RangeError(f"ball volume overflows double precision at r={r}")
    return math.exp(total)


@dataclass(frozen=True)
class RadialBVDatum:
    """A radial bounded-variation profile with exact total variation.

    ``kind`` is one of ``ball_indicator``, ``complement_indicator``,
    ``piecewise`` or ``constant_one``.  Piecewise data are given as a sorted
    sequence of (radius, value) breakpoints, linearly interpolated between
    distinct radii; a repeated radius encodes a jump.  Outside the breakpoint
    range the profile is constant.
    """

    kind: str
    radius: float | None = None
    breakpoints: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.kind in ("ball_indicator", "complement_indicator"):
            if self.radius is None or self.radius <= 0 or not math.isfinite(self.radius):
                raise InvalidArgumentError("indicator data need a positive finite radius")
        elif self.kind == "piecewise":
            pts = self.breakpoints
            if len(pts) < 2:
                raise InvalidArgumentError("piecewise data need at least two breakpoints")
            radii = [p[0] for p in pts]
            if radii[0] < 0 or any(b < a for a, b in zip(radii, radii[1:])):
                raise InvalidArgumentError("breakpoint radii must be nonnegative and sorted")
            if any(radii.count(r) > 2 for r in radii):
                raise InvalidArgumentError("at most two breakpoints may share a radius")
        elif self.kind != "constant_one":
            raise InvalidArgumentError(f"unknown datum kind {self.kind!r}")

    @property
    def support_radius(self) -> float:
        """Radius beyond which the profile vanishes (inf if it never does)."""
        if self.kind == "ball_indicator":
            return self.radius
        if self.kind == "piecewise":
            if self.breakpoints[-1][1] == 0.0:
                return self.breakpoints[-1][0]
            return math.inf
        return math.inf

    @property
    def jump_radii(self) -> tuple[float, ...]:
        """Radii where the profile is discontinuous."""
        if self.kind in ("ball_indicator", "complement_indicator"):
            return (self.radius,)
        if self.kind == "piecewise":
            radii = [p[0] for p in self.breakpoints]
            return tuple(sorted({r for r in radii if radii.count(r) == 2 and r > 0}))
        return ()

    @property
    def value_range(self) -> tuple[float, float]:
        if self.kind == "constant_one":
            return (1.0, 1.0)
        if self.kind == "piecewise":
            values = [p[1] for p in self.breakpoints]
            return (min(values), max(values))
        return (0.0, 1.0)

    def value(self, r):
        """Profile value at radius r (elementwise).  At a jump, the right limit."""
        arr = np.asarray(r, dtype=float)
        if self.kind == "constant_one":
            out = np.ones_like(arr)
        elif self.kind == "ball_indicator":
            out = np.where(arr < self.radius, 1.0, 0.0)
        elif self.kind == "complement_indicator":
            out = np.where(arr < self.radius, 0.0, 1.0)
        else:
            radii = np.array([p[0] for p in self.breakpoints])
            values = np.array([p[1] for p in self.breakpoints])
            # right-continuous: at duplicated radii np.interp already returns
            # the later table entry for queries at or beyond the jump
            out = np.interp(arr, radii, values)
        if arr.ndim == 0:
            return float(out)
        return out


def ball_indicator(radius: float) -> RadialBVDatum:
    return RadialBVDatum("ball_indicator", radius=float(radius))


def complement_indicator(radius: float) -> RadialBVDatum:
    return RadialBVDatum("complement_indicator", radius=float(radius))


def piecewise(points) -> RadialBVDatum:
    return RadialBVDatum("piecewise", breakpoints=tuple((float(r), float(v)) for r, v in points))


def constant_one() -> RadialBVDatum:
    return RadialBVDatum("constant_one")


def exact_total_variation(datum: RadialBVDatum, manifold: RadialManifold) -> float:
    """Exact weighted total variation of a radial BV profile.

    Jumps contribute |jump| * sigma * A(r); linear pieces contribute
    |slope| * sigma * integral of A over the piece.  Indicators of balls and
    their complements both return the ball perimeter; constants return 0.
    """
    if datum.kind == "constant_one":
        return 0.0
    if datum.kind in ("ball_indicator", "complement_indicator"):
        return perimeter_ball(manifold, datum.radius)
    sigma = manifold.sphere_constant
    total = 0.0
    pts = datum.breakpoints
    for (r0, v0), (r1, v1) in zip(pts, pts[1:]):
        if r1 == r0:
            if v1 != v0:
                total += abs(v1 - v0) * perimeter_ball(manifold, r0)
        elif v1 != v0:
            slope = abs(v1 - v0) / (r1 - r0)
            log_piece = log_area_integral(manifold, r0, r1)
            if manifold.log_sphere_constant + math.log(slope) + log_piece > LOG_MAX_SCALAR:
                raise RangeError(f"total variation overflows on segment [{r0}, {r1}]")
            total += slope * sigma * math.exp(log_piece)
    return total
