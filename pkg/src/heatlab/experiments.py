"""Experiment drivers: variation limits, completeness and divergence probes,
comparison certificates, and gradient tail fits.

Each driver returns an ExperimentReport whose verdict is one of ``confirms``,
``refutes`` or ``inconclusive``; a refute is a successful, decisive
measurement in the negative direction, never an error.  The domain reading
of the verdict (complete/incomplete, divergent/convergent) is carried
separately as ``finding``.  Every verdict ships with the numeric rows that
produced it.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from scipy.integrate import quad

from . import functionals
from .errors import InvalidArgumentError, NumericalFailure, RangeError
from .geometry import (RadialBVDatum, RadialManifold, ball_indicator,
                       constant_one, euclidean, exact_total_variation,
                       power_exp_weight)
from .grid import build_grid
from .operator import DIRICHLET, assemble
from .solver import (RadialSolution, SolveControls, advance_states,
                     heat_semigroup, overflow_safe_radius, project_datum)

VERDICTS = ("confirms", "refutes", "inconclusive")


@dataclass(frozen=True)
class ExperimentReport:
    """Outcome of one experiment: verdict, evidence rows, fitted constants."""

    experiment: str
    manifold: dict
    controls: dict
    series: dict
    fitted: dict
    verdict: str
    finding: str
    evidence: dict
    runtime: dict


@dataclass(frozen=True)
class ComparisonData:
    """Nodes of the comparison certificate at one (t, R).

    ``v`` is the time integral of the truncated evolution of the constant
    profile, accumulated by trapezoid rule along the accepted steps; ``w`` is
    the radial barrier integral of (1 - exp(-s^4))/s^3 from r to R; ``lap_w``
    is its exact weighted Laplacian -4 + (1 - exp(-r^4))/r^4.
    """

    t: float
    R: float
    radii: np.ndarray
    v: np.ndarray
    w: np.ndarray
    lap_w: np.ndarray


def _echo_controls(c: SolveControls) -> dict:
    out = {}
    for key, value in asdict(c).items():
        if isinstance(value, float) and math.isinf(value):
            value = "inf"
        elif isinstance(value, tuple):
            value = list(value)
        out[key] = value
    return out


def _require_decreasing(values, name: str):
    vals = [float(v) for v in values]
    if not vals or any(v <= 0 or not math.isfinite(v) for v in vals):
        raise InvalidArgumentError(f"{name} must be positive and finite")
    if any(b >= a for a, b in zip(vals, vals[1:])):
        raise InvalidArgumentError(f"{name} must be strictly decreasing")
    return vals


def degiorgi_sweep(manifold: RadialManifold, datum: RadialBVDatum, t_list,
                   controls: SolveControls,
                   gap_rtol: float = 0.01) -> ExperimentReport:
    """Small-time variation limit versus the exact total variation.

    For each t the truncated heat flow is run to exhaustion convergence and
    its total variation recorded; with ``controls.richardson`` every value is
    additionally computed at doubled resolution and the pair combined as
    (4*fine - coarse)/3.  The decreasing-t series is accelerated by iterated
    Aitken and the extrapolated limit compared against the closed-form
    variation of the datum; confirmation requires the relative gap to stay
    within ``gap_rtol``.  A low-confidence extrapolation never confirms.
    """
    started = time.perf_counter()
    if not math.isfinite(datum.support_radius):
        raise InvalidArgumentError("datum must be compactly supported")
    ts = _require_decreasing(t_list, "t_list")
    exact = exact_total_variation(datum, manifold)

    rows = []
    points = []
    exhaustion_ok = True
    for t in ts:
        res = heat_semigroup(manifold, datum, t, controls)
        tv = res.probes[-1].total_variation
        used = res.solution.grid
        n_used = used.N
        if controls.richardson:
            fine_controls = controls.replace(n_cells=2 * controls.n_cells,
                                             exhaustion=(used.R,))
            fine = heat_semigroup(manifold, datum, t, fine_controls)
            n_used = fine.solution.grid.N
            tv = (4.0 * fine.probes[-1].total_variation - tv) / 3.0
        if len(res.probes) >= 2 and not res.converged:
            exhaustion_ok = False
        rows.append({"t": t, "R_used": used.R, "N": n_used, "TV": tv,
                     "extrap_flag": int(bool(controls.richardson))})
        points.append((t, tv))

    if len(points) >= 3:
        ext = functionals.extrapolate_limit(points, method="aitken")
    else:
        ext = functionals.ExtrapolationResult(
            limit=points[-1][1], error_indicator=abs(points[-1][1]),
            low_confidence=True, method="aitken")
    series = functionals.TVSeries(points=tuple(points),
                                  extrapolated_limit=ext.limit,
                                  exact=exact, method=ext.method)
    gap = abs(ext.limit - exact) / max(exact, 1e-8)
    if ext.low_confidence or not exhaustion_ok:
        verdict, finding = "inconclusive", "limit not trusted"
    elif gap <= gap_rtol:
        verdict, finding = "confirms", "variation limit matches exact value"
    else:
        verdict, finding = "refutes", "variation limit misses exact value"
    fitted = {"extrapolated_limit": ext.limit, "exact_tv": exact,
              "relative_gap": gap, "error_indicator": ext.error_indicator,
              "low_confidence": ext.low_confidence}
    return ExperimentReport(
        experiment="degiorgi", manifold=manifold.describe(),
        controls=_echo_controls(controls), series={"degiorgi": tuple(rows)},
        fitted=fitted, verdict=verdict, finding=finding,
        evidence={"points": [list(p) for p in series.points],
                  "exhaustion_ok": exhaustion_ok},
        runtime={"wall_s": time.perf_counter() - started})


def completeness_probe(manifold: RadialManifold, t: float,
                       controls: SolveControls,
                       eps_c: float = 1e-4) -> ExperimentReport:
    """Mass at the pole under exhaustion: conservative or mass-leaking.

    Evolves the constant profile on at least three truncation radii, records
    the pole value per radius, and Aitken-extrapolates the sequence in 1/R.
    The model reads complete when the limit stays within ``eps_c`` of 1 and
    incomplete when it sits below 1 - 10*eps_c with a stable exhaustion
    tail; anything in between is inconclusive.
    """
    started = time.perf_counter()
    if not (math.isfinite(t) and t > 0):
        raise InvalidArgumentError(f"time must be positive and finite, got {t}")
    c = controls
    if c.exhaustion is None:
        safe = overflow_safe_radius(manifold)
        step = max(1.0, 4.0 * math.sqrt(t))
        radii = []
        for k in range(1, max(c.max_exhaustion, 3) + 1):
            r = min(k * step, 0.999 * safe)
            if radii and r <= radii[-1] * (1 + 1e-12):
                break
            radii.append(r)
        c = c.replace(exhaustion=tuple(radii))
    res = heat_semigroup(manifold, constant_one(), t, c)
    rows = [{"R": p.R, "m_at_0": p.value_at_zero} for p in res.probes]

    fitted = {"t": t}
    if len(rows) < 3:
        verdict, finding = "inconclusive", "fewer than 3 exhaustion levels"
        fitted.update({"m_limit": rows[-1]["m_at_0"], "last_delta": math.nan})
    else:
        points = [(1.0 / row["R"], row["m_at_0"]) for row in rows]
        ext = functionals.extrapolate_limit(points, method="aitken")
        last_delta = abs(rows[-1]["m_at_0"] - rows[-2]["m_at_0"])
        tail_stable = last_delta <= eps_c
        fitted.update({"m_limit": ext.limit, "last_delta": last_delta,
                       "error_indicator": ext.error_indicator,
                       "eps_c": eps_c})
        if ext.limit >= 1.0 - eps_c:
            verdict, finding = "confirms", "complete"
        elif ext.limit <= 1.0 - 10.0 * eps_c and tail_stable:
            verdict, finding = "refutes", "incomplete"
        else:
            verdict, finding = "inconclusive", "undetermined"
    return ExperimentReport(
        experiment="completeness", manifold=manifold.describe(),
        controls=_echo_controls(c), series={"completeness": tuple(rows)},
        fitted=fitted, verdict=verdict, finding=finding,
        evidence={"rows": rows}, runtime={"wall_s": time.perf_counter() - started})


def _complement_state(manifold: RadialManifold, r0: float, t: float,
                      R_solve: float, R_base: float, controls: SolveControls):
    """Evolve [constant, ball] jointly and derive the complement by linearity.

    Returns (grid, mass values, ball values).  The complement datum is never
    evolved directly; subtracting bounded evolutions keeps the linearity
    identity exact in the discrete scheme.  controls.n_cells counts cells up
    to R_base; the count scales with the enlarged solve radius.
    """
    n_solve = max(controls.n_cells,
                  int(math.ceil(controls.n_cells * R_solve / R_base)))
    g = build_grid(manifold, R_solve, n_solve, controls.grading, (r0,),
                   controls.grading_ratio)
    op = assemble(g, manifold, DIRICHLET)
    ones = project_datum(constant_one(), g).values
    ball = project_datum(ball_indicator(g.faces[g.face_index(r0)]), g).values
    states = advance_states(op, np.stack([ones, ball], axis=1), 0.0, t, controls)
    return g, states[:, 0], states[:, 1]


def _flux_at(g, m, values, t, r) -> float:
    prof = functionals.flux_profile(
        RadialSolution(grid=g, t=t, values=values), g, m)
    j = int(np.argmin(np.abs(prof.radii - r)))
    return float(prof.q[j])


def blowup_probe(manifold: RadialManifold, r0: float, t: float, R_list,
                 controls: SolveControls,
                 slope_threshold: float | None = None,
                 q_threshold: float | None = None,
                 stabilize_rtol: float = 1e-3,
                 noise_floor_q: float | None = None) -> ExperimentReport:
    """Truncated variation growth of the complement of a ball at one time.

    Solves once on a domain extending past max(R_list), derives the
    complement state by linearity, and accumulates its variation up to each
    requested radius.  Divergence requires all of: strictly increasing TV_R,
    least-squares slope at or above the slope threshold, mass-function flux
    nondecreasing within 1e-8, and complement flux at the largest radius at
    or above the q threshold.  The q threshold defaults to 10x the flux a
    matched flat-space run leaves at the same radius (its noise floor);
    convergence requires the TV tail to stabilize instead.
    """
    started = time.perf_counter()
    if not (math.isfinite(t) and t > 0):
        raise InvalidArgumentError(f"time must be positive and finite, got {t}")
    if not (math.isfinite(r0) and r0 > 0):
        raise InvalidArgumentError(f"ball radius must be positive, got {r0}")
    radii = [float(r) for r in R_list]
    if len(radii) < 2 or any(b <= a for a, b in zip(radii, radii[1:])):
        raise InvalidArgumentError("R_list must contain >= 2 strictly increasing radii")
    if radii[0] <= r0:
        raise InvalidArgumentError(f"truncation radii must exceed r0={r0}")
    safe = overflow_safe_radius(manifold)
    if radii[-1] > safe:
        raise RangeError(
            f"R_max={radii[-1]:.6g} exceeds the overflow-safe radius "
            f"{safe:.6g}; reduce R_max")
    margin = max(2.0, 8.0 * math.sqrt(t))
    R_solve = min(radii[-1] + margin, safe)

    g, mass_values, ball_values = _complement_state(manifold, r0, t, R_solve,
                                                    radii[0], controls)
    comp = mass_values - ball_values
    comp_sol = RadialSolution(grid=g, t=t, values=comp)
    terms = functionals.face_variation_terms(comp, g, manifold)
    face_r = g.faces[1:-1]

    flux_comp = functionals.flux_profile(comp_sol, g, manifold)
    flux_mass = functionals.flux_profile(
        RadialSolution(grid=g, t=t, values=mass_values), g, manifold)

    r_used = []
    tv_values = []
    for r in radii:
        snapped = float(g.faces[int(np.argmin(np.abs(g.faces - r)))])
        tv = math.fsum(terms[face_r <= snapped + 1e-12])
        if not math.isfinite(tv):
            raise RangeError(f"TV_R overflows at R={snapped:.6g}; reduce R_max")
        r_used.append(snapped)
        tv_values.append(tv)

    r_max = r_used[-1]
    in_window = flux_mass.radii <= r_max + 1e-12
    q_mono_defect = float(np.min(np.diff(flux_mass.q[in_window])))
    mass_flux_monotone = q_mono_defect >= -1e-8
    q_at_rmax = _flux_at(g, manifold, comp, t, r_max)

    if noise_floor_q is None:
        if manifold.family == "euclidean":
            noise_floor_q = abs(q_at_rmax)
        else:
            flat = euclidean(manifold.dimension)
            gf, mf, bf = _complement_state(flat, r0, t, radii[-1] + margin,
                                           radii[0], controls)
            noise_floor_q = abs(_flux_at(gf, flat, mf - bf, t, r_max))
    q_thr = q_threshold if q_threshold is not None else max(10.0 * noise_floor_q,
                                                            1e-12)
    thresholded = functionals.flux_profile(comp_sol, g, manifold,
                                           qthreshold=q_thr)

    xs = np.asarray(r_used)
    ys = tv_values
    xbar = float(np.mean(xs))
    slope = (math.fsum((x - xbar) * y for x, y in zip(xs, ys))
             / math.fsum((x - xbar) ** 2 for x in xs))
    span = r_used[-1] - r_used[0]
    slope_thr = (slope_threshold if slope_threshold is not None
                 else 0.05 * tv_values[-1] / span)
    strictly_increasing = all(b > a for a, b in zip(tv_values, tv_values[1:]))
    stabilized = (abs(tv_values[-1] - tv_values[-2])
                  <= stabilize_rtol * max(tv_values[-1], 1e-30))

    divergent = (strictly_increasing and slope >= slope_thr
                 and mass_flux_monotone and q_at_rmax >= q_thr)
    convergent = (not divergent) and stabilized and q_at_rmax < q_thr
    if divergent:
        verdict, finding = "confirms", "divergent"
    elif convergent:
        verdict, finding = "refutes", "convergent"
    else:
        verdict, finding = "inconclusive", "undetermined"

    rows = []
    for r, tv in zip(r_used, tv_values):
        rows.append({"R": r, "TV_R": tv,
                     "q_at_Rmax": _flux_at(g, manifold, comp, t, r),
                     "r_t": thresholded.r_t, "delta_t": thresholded.delta_t})
    fitted = {"t": t, "slope": slope, "slope_threshold": slope_thr,
              "q_at_Rmax": q_at_rmax, "q_threshold": q_thr,
              "noise_floor_q": noise_floor_q,
              "r_t": thresholded.r_t, "delta_t": thresholded.delta_t,
              "tv_strictly_increasing": strictly_increasing,
              "mass_flux_monotone": mass_flux_monotone,
              "mass_flux_defect": q_mono_defect,
              "stabilized": stabilized, "R_solve": g.R}
    return ExperimentReport(
        experiment="blowup", manifold=manifold.describe(),
        controls=_echo_controls(controls), series={"blowup": tuple(rows)},
        fitted=fitted, verdict=verdict, finding=finding,
        evidence={"rows": rows},
        runtime={"wall_s": time.perf_counter() - started})


def blowup_sweep(manifold: RadialManifold, r0: float, t_list, R_list,
                 controls: SolveControls, threads: int = 1,
                 **probe_kw) -> tuple[list[ExperimentReport], dict]:
    """Run blowup probes over a time ladder; extrapolate when convergent.

    Returns the per-time reports (in t_list order) plus a summary that, when
    every probe is convergent and at least three times were measured,
    carries the Aitken-extrapolated small-time limit of TV at the largest
    radius.
    """
    ts = _require_decreasing(t_list, "t_list")

    def one(t):
        return blowup_probe(manifold, r0, t, R_list, controls, **probe_kw)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            reports = list(pool.map(one, ts))
    else:
        reports = [one(t) for t in ts]

    summary = {"findings": [r.finding for r in reports]}
    if all(r.finding == "convergent" for r in reports) and len(reports) >= 3:
        points = [(t, r.series["blowup"][-1]["TV_R"])
                  for t, r in zip(ts, reports)]
        ext = functionals.extrapolate_limit(points, method="aitken")
        summary.update({"tv_small_time_limit": ext.limit,
                        "error_indicator": ext.error_indicator,
                        "low_confidence": ext.low_confidence})
    return reports, summary


def comparison_check(t: float, R: float, controls: SolveControls,
                     vw_tol: float = 1e-6) -> ExperimentReport:
    """Certificate run on the fast-growth model: barrier domination.

    Evolves the constant profile on the truncated ball, accumulating its
    time integral v by trapezoid rule along the accepted steps, and checks
    three node-wise statements: v stays below the barrier integral w (within
    ``vw_tol``), the barrier's weighted Laplacian stays below -1, and
    t * u(t) stays below v.  The barrier integrand (1 - exp(-s^4))/s^3 is
    integrated adaptively; its Laplacian is evaluated in closed form.
    """
    started = time.perf_counter()
    manifold = power_exp_weight(4, 1, 3)
    if not (0 < t <= 1):
        raise InvalidArgumentError(f"comparison time must lie in (0, 1], got {t}")
    if not (math.isfinite(R) and R > 0):
        raise InvalidArgumentError(f"truncation radius must be positive, got {R}")

    g = build_grid(manifold, R, controls.n_cells, controls.grading, (),
                   controls.grading_ratio)
    op = assemble(g, manifold, DIRICHLET)
    u0 = project_datum(constant_one(), g).values
    v = np.zeros(g.N)

    def accumulate(t0, a, t1, b):
        v[:] += (t1 - t0) * 0.5 * (a + b)

    u_final = advance_states(op, u0, 0.0, t, controls, observer=accumulate)

    def integrand(s):
        return -math.expm1(-s ** 4) / s ** 3

    w = np.zeros(g.N)
    acc = 0.0
    err_acc = 0.0
    nodes = list(g.centers) + [g.R]
    for i in range(g.N - 1, -1, -1):
        piece, piece_err = quad(integrand, nodes[i], nodes[i + 1])
        acc += piece
        err_acc += abs(piece_err)
        w[i] = acc
    if err_acc > 1e-8:
        raise NumericalFailure(
            f"barrier quadrature error {err_acc:.3e} too large on [0, {R}]")

    r4 = g.centers ** 4
    lap_w = -4.0 + (-np.expm1(-r4)) / r4

    excess_vw = v - w
    excess_tu = t * u_final - v
    vw_ok = bool(np.all(excess_vw <= vw_tol))
    lap_ok = bool(np.all(lap_w < -1.0))
    tu_ok = bool(np.all(excess_tu <= 1e-9))
    if vw_ok and lap_ok and tu_ok:
        verdict, finding = "confirms", "barrier dominates"
    else:
        verdict, finding = "refutes", "barrier violated"

    data = ComparisonData(t=t, R=float(g.R), radii=g.centers.copy(),
                          v=v.copy(), w=w.copy(), lap_w=lap_w.copy())
    rows = tuple({"r": float(r), "v_R": float(vv), "w_R": float(ww),
                  "lap_w": float(lw)}
                 for r, vv, ww, lw in zip(g.centers, v, w, lap_w))
    spot = -4.0 + (-math.expm1(-1.0))
    fitted = {"t": t, "R": float(g.R),
              "max_v_minus_w": float(np.max(excess_vw)),
              "max_t_u_minus_v": float(np.max(excess_tu)),
              "max_lap_w": float(np.max(lap_w)),
              "lap_w_at_1": spot,
              "lap_w_near_zero": float(-4.0 + (-math.expm1(-1e-12)) / 1e-12),
              "lap_w_far": float(-4.0 + (-math.expm1(-50.0 ** 4)) / 50.0 ** 4),
              "vw_tol": vw_tol,
              "vw_ok": vw_ok, "lap_ok": lap_ok, "tu_ok": tu_ok}
    return ExperimentReport(
        experiment="comparison", manifold=manifold.describe(),
        controls=_echo_controls(controls), series={"comparison": rows},
        fitted=fitted, verdict=verdict, finding=finding,
        evidence={"worst_nodes": {
            "v_minus_w_at": float(g.centers[int(np.argmax(excess_vw))]),
            "t_u_minus_v_at": float(g.centers[int(np.argmax(excess_tu))])}},
        runtime={"wall_s": time.perf_counter() - started})


def tail_probe(manifold: RadialManifold, datum: RadialBVDatum, R_out: float,
               t_list, controls: SolveControls) -> ExperimentReport:
    """Fit of the variation mass beyond a fixed radius against 1/t.

    For each time the flow is solved on a domain extending well past R_out
    and the variation over faces beyond R_out recorded.  Only the maximal
    small-t run of strictly decreasing tails enters the fit (earlier times
    are pre-asymptotic); underflowed tails are dropped with a note.  The fit
    is log(tail) = log(C) - c/t by least squares; confirmation requires a
    negative slope in 1/t with R^2 >= 0.95.
    """
    started = time.perf_counter()
    support = datum.support_radius
    if not math.isfinite(support):
        raise InvalidArgumentError("datum must be compactly supported")
    if not (math.isfinite(R_out) and R_out >= 2.0 * support):
        raise InvalidArgumentError(
            f"datum support {support} must fit inside half of R_out={R_out}")
    ts = _require_decreasing(t_list, "t_list")
    safe = overflow_safe_radius(manifold)

    rows = []
    notes = []
    for t in ts:
        R_solve = R_out + max(2.0, 8.0 * math.sqrt(t))
        if R_solve > safe:
            R_solve = safe
            notes.append(f"solve radius capped at {safe:.6g} for t={t}")
        res = heat_semigroup(manifold, datum, t, controls.replace(
            exhaustion=(R_solve,)))
        g = res.solution.grid
        terms = functionals.face_variation_terms(res.solution.values, g, manifold)
        tail = math.fsum(terms[g.faces[1:-1] > R_out])
        rows.append({"t": t, "tail": tail})

    usable = [i for i, row in enumerate(rows) if row["tail"] > 1e-300]
    for i, row in enumerate(rows):
        if i not in usable:
            notes.append(f"tail underflowed at t={row['t']}")
    # keep the maximal small-t suffix on which the tail strictly decreases
    admissible: list[int] = []
    for i in reversed(usable):
        if not admissible or rows[i]["tail"] > rows[admissible[0]]["tail"]:
            admissible.insert(0, i)
        else:
            break
    excluded = [i for i in usable if i not in admissible]
    for i in excluded:
        notes.append(f"pre-asymptotic point excluded at t={rows[i]['t']}")

    fitted = {"n_points": len(admissible), "notes": notes}
    if len(admissible) < 3:
        verdict, finding = "inconclusive", "too few usable tail points"
        for row in rows:
            row["fit_residual"] = None
        fitted.update({"C": math.nan, "c": math.nan, "r_squared": math.nan})
    else:
        x = np.array([1.0 / rows[i]["t"] for i in admissible])
        y = np.array([math.log(rows[i]["tail"]) for i in admissible])
        xbar, ybar = float(np.mean(x)), float(np.mean(y))
        sxx = float(np.sum((x - xbar) ** 2))
        slope = float(np.sum((x - xbar) * (y - ybar)) / sxx)
        intercept = ybar - slope * xbar
        residuals = y - (intercept + slope * x)
        ss_res = float(np.sum(residuals ** 2))
        ss_tot = float(np.sum((y - ybar) ** 2))
        r_squared = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
        for row in rows:
            row["fit_residual"] = None
        for i, resid in zip(admissible, residuals):
            rows[i]["fit_residual"] = float(resid)
        fitted.update({"C": math.exp(intercept), "c": -slope,
                       "r_squared": r_squared, "slope": slope})
        if slope < 0 and r_squared >= 0.95:
            verdict, finding = "confirms", "tail decays exponentially in 1/t"
        elif slope >= 0:
            verdict, finding = "refutes", "tail does not decay in 1/t"
        else:
            verdict, finding = "inconclusive", "fit quality below threshold"
    return ExperimentReport(
        experiment="tail", manifold=manifold.describe(),
        controls=_echo_controls(controls), series={"tail": tuple(rows)},
        fitted=fitted, verdict=verdict, finding=finding,
        evidence={"rows": rows, "included": [rows[i]["t"] for i in admissible]},
        runtime={"wall_s": time.perf_counter() - started})
