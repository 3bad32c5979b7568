"""Lyapunov fits, temperature sweeps against the chaos bound, and
short-time agreement checks between OTOC variants.

Convention: the exponent is the direct growth rate
lambda = d(ln C)/dt of C(t) ~ e^{lambda t}.  A single trajectory
pinned to the barrier top has a squared stability element growing at
2 w_b, but the thermal ensemble average does not: the measure of
trajectories still hugging the saddle at time t shrinks like
e^{-w_b t}, so C(t) itself grows at w_b.  The direct rate therefore
reproduces the classical high-temperature limit lambda -> w_b and
saturates the bound exactly at the crossover temperature
(lambda = 2 pi k_B T_c / hbar = w_b).  Every fit carries the tag.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.spatial import cKDTree, distance

CONVENTION = "lambda = d(ln C)/dt"


@dataclass(frozen=True)
class WindowPolicy:
    """Fit-window selection rules.

    mode "auto" maximizes window length subject to every local slope
    lying within flat_tol of the window slope and R^2 >= r2_min; points
    must sit above the noise floor (noise_mult x the t=0 standard
    error).  On stochastic series each local slope carries its own
    statistical error, so the flatness comparison allows an extra
    local_sigma_mult standard errors; exact series (zero std_errors)
    get the bare flat_tol band.  mode "manual" fits the given
    [t_start, t_end] directly.
    """
    mode: str = "auto"
    t_start: float | None = None
    t_end: float | None = None
    min_points: int = 20
    flat_tol: float = 0.10
    r2_min: float = 0.995
    noise_mult: float = 5.0
    local_half: int = 5
    local_sigma_mult: float = 2.0


@dataclass
class LyapunovFit:
    lam: float                      # growth exponent, see CONVENTION
    window: tuple[float, float] | None
    r_squared: float
    stderr: float
    convention: str = CONVENTION
    accepted: bool = False
    reason: str = ""
    n_points: int = 0
    noise_floor: float = 0.0


def _wls_line(x, y, sigma=None):
    """Weighted straight-line fit.  Returns (slope, stderr, r_squared).

    With per-point sigmas the slope error is the propagated one; without
    them it comes from the residual variance.
    """
    n = x.size
    if sigma is not None and np.any(sigma > 0):
        # exact points (sigma 0) get the largest finite weight present
        s = np.where(sigma > 0, sigma, sigma[sigma > 0].min())
        w = 1.0 / s ** 2
    else:
        w = np.ones(n)
        sigma = None
    sw = w.sum()
    xb = (w * x).sum() / sw
    yb = (w * y).sum() / sw
    sxx = (w * (x - xb) ** 2).sum()
    sxy = (w * (x - xb) * (y - yb)).sum()
    slope = sxy / sxx
    icpt = yb - slope * xb
    res = y - (icpt + slope * x)
    sst = (w * (y - yb) ** 2).sum()
    ssr = (w * res ** 2).sum()
    r2 = 1.0 - ssr / sst if sst > 0 else 1.0
    if sigma is None:
        var = (ssr / max(n - 2, 1)) / sxx
    else:
        var = 1.0 / sxx
    return slope, math.sqrt(max(var, 0.0)), r2


def _local_slopes(t, y, sig_y, valid, half):
    """Centered least-squares slope over +-half points and its
    propagated standard error; NaN where the stencil leaves the valid
    region."""
    n = t.size
    out = np.full(n, np.nan)
    err = np.full(n, np.nan)
    for i in range(half, n - half):
        sl = slice(i - half, i + half + 1)
        if valid[sl].all():
            tt = t[sl] - t[i]
            yy = y[sl]
            stt = (tt * tt).sum()
            out[i] = (tt * (yy - yy.mean())).sum() / stt
            err[i] = math.sqrt((tt * tt * sig_y[sl] ** 2).sum()) / stt
    return out, err


def fit_lyapunov(series, policy: WindowPolicy | None = None) -> LyapunovFit:
    """Exponent of the exponential-growth stage of an OTOC series.

    "No exponential regime" is a result, not an error: the fit comes
    back with accepted=False and the reason, which is the expected
    outcome for bounded series (harmonic oscillator, very low T).
    """
    pol = policy or WindowPolicy()
    t = np.asarray(series.times, dtype=float)
    c = np.asarray(series.values, dtype=float)
    se = np.asarray(getattr(series, "std_errors", np.zeros_like(c)),
                    dtype=float)
    floor = pol.noise_mult * (se[0] if se.size else 0.0)
    valid = np.isfinite(c) & (c > 0) & (c > floor)

    def reject(reason):
        return LyapunovFit(lam=float("nan"), window=None, r_squared=0.0,
                           stderr=float("nan"), accepted=False,
                           reason=reason, n_points=0, noise_floor=floor)

    if valid.sum() < pol.min_points:
        return reject(f"fewer than {pol.min_points} points above the "
                      "noise floor")
    y = np.where(valid, np.log(np.where(valid, c, 1.0)), np.nan)
    sig_y = np.where(valid & (se > 0), se / np.where(valid, c, 1.0), 0.0)

    if pol.mode == "manual":
        if pol.t_start is None or pol.t_end is None:
            raise ValueError("manual window policy needs t_start and t_end")
        m = valid & (t >= pol.t_start) & (t <= pol.t_end)
        if m.sum() < 3:
            return reject("manual window has fewer than 3 usable points")
        slope, serr, r2 = _wls_line(t[m], y[m], sig_y[m])
        ok = r2 >= pol.r2_min and slope >= 0
        return LyapunovFit(lam=slope,
                           window=(float(t[m][0]), float(t[m][-1])),
                           r_squared=r2, stderr=serr, accepted=ok,
                           reason="" if ok else "manual window fails "
                           "acceptance thresholds",
                           n_points=int(m.sum()), noise_floor=floor)
    if pol.mode != "auto":
        raise ValueError(f"unknown window policy mode {pol.mode!r}")

    s_loc, s_err = _local_slopes(t, y, sig_y, valid, pol.local_half)
    n = t.size
    # prefix sums for O(1) per-window OLS statistics
    v = valid.astype(float)
    yz = np.where(valid, y, 0.0)
    tz = np.where(valid, t, 0.0)
    cs = {k: np.concatenate(([0.0], np.cumsum(a))) for k, a in
          (("n", v), ("x", tz), ("y", yz), ("xx", tz * tz),
           ("xy", tz * yz), ("yy", yz * yz))}

    def win_stats(i, j):
        # window [i, j); all-valid windows only
        g = {k: a[j] - a[i] for k, a in cs.items()}
        d = g["n"] * g["xx"] - g["x"] ** 2
        slope = (g["n"] * g["xy"] - g["x"] * g["y"]) / d
        sst = g["yy"] - g["y"] ** 2 / g["n"]
        ssr = sst - slope ** 2 * d / g["n"]
        r2 = 1.0 - ssr / sst if sst > 0 else 1.0
        return slope, r2

    # flatness envelopes: each local slope enters loosened by its own
    # statistical error, so noise alone cannot veto a window
    allow = pol.local_sigma_mult * s_err
    s_hi = np.where(np.isnan(s_loc), -np.inf, s_loc - allow)
    s_lo = np.where(np.isnan(s_loc), np.inf, s_loc + allow)
    run = np.concatenate(([0.0], np.cumsum(v)))
    for length in range(n, pol.min_points - 1, -1):
        starts = np.flatnonzero(
            run[length:] - run[:-length] == length)
        if starts.size == 0:
            continue
        # extreme local slopes per window start, undefined stencils masked
        mx = np.lib.stride_tricks.sliding_window_view(
            s_hi, length).max(axis=1)
        mn = np.lib.stride_tricks.sliding_window_view(
            s_lo, length).min(axis=1)
        hit = None
        for i in starts:
            slope, r2 = win_stats(i, i + length)
            if slope <= 0 or r2 < pol.r2_min:
                continue
            hi, lo = mx[i], mn[i]
            if hi == -np.inf:        # no defined local slope inside
                continue
            if hi > slope * (1 + pol.flat_tol) or \
                    lo < slope * (1 - pol.flat_tol):
                continue
            hit = i
            break
        if hit is not None:
            sl = slice(hit, hit + length)
            slope, serr, _ = _wls_line(t[sl], y[sl], sig_y[sl])
            # r2 reported is the unweighted one the policy screened on
            _, r2 = win_stats(hit, hit + length)
            return LyapunovFit(
                lam=slope, window=(float(t[hit]),
                                   float(t[hit + length - 1])),
                r_squared=r2, stderr=serr, accepted=True, reason="",
                n_points=length, noise_floor=floor)
    return reject("no exponential regime")


@dataclass
class ShortTimeCheck:
    slope: float
    ci: tuple[float, float]
    n_used: int
    window: tuple[float, float]
    inconclusive: bool = False
    skipped: bool = False
    reason: str = ""


def short_time_check(series_a, series_b, t_lo=0.05, t_hi=0.3,
                     rel_err_max=0.1, min_points=6) -> ShortTimeCheck:
    """Log-log slope of |C_a - C_b| over a small-t window.

    Points whose combined statistical error exceeds rel_err_max of the
    difference are dropped; too few survivors flags the check
    inconclusive rather than producing a noise-driven slope.
    """
    ta = np.asarray(series_a.times, dtype=float)
    tb = np.asarray(series_b.times, dtype=float)
    if ta.size != tb.size or np.max(np.abs(ta - tb)) > 1e-12:
        raise ValueError("series do not share a time grid")
    d = np.abs(np.asarray(series_a.values) - np.asarray(series_b.values))
    sig = np.sqrt(np.asarray(series_a.std_errors) ** 2 +
                  np.asarray(series_b.std_errors) ** 2)
    win = (ta >= t_lo) & (ta <= t_hi) & (ta > 0)
    if not win.any():
        return ShortTimeCheck(float("nan"), (float("nan"), float("nan")),
                              0, (t_lo, t_hi), inconclusive=True,
                              reason="no points in window")
    scale = np.max(np.abs(series_a.values))
    if d[win].max() <= 1e-10 * scale:
        return ShortTimeCheck(float("nan"), (float("nan"), float("nan")),
                              0, (t_lo, t_hi), skipped=True,
                              reason="difference at machine-noise floor")
    use = win & (d > 0) & (sig < rel_err_max * d)
    n = int(use.sum())
    if n < min_points:
        return ShortTimeCheck(float("nan"), (float("nan"), float("nan")),
                              n, (t_lo, t_hi), inconclusive=True,
                              reason=f"only {n} points beat the "
                              f"{rel_err_max:.0%} error threshold")
    slope, serr, _ = _wls_line(np.log(ta[use]), np.log(d[use]))
    half = stats.t.ppf(0.975, n - 2) * serr
    return ShortTimeCheck(slope=slope, ci=(slope - half, slope + half),
                          n_used=n, window=(t_lo, t_hi))


@dataclass
class BoundReport:
    temperatures: np.ndarray
    lambdas: dict[str, np.ndarray]
    stderrs: dict[str, np.ndarray]
    bound_values: np.ndarray
    violations: list[dict]
    fits: dict[str, list[LyapunovFit]] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)


def default_sweep_temperatures(pot):
    tc = pot.params.t_crossover
    return tc * np.array([0.7, 0.8, 0.95, 1.0, 1.2, 1.5, 2.0, 3.0])


def check_violations(temperatures, lambdas, stderrs, bounds, method=""):
    """Bound comparisons with a 3-sigma statistical allowance:
    a point violates when lambda > bound * (1 + 3 * stderr/lambda)."""
    out = []
    for t, lam, se, b in zip(temperatures, lambdas, stderrs, bounds):
        if not np.isfinite(lam):
            continue
        rel = se / lam if lam > 0 else 0.0
        if lam > b * (1.0 + 3.0 * rel):
            out.append({"method": method, "temperature": float(t),
                        "lambda": float(lam), "stderr": float(se),
                        "bound": float(b),
                        "excess": float(lam - b)})
    return out


def bound_sweep(method, temperatures, run_config=None,
                window_policy=None, keep_series=False) -> BoundReport:
    """Run one OTOC method across a temperature grid, fit exponents,
    and tabulate them against 2 pi k_B T / hbar.

    run_config keys (all optional): potential, n_traj, t_max, dt,
    record_every, seed, workers, n_beads (rpmd), grid / table / t_table
    (quantum), dt_out (quantum).  keep_series stashes the per-temperature
    OtocSeries in meta["series"] for serialization layers.
    """
    from . import classical, quantum, ring_polymer
    from .potential import DoubleWell2D

    cfg = dict(run_config or {})
    pot = cfg.pop("potential", None) or DoubleWell2D()
    temps = np.sort(np.asarray(temperatures, dtype=float))
    p = pot.params
    bounds = 2.0 * math.pi * p.kb * temps / p.hbar

    series = []
    if method == "classical":
        kw = {k: cfg[k] for k in
              ("n_traj", "t_max", "dt", "record_every", "seed", "workers",
               "sampler_opts") if k in cfg}
        for t in temps:
            series.append(classical.classical_thermal_otoc(pot, t, **kw))
    elif method == "rpmd":
        kw = {k: cfg[k] for k in
              ("n_traj", "t_max", "dt", "record_every", "seed", "workers",
               "n_beads", "sampler_opts") if k in cfg}
        for t in temps:
            series.append(ring_polymer.rpmd_otoc(pot, t, **kw))
    elif method == "quantum":
        table = cfg.get("table")
        if table is None:
            grid = cfg.get("grid") or quantum.GridSpec()
            spec = quantum.solve_spectrum(pot, grid)
            e_cut = quantum.auto_e_cut(spec, cfg.get("t_table", temps[-1]),
                                       kb=p.kb)
            table = quantum.scrambling_table(spec, e_cut, hbar=p.hbar)
        t_max = cfg.get("t_max", 8.0)
        dt_out = cfg.get("dt_out", 0.05)
        times = np.arange(int(round(t_max / dt_out)) + 1) * dt_out
        for t in temps:
            series.append(quantum.kubo_otoc(table, t, times, kb=p.kb))
    else:
        raise ValueError(f"unknown method {method!r}")

    fits = [fit_lyapunov(s, window_policy) for s in series]
    lams = np.array([f.lam for f in fits])
    errs = np.array([f.stderr for f in fits])
    report = BoundReport(
        temperatures=temps,
        lambdas={method: lams},
        stderrs={method: errs},
        bound_values=bounds,
        violations=check_violations(temps, lams, errs, bounds, method),
        fits={method: fits},
        meta={"method": method, "t_crossover": p.t_crossover,
              "convention": CONVENTION})
    if keep_series:
        report.meta["series"] = series
    return report


def correlation_dimension(points, n_r=12, max_points=1024,
                          q_lo=0.02, q_hi=0.5):
    """Pair-counting (recurrence-statistics) dimension of a point set.

    C(r) = pair fraction within distance r; the slope of ln C against
    ln r over a mid-range band of recurrence distances estimates the
    set's dimension: ~1 on a regular island curve, ~2 over a chaotic
    area.  Deterministic: oversized sets are thinned by even striding.
    """
    pts = np.asarray(points, dtype=float)
    if pts.shape[0] > max_points:
        idx = np.linspace(0, pts.shape[0] - 1, max_points).astype(int)
        pts = pts[idx]
    n = pts.shape[0]
    if n < 8:
        return float("nan")
    pts = pts - pts.mean(axis=0)
    sd = pts.std(axis=0)
    pts = pts / np.where(sd > 0, sd, 1.0)
    d = np.sort(distance.pdist(pts))
    d = d[d > 0]
    if d.size < 16:
        return 0.0          # all points coincide: a fixed point
    lo, hi = np.quantile(d, q_lo), np.quantile(d, q_hi)
    if not hi > lo > 0:
        return 0.0
    rs = np.geomspace(lo, hi, n_r)
    c = np.searchsorted(d, rs, side="right") / d.size
    keep = c > 0
    slope, _, _ = _wls_line(np.log(rs[keep]), np.log(c[keep]))
    return float(slope)


def classify_island_points(section, d_max=1.5, min_points=40,
                           max_points=1024):
    """Per-trajectory island/chaotic tags for a surface-of-section set.

    Returns (traj_ids, dimensions, island_flags).  Trajectories with
    too few crossings stay unclassified (dimension NaN, island False).
    """
    pts = section.points
    traj_ids = np.unique(pts[:, 0]).astype(int)
    dims = np.full(traj_ids.size, np.nan)
    island = np.zeros(traj_ids.size, dtype=bool)
    for k, tid in enumerate(traj_ids):
        rows = pts[pts[:, 0] == tid]
        if rows.shape[0] < min_points:
            continue
        # section rows are (traj, t, x, p_x, rg); recur in the (x, p_x) plane
        dims[k] = correlation_dimension(rows[:, 2:4], max_points=max_points)
        island[k] = dims[k] < d_max
    return traj_ids, dims, island


def island_region_fraction(section, threshold, d_max=1.5, min_points=40,
                           max_points=1024, nn_mult=3.0):
    """Fraction of low-r_g section points that lie inside island regions.

    Island regions are the areas of the (x, p_x) plane traced out by the
    recurrence-classified regular trajectories.  A retained point counts
    as inside a region when it sits within `nn_mult` median island
    nearest-neighbour spacings of the island cloud, so points of sticky
    chaotic orbits that ride along an island edge count while genuinely
    scattered points do not.  Points of trajectories too short to
    classify are left out of the denominator.

    Returns (fraction, n_retained_classified, island_traj_fraction).
    """
    traj_ids, dims, island = classify_island_points(
        section, d_max=d_max, min_points=min_points, max_points=max_points)
    flags = {int(t): bool(f) for t, f, d in zip(traj_ids, island, dims)
             if np.isfinite(d)}
    pts = section.points
    keep = pts[:, 4] <= threshold
    classified = np.array([int(t) in flags for t in pts[:, 0]])
    sel = keep & classified
    n_sel = int(sel.sum())
    if n_sel == 0:
        return float("nan"), 0, float("nan")
    on_island = np.array([flags.get(int(t), False) for t in pts[:, 0]])
    island_cloud = pts[on_island][:, 2:4]
    in_region = sel & on_island
    island_frac = float(in_region[sel].mean())
    candidates = sel & ~on_island
    if island_cloud.shape[0] >= 2 and candidates.any():
        tree = cKDTree(island_cloud)
        self_nn, _ = tree.query(island_cloud, k=2)
        delta = nn_mult * float(np.median(self_nn[:, 1]))
        d_cand, _ = tree.query(pts[candidates][:, 2:4], k=1)
        near = np.zeros(pts.shape[0], dtype=bool)
        near[np.flatnonzero(candidates)] = d_cand <= delta
        frac = float((in_region | near)[sel].mean())
    else:
        frac = island_frac
    return frac, n_sel, island_frac


def merge_reports(reports) -> BoundReport:
    """Combine per-method reports taken on the same temperature grid."""
    base = reports[0]
    out = BoundReport(
        temperatures=base.temperatures.copy(),
        lambdas={}, stderrs={}, bound_values=base.bound_values.copy(),
        violations=[], fits={}, meta=dict(base.meta))
    for r in reports:
        if (r.temperatures.size != base.temperatures.size or
                np.max(np.abs(r.temperatures - base.temperatures)) > 1e-12):
            raise ValueError("reports use different temperature grids")
        out.lambdas.update(r.lambdas)
        out.stderrs.update(r.stderrs)
        out.fits.update(r.fits)
        out.violations.extend(r.violations)
    out.meta["method"] = sorted(out.lambdas)
    return out
