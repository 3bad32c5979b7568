"""Panel renderers: each draws one figure from already-loaded inputs.

A renderer receives the target figure, a dict of loaded inputs (objects
with ``.table`` / ``.record`` / ``.run`` attributes, keyed by role) and
the panel's options dict.  Renderers only draw; all file access and
checksum verification happened before they are called.
"""

import numpy as np
from matplotlib import cm, colors as mcolors

from . import style
from .io import FigureInputError

RENDERERS = {}


def renderer(kind, figsize):
    def wrap(func):
        RENDERERS[kind] = (func, figsize)
        return func
    return wrap


def _finish(ax, options, xlabel=None, ylabel=None):
    if xlabel and not ax.get_xlabel():
        ax.set_xlabel(xlabel)
    if ylabel and not ax.get_ylabel():
        ax.set_ylabel(ylabel)
    if "xlim" in options:
        ax.set_xlim(*options["xlim"])
    if "ylim" in options:
        ax.set_ylim(*options["ylim"])
    if "title" in options:
        ax.set_title(options["title"])


def _grid_values(table, zcol):
    """Reshape an x-major (x, y, z) table onto its rectangular grid."""
    x, y, z = table.cols(*table.columns[:2], zcol)
    xs, ys = np.unique(x), np.unique(y)
    if xs.size * ys.size != z.size:
        raise FigureInputError(
            f"{table.origin}: {z.size} rows do not fill the "
            f"{xs.size}x{ys.size} grid spanned by its coordinates")
    return xs, ys, z.reshape(xs.size, ys.size)


def _warn(ax, message):
    ax.text(0.5, 0.5, message, transform=ax.transAxes, ha="center",
            va="center", color=style.WARNING_COLOR, fontstyle="italic",
            wrap=True)


@renderer("potential_contour", (3.6, 3.0))
def potential_contour(fig, inputs, options):
    ax = fig.subplots()
    xs, ys, v = _grid_values(inputs["potential"].table, "v")
    vmax = options.get("vmax", 16.0)
    levels = np.linspace(0.0, vmax, options.get("n_levels", 33))
    cs = ax.contourf(xs, ys, v.T, levels=levels, cmap="viridis",
                     extend="max")
    ax.contour(xs, ys, v.T, levels=levels[::4], colors="white",
               linewidths=0.3, alpha=0.55)
    fig.colorbar(cs, ax=ax, label="V(x, y)")
    _finish(ax, options, "x", "y")


@renderer("position_density", (3.6, 3.0))
def position_density(fig, inputs, options):
    ax = fig.subplots()
    li = inputs["density"]
    xs, ys, d = _grid_values(li.table, "density")
    mesh = ax.pcolormesh(xs, ys, d.T, cmap="magma", shading="auto",
                         rasterized=True)
    fig.colorbar(mesh, ax=ax, label=r"$|\psi(x,y)|^2$")
    summ = li.run.summary
    if "state_energy" in summ and "e_over_vb" in summ:
        ax.text(0.03, 0.97,
                f"E = {summ['state_energy']:.4g}"
                f" = {summ['e_over_vb']:.3g} $V_b$",
                transform=ax.transAxes, ha="left", va="top",
                color="white", fontsize="small")
    _finish(ax, options, "x", "y")


@renderer("husimi_map", (3.6, 3.0))
def husimi_map(fig, inputs, options):
    ax = fig.subplots()
    xs, ps, q = _grid_values(inputs["husimi"].table, "q")
    mesh = ax.pcolormesh(xs, ps, q.T, cmap="inferno", shading="auto",
                         rasterized=True, vmin=0.0)
    fig.colorbar(mesh, ax=ax, label="Husimi weight")
    _finish(ax, options, "x", r"$p_x$")


def _scatter_section(ax, table, point_size):
    traj, x, px = table.cols("traj", "x", "px")
    colors = cm.tab20(np.asarray(traj, dtype=int) % 20)
    ax.scatter(x, px, s=point_size, c=colors, linewidths=0)


@renderer("sections", (7.2, 2.6))
def sections(fig, inputs, options):
    axes = fig.subplots(1, max(len(inputs), 1), sharex=True, sharey=True)
    axes = np.atleast_1d(axes)
    size = options.get("point_size", 0.5)
    for ax, (role, li) in zip(axes, inputs.items()):
        if li.table.n_rows == 0:
            _warn(ax, f"no crossings: {role}")
        else:
            _scatter_section(ax, li.table, size)
        ax.set_title(role)
        ax.set_xlabel("x")
    axes[0].set_ylabel(r"$p_x$")
    _finish(axes[0], options)


@renderer("otoc_curves", (3.8, 3.0))
def otoc_curves(fig, inputs, options):
    ax = fig.subplots()
    empty, plotted = [], False
    for role, li in inputs.items():
        t = li.table
        if t.n_rows == 0:
            empty.append(role)
            continue
        ts, c, err = t.cols("t", "c", "stderr")
        line, = ax.plot(ts, c, label=role)
        lo = np.maximum(c - err, (c + err) * 1e-6)
        ax.fill_between(ts, lo, c + err, alpha=0.25,
                        color=line.get_color(), linewidth=0)
        plotted = True
    if plotted:
        if options.get("log_scale", True):
            ax.set_yscale("log")
        ax.legend(loc="lower right")
    if empty:
        _warn(ax, "no data: " + ", ".join(empty))
    _finish(ax, options, "t", "C(t)")


@renderer("lambda_bound", (3.8, 3.0))
def lambda_bound(fig, inputs, options):
    ax = fig.subplots()
    t = inputs["report"].table
    xcol = options.get("x", "t_over_tc")
    xv, lam, err, bound, acc, viol = t.cols(
        xcol, "lambda", "stderr", "bound", "accepted", "violation")
    order = np.argsort(xv)
    xv, lam, err, bound = xv[order], lam[order], err[order], bound[order]
    acc, viol = acc[order] == 1, viol[order] == 1
    ax.plot(xv, bound, color=style.BOUND_COLOR,
            label=r"$2\pi k_B T/\hbar$")
    ok = acc & ~viol
    ax.errorbar(xv[ok], lam[ok], yerr=err[ok], fmt="o", ms=4,
                capsize=2, color="#1f77b4", label=r"fitted $\lambda$")
    if viol.any():
        ax.errorbar(xv[acc & viol], lam[acc & viol],
                    yerr=err[acc & viol], fmt="x", ms=6, capsize=2,
                    color=style.BOUND_COLOR, label="bound violation")
    if (~acc).any():
        for xr in xv[~acc]:
            ax.axvline(xr, color="0.85", linewidth=0.8, zorder=0)
    ax.legend(loc="upper left")
    xlabel = r"$T/T_c$" if xcol == "t_over_tc" else "T"
    _finish(ax, options, xlabel, r"$\lambda$")


@renderer("gyration_hist", (3.8, 2.8))
def gyration_hist(fig, inputs, options):
    ax = fig.subplots()
    t = inputs["hist"].table
    lo, hi, count = t.cols("bin_lo", "bin_hi", "count")
    ax.bar(lo, count, width=hi - lo, align="edge",
           color=style.COMPACT_COLOR, alpha=0.85, linewidth=0)
    split = inputs["split"].record if "split" in inputs else None
    if split:
        thr = split["threshold"]
        ax.axvline(thr, color="k", linestyle="--", linewidth=1.0)
        ax.text(thr, ax.get_ylim()[1] * 0.97,
                f" threshold = {thr:.3g}\n separation = "
                f"{split['separation']:.3g}",
                ha="left", va="top", fontsize="small")
    _finish(ax, options, r"max $r_g$ per trajectory", "count")


@renderer("section_partition", (6.4, 2.8))
def section_partition(fig, inputs, options):
    ax_all, ax_kept = fig.subplots(1, 2, sharex=True, sharey=True)
    full = inputs["full"].table
    thr = inputs["split"].record["threshold"]
    x, px, rg = full.cols("x", "px", "rg_max")
    compact = rg <= thr
    size = options.get("point_size", 0.5)
    ax_all.scatter(x[~compact], px[~compact], s=size,
                   color=style.EXTENDED_COLOR, linewidths=0,
                   label=f"$r_g$ > {thr:.3g}")
    ax_all.scatter(x[compact], px[compact], s=size,
                   color=style.COMPACT_COLOR, linewidths=0,
                   label=f"$r_g$ ≤ {thr:.3g}")
    ax_all.set_title("all crossings")
    leg = ax_all.legend(loc="upper right", markerscale=8)
    for h in leg.legend_handles:
        h.set_sizes([10.0])
    kept = inputs["filtered"].table
    if kept.n_rows == 0:
        _warn(ax_kept, "no retained crossings")
    else:
        kx, kpx = kept.cols("x", "px")
        ax_kept.scatter(kx, kpx, s=size, color=style.COMPACT_COLOR,
                        linewidths=0)
    ax_kept.set_title(f"$r_g$ ≤ {thr:.3g} only")
    for ax in (ax_all, ax_kept):
        ax.set_xlabel("x")
    ax_all.set_ylabel(r"$p_x$")
    _finish(ax_all, options)


@renderer("trajectory_instanton", (3.8, 3.4))
def trajectory_instanton(fig, inputs, options):
    ax = fig.subplots()
    if "potential" in inputs:
        xs, ys, v = _grid_values(inputs["potential"].table, "v")
        ax.contour(xs, ys, v.T,
                   levels=np.linspace(0.5, 12.0, 9), colors="0.8",
                   linewidths=0.5, zorder=0)
    path = inputs["path"].table
    px_, py_ = path.cols("x", "y")
    ax.plot(px_, py_, color="0.45", linewidth=0.6, alpha=0.9,
            label="centroid path", zorder=1)
    snaps = inputs["snapshots"].table
    snap, t, bead, bx, by = snaps.cols("snap", "t", "bead", "x", "y")
    if snap.size:
        norm = mcolors.Normalize(vmin=t.min(), vmax=max(t.max(), 1e-12))
        for s in np.unique(snap):
            sel = snap == s
            ring_x = np.append(bx[sel], bx[sel][0])
            ring_y = np.append(by[sel], by[sel][0])
            ax.plot(ring_x, ring_y, color=cm.viridis(norm(t[sel][0])),
                    linewidth=1.0, marker=".", markersize=2.5, zorder=2)
    inst = inputs["instanton"].table
    ix, iy = inst.cols("x", "y")
    ax.plot(np.append(ix, ix[0]), np.append(iy, iy[0]),
            color=style.INSTANTON_COLOR, linewidth=2.2,
            label="instanton", zorder=3)
    ax.set_aspect(options.get("aspect", "equal"))
    ax.legend(loc="upper right")
    _finish(ax, options, "x", "y")
