"""Report files: delimited surfaces, JSON summary, and rendered figures.

Outputs are byte-deterministic for a fixed (config, seed): CSV cells carry 9
significant digits, JSON keys are sorted, and the PNG encoder is fed identical
draw commands.  Worker count and output directory never enter the files.
"""
from __future__ import annotations

import json
import os

import numpy as np

from . import engine, limits, models


def _fmt(v: float) -> str:
    return f"{v:.9g}"


def write_surface_csv(path, grid: models.EvalGrid, values: np.ndarray):
    """Row-major x,y,value table."""
    lines = ["x,y,value"]
    for i, x in enumerate(grid.xs):
        for j, y in enumerate(grid.ys):
            lines.append(f"{_fmt(x)},{_fmt(y)},{_fmt(values[i, j])}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def write_marginals_csv(path, report: engine.MarginalReport):
    lines = ["axis,x,empirical,theory"]
    for label, emp, theo in (
            ("perturbed", report.perturbed_empirical, report.perturbed_theory),
            ("original", report.original_empirical, report.original_theory)):
        for x, e, t in zip(report.grid_x, emp, theo):
            lines.append(f"{label},{_fmt(x)},{_fmt(e)},{_fmt(t)}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _norming_echo(norming):
    return {"family": norming.family, "a_n": norming.a, "b_n": norming.b, "n": norming.n}


def build_report_dict(cfg, plan, result, comparisons, marginals, dprime_curve,
                      contrast_block) -> dict:
    rep = {
        "mode": plan.mode,
        "n": plan.n,
        "replications": plan.replications,
        "seed": plan.seed,
        "grid": {"xs": list(plan.grid.xs), "ys": list(plan.grid.ys)},
        "norming": _norming_echo(plan.norming),
        "config": dict(sorted(cfg.echo.items())),
        "realized_lambda": result.lambda_summary(),
        "marginals": {"sup_perturbed": marginals.sup_perturbed,
                      "sup_original": marginals.sup_original},
    }
    if plan.mode == engine.CONTRAST:
        rep["sup_distance"] = {k: c.sup_distance for k, c in comparisons.items()}
        rep["contrast"] = contrast_block
    else:
        comp = comparisons[plan.mode]
        rep["sup_distance"] = comp.sup_distance
        rep["mc_standard_error_max"] = comp.mc_standard_error
    if dprime_curve is not None:
        rep["dprime"] = dprime_curve
    return rep


def write_report_json(path, report: dict):
    for key, val in report.items():
        _assert_finite(val, key)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _assert_finite(val, where):
    if isinstance(val, dict):
        for k, v in val.items():
            _assert_finite(v, f"{where}.{k}")
    elif isinstance(val, (list, tuple)):
        for i, v in enumerate(val):
            _assert_finite(v, f"{where}[{i}]")
    elif isinstance(val, float) and not np.isfinite(val):
        raise ValueError(f"non-finite value in report at {where}: {val}")


# ---------------------------------------------------------------------------
# figures
# ---------------------------------------------------------------------------

def _plt():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def _surface_panels(plt, fig, axes, grid, named_surfaces):
    extent = (grid.ys[0], grid.ys[-1], grid.xs[0], grid.xs[-1])
    for ax, (title, values, cmap, vlim) in zip(axes, named_surfaces):
        im = ax.imshow(values, origin="lower", extent=extent, aspect="auto",
                       cmap=cmap, vmin=vlim[0], vmax=vlim[1])
        ax.set_title(title, fontsize=9)
        ax.set_xlabel("y (original)")
        ax.set_ylabel("x (perturbed)")
        fig.colorbar(im, ax=ax, shrink=0.8)


def render_surface_figure(path, grid, comparison: engine.ComparisonReport, label: str):
    plt = _plt()
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.6))
    dev = np.abs(comparison.deviations)
    _surface_panels(plt, fig, axes, grid, [
        (f"empirical joint CDF ({label})", comparison.empirical, "viridis", (0, 1)),
        ("limit surface", comparison.theoretical, "viridis", (0, 1)),
        (f"|deviation|, sup={comparison.sup_distance:.4f}", dev, "magma", (0, dev.max() or 1e-12)),
    ])
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_marginals_figure(path, report: engine.MarginalReport):
    plt = _plt()
    xs = np.asarray(report.grid_x)
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.4), sharey=True)
    for ax, label, emp, theo, sup in (
            (axes[0], "perturbed maximum", report.perturbed_empirical,
             report.perturbed_theory, report.sup_perturbed),
            (axes[1], "original maximum", report.original_empirical,
             report.original_theory, report.sup_original)):
        ax.plot(xs, theo, "-", lw=1.5, label="limit")
        ax.plot(xs, emp, "o", ms=4, label="empirical")
        ax.set_title(f"{label}  (KS={sup:.4f})", fontsize=9)
        ax.set_xlabel("x")
        ax.legend(fontsize=8)
    axes[0].set_ylabel("CDF")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_dprime_figure(path, dprime_curve: dict):
    plt = _plt()
    ks = dprime_curve["k"]
    est = dprime_curve["estimates"]
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    ax.plot(ks, est, "o-")
    ax.set_xlabel("block count k")
    ax.set_ylabel("n * sum of pair exceedance probabilities")
    ax.set_title(f"anti-clustering sum at x={dprime_curve['x_level']:g}", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_contrast_figure(path, grid, comparisons: dict, contrast_block: dict):
    plt = _plt()
    fig, axes = plt.subplots(2, 3, figsize=(12, 6.6))
    for row, key in enumerate((models.REPLACING, models.MISSING)):
        comp = comparisons[key]
        dev = np.abs(comp.deviations)
        _surface_panels(plt, fig, axes[row], grid, [
            (f"empirical ({key})", comp.empirical, "viridis", (0, 1)),
            (f"limit ({key})", comp.theoretical, "viridis", (0, 1)),
            (f"|deviation|, sup={comp.sup_distance:.4f}", dev, "magma", (0, dev.max() or 1e-12)),
        ])
    gx, gy = contrast_block["x"], contrast_block["y"]
    fig.suptitle(
        f"missing-vs-replacing gap at ({gx:g},{gy:g}): "
        f"{contrast_block['gap']:.4f} (limit {contrast_block['gap_limit']:.4f})",
        fontsize=10)
    fig.tight_layout(rect=(0, 0, 1, 0.96))
    fig.savefig(path, dpi=120)
    plt.close(fig)


# ---------------------------------------------------------------------------
# orchestration
# ---------------------------------------------------------------------------

def run_and_write(cfg, out_dir, seed=None, workers: int = 1, figures=None) -> dict:
    """Run the configured experiment and write all report files into out_dir.

    Returns the report dict.  Figures render unless disabled by the config or
    the ``figures`` override.
    """
    plan = cfg.build_plan(seed=seed)
    want_figures = cfg.figures if figures is None else figures
    os.makedirs(out_dir, exist_ok=True)
    result = engine.run_experiment(plan, workers=workers)

    law = plan.selection.lambda_law
    comparisons = {}
    if plan.mode == engine.CONTRAST:
        for key in (models.REPLACING, models.MISSING):
            surface = limits.limit_surface(plan.grid, law, key)
            comparisons[key] = engine.compare(result.ecdf(which=key), surface)
        marg = engine.marginal_check(result, which=models.REPLACING)
        cx, cy = cfg.contrast_point
        gap = (result.joint_probability(cx, cy, which=models.MISSING)
               - result.joint_probability(cx, cy, which=models.REPLACING))
        contrast_block = {
            "x": cx, "y": cy,
            "replacing": result.joint_probability(cx, cy, which=models.REPLACING),
            "missing": result.joint_probability(cx, cy, which=models.MISSING),
            "gap": gap,
            "gap_limit": (limits.missing_limit(cx, cy, law)
                          - limits.replacing_limit(cx, cy, law)),
        }
    else:
        surface = limits.limit_surface(plan.grid, law, plan.mode)
        comparisons[plan.mode] = engine.compare(result.ecdf(), surface)
        marg = engine.marginal_check(result)
        contrast_block = None

    dprime_curve = None
    if cfg.dprime is not None:
        req = cfg.dprime
        estimates = [engine.dprime_diagnostic(plan.process, plan.n, k, req.x_level,
                                              plan.norming, req.replications,
                                              seed=plan.seed, workers=workers)
                     for k in req.k_values]
        dprime_curve = {"k": list(req.k_values), "estimates": estimates,
                        "x_level": req.x_level, "replications": req.replications}

    if plan.mode == engine.CONTRAST:
        write_surface_csv(os.path.join(out_dir, "surface_empirical.csv"),
                          plan.grid, comparisons[models.REPLACING].empirical)
        write_surface_csv(os.path.join(out_dir, "surface_theory.csv"),
                          plan.grid, comparisons[models.REPLACING].theoretical)
        write_surface_csv(os.path.join(out_dir, "surface_empirical_missing.csv"),
                          plan.grid, comparisons[models.MISSING].empirical)
        write_surface_csv(os.path.join(out_dir, "surface_theory_missing.csv"),
                          plan.grid, comparisons[models.MISSING].theoretical)
    else:
        comp = comparisons[plan.mode]
        write_surface_csv(os.path.join(out_dir, "surface_empirical.csv"),
                          plan.grid, comp.empirical)
        write_surface_csv(os.path.join(out_dir, "surface_theory.csv"),
                          plan.grid, comp.theoretical)
    write_marginals_csv(os.path.join(out_dir, "marginals.csv"), marg)

    report = build_report_dict(cfg, plan, result, comparisons, marg,
                               dprime_curve, contrast_block)
    write_report_json(os.path.join(out_dir, "report.json"), report)

    if want_figures:
        if plan.mode == engine.CONTRAST:
            render_contrast_figure(os.path.join(out_dir, "fig_surfaces.png"),
                                   plan.grid, comparisons, contrast_block)
        else:
            render_surface_figure(os.path.join(out_dir, "fig_surfaces.png"),
                                  plan.grid, comparisons[plan.mode], plan.mode)
        render_marginals_figure(os.path.join(out_dir, "fig_marginals.png"), marg)
        if dprime_curve is not None:
            render_dprime_figure(os.path.join(out_dir, "fig_dprime.png"), dprime_curve)
    return report
