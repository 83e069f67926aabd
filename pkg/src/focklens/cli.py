"""Command-line harness: recipe execution, tabular output, run manifests.

Subcommands map to the figure families::

    focklens evolve       --config cfg   # fig1b / fig1c / custom lens run
    focklens sweep-focus  --config cfg   # fig1d focus map + ridge
    focklens optimize     --config cfg   # fig2b fidelity table
    focklens scaling      --config cfg   # fig2c / fig3c scaling fits
    focklens trajectories --config cfg   # fig3d loss sweep
    focklens fit          --config cfg   # power-law fit of an output table

Every run writes its data tables plus ``run_manifest.json`` carrying the
fully-resolved configuration, the tool version, wall-clock time, and a
sha256 per output file.  Given the same config and seed the data files are
byte-identical across runs.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import RecipeConfig, parse_config, require_keys
from .core import cdf_rise_width
from .errors import FockLensError, ParseError
from .lens import LensParams, lens_group_schedule, run_lens_group
from .optimize import fit_power_law
from .studies import (
    focus_ridge,
    focus_run,
    lens_time_scaling,
    loss_ratio_sweep,
    scaling_study,
)

_SUBCOMMAND_RECIPES = {
    "evolve": ("fig1b", "fig1c", "custom"),
    "sweep-focus": ("fig1d",),
    "optimize": ("fig2b",),
    "scaling": ("fig2c", "fig3c"),
    "trajectories": ("fig3d",),
    "fit": ("custom",),
}


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.12g" % float(v)
    return str(v)


def _write_table(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    digest.update(path.read_bytes())
    return digest.hexdigest()


def _write_manifest(out_dir: Path, config: RecipeConfig, started: float,
                    outputs: list[Path]) -> Path:
    manifest = {
        "tool": "focklens",
        "version": __version__,
        "config": config.resolved(),
        "wall_clock_s": time.time() - started,
        "outputs": {p.name: _sha256(p) for p in outputs},
    }
    path = out_dir / "run_manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


# ---------------------------------------------------------------------------
# recipe executors (each returns the list of data files it wrote)
# ---------------------------------------------------------------------------

def _run_focus(config: RecipeConfig, out_dir: Path) -> list[Path]:
    p = config.params
    run = focus_run(alpha=p["alpha"], phi0=p["phi0"], kerr_time=p["kerr_time"],
                    eps_p=p["eps_p"], total_time=p["total_time"],
                    snapshots=p["snapshots"], window_sigma=p["window_sigma"])
    stride = p["n_stride"]
    snap_rows = []
    for t, stats in zip(run.times, run.snapshots):
        ns = stats.window.ns()[::stride]
        for n, prob, c in zip(ns, stats.probabilities[::stride],
                              stats.cdf[::stride]):
            snap_rows.append((t, int(n), prob, c))
    snap_path = out_dir / "snapshots.csv"
    _write_table(snap_path,
                 ["t (1/eps_p)", "n (photons)", "P", "CDF"], snap_rows)
    summary_rows = [
        (t, s.peak_value, s.peak_n, s.mean, s.variance, cdf_rise_width(s))
        for t, s in zip(run.times, run.snapshots)
    ]
    summary_path = out_dir / "summary.csv"
    _write_table(summary_path,
                 ["t (1/eps_p)", "peak_P", "peak_n (photons)",
                  "mean (photons)", "variance (photons^2)",
                  "cdf_width_5_95 (states)"], summary_rows)
    return [snap_path, summary_path]


def _run_custom_lens(config: RecipeConfig, out_dir: Path) -> list[Path]:
    require_keys(config, ["alpha", "target_n", "phi0_list", "beta_re_list",
                          "beta_im_list"], "a custom lens run")
    p = config.params
    phis = p["phi0_list"]
    res_ = p["beta_re_list"]
    ims = p["beta_im_list"]
    centers = p.get("center_list", [float(p["target_n"])] * len(phis))
    if not (len(phis) == len(res_) == len(ims) == len(centers)):
        raise ParseError("custom lens lists must have equal length")
    lenses = [LensParams(phi0=phi, center=c, beta=complex(r, i))
              for phi, c, r, i in zip(phis, centers, res_, ims)]
    schedule = lens_group_schedule(p["alpha"], lenses, p["target_n"])
    result = run_lens_group(schedule)
    fid_path = out_dir / "fidelity.csv"
    _write_table(fid_path,
                 ["n_target (photons)", "lenses", "fidelity", "peak_P",
                  "mean (photons)"],
                 [(p["target_n"], len(lenses), result.fidelity,
                   result.statistics.peak_value, result.statistics.mean)])
    dist_path = out_dir / "distribution.csv"
    stats = result.statistics
    _write_table(dist_path, ["n (photons)", "P", "CDF"],
                 [(int(n), prob, c) for n, prob, c in
                  zip(stats.window.ns(), stats.probabilities, stats.cdf)])
    return [fid_path, dist_path]


def _run_sweep(config: RecipeConfig, out_dir: Path) -> list[Path]:
    p = config.params
    ridge = focus_ridge(n0=p["n0"], eps_p=p["eps_p"], phi_m=p["phi_m"],
                        phi_frac_min=p["phi_frac_min"],
                        phi_frac_max=p["phi_frac_max"],
                        phi_points=p["phi_points"], t_min=p["t_min"],
                        t_max=p["t_max"], t_points=p["t_points"],
                        workers=config.workers)
    heat_rows = []
    for i, phi in enumerate(ridge.phi0_grid):
        for j, t in enumerate(ridge.t_grid):
            heat_rows.append((phi, t, ridge.peak[i, j]))
    heat_path = out_dir / "heatmap.csv"
    _write_table(heat_path,
                 ["phi0 (rad)", "t (1/eps_p)", "peak_P"], heat_rows)
    ridge_path = out_dir / "ridge.csv"
    _write_table(ridge_path,
                 ["phi0 (rad)", "t_star (1/eps_p)", "t_focal_law (1/eps_p)"],
                 list(zip(ridge.phi0_grid, ridge.t_star, ridge.t_focal_law)))
    return [heat_path, ridge_path]


def _write_scaling_tables(study, out_dir: Path, fit_series_prefix="lenses=") \
        -> list[Path]:
    fid_rows = []
    for n in study.n_list:
        for lens_count in study.lens_counts:
            res = study.results.get((lens_count, n))
            if lens_count == 0:
                fid_rows.append((n, 0, study.fidelities[(0, n)], 0, 0))
            else:
                fid_rows.append((n, lens_count, res.fidelity,
                                 res.evaluations, int(res.budget_exhausted)))
    fid_path = out_dir / "fidelity.csv"
    _write_table(fid_path,
                 ["n_target (photons)", "lenses", "fidelity", "evaluations",
                  "budget_exhausted"], fid_rows)
    lens_rows = []
    for (lens_count, n), res in sorted(study.results.items()):
        if lens_count == 0:
            continue
        for j, lens in enumerate(res.lenses):
            lens_rows.append((n, lens_count, j, lens.phi0, lens.center,
                              lens.beta.real, lens.beta.imag))
    lens_path = out_dir / "lenses.csv"
    _write_table(lens_path,
                 ["n_target (photons)", "lenses", "lens_index", "phi0 (rad)",
                  "center (photons)", "beta_re", "beta_im"], lens_rows)
    fit_rows = [(f"{fit_series_prefix}{lc}", fit.prefactor, fit.exponent,
                 fit.max_log_residual)
                for lc, fit in sorted(study.fits.items())]
    fit_path = out_dir / "fits.csv"
    _write_table(fit_path,
                 ["series", "prefactor", "exponent", "max_log_residual"],
                 fit_rows)
    return [fid_path, lens_path, fit_path]


def _run_optimize(config: RecipeConfig, out_dir: Path) -> list[Path]:
    p = config.params
    study = scaling_study(n_list=p["n_list"],
                          lens_counts=sorted(set(p["lens_counts"])),
                          restarts=p["restarts"], budget=p["budget"],
                          phi_bound=p["phi_bound"], seed=config.seed,
                          workers=config.workers)
    return _write_scaling_tables(study, out_dir)


def _run_scaling(config: RecipeConfig, out_dir: Path) -> list[Path]:
    p = config.params
    if config.recipe == "fig2c":
        study = scaling_study(n_list=p["n_list"],
                              lens_counts=sorted(set(p["lens_counts"])),
                              restarts=p["restarts"], budget=p["budget"],
                              phi_bound=p["phi_bound"], seed=config.seed,
                              fit_min_n=p["fit_min_n"],
                              workers=config.workers)
        return _write_scaling_tables(study, out_dir)
    # fig3c
    res = lens_time_scaling(n_list=p["n_list"], fit_min_n=p["fit_min_n"])
    phi_path = out_dir / "phi0.csv"
    _write_table(phi_path,
                 ["n_target (photons)", "phi0_opt (rad)", "fidelity"],
                 list(zip(res.n_list, res.phi0_opt, res.fidelities)))
    fit_path = out_dir / "fits.csv"
    rows = []
    if res.fit is not None:
        rows.append(("phi0_opt", res.fit.prefactor, res.fit.exponent,
                     res.fit.max_log_residual))
    _write_table(fit_path,
                 ["series", "prefactor", "exponent", "max_log_residual"], rows)
    return [phi_path, fit_path]


def _run_trajectories(config: RecipeConfig, out_dir: Path) -> list[Path]:
    p = config.params
    sweep = loss_ratio_sweep(target_n=p["n"], ratios=p["ratios"],
                             n_traj=p["n_traj"], tau_kerr=p["tau_kerr"],
                             eps_p=p["eps_p"], restarts=p["restarts"],
                             budget=p["budget"], phi_bound=p["phi_bound"],
                             seed=config.seed, workers=config.workers)
    rows = [(sweep.target_n, r, f, se, j, sweep.closed_fidelity,
             sweep.coherent_baseline)
            for r, f, se, j in zip(sweep.ratios, sweep.fidelities,
                                   sweep.stderrs, sweep.mean_jumps)]
    path = out_dir / "loss_sweep.csv"
    _write_table(path,
                 ["n_target (photons)", "chi_over_kappa", "fidelity",
                  "stderr", "mean_jumps", "closed_fidelity",
                  "coherent_baseline"], rows)
    lens_path = out_dir / "lens.csv"
    _write_table(lens_path,
                 ["phi0 (rad)", "center (photons)", "beta_re", "beta_im",
                  "chi (eps_p)"],
                 [(sweep.lens.phi0, sweep.lens.center, sweep.lens.beta.real,
                   sweep.lens.beta.imag, sweep.chi)])
    return [path, lens_path]


def _run_fit(config: RecipeConfig, out_dir: Path) -> list[Path]:
    require_keys(config, ["input_csv", "x_column", "y_column"],
                 "a power-law fit")
    p = config.params
    with open(p["input_csv"], newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ParseError(f"{p['input_csv']}: empty table")
        cols = {name.split(" (")[0]: name for name in reader.fieldnames}
        try:
            x_col = cols[p["x_column"]]
            y_col = cols[p["y_column"]]
        except KeyError as exc:
            raise ParseError(
                f"{p['input_csv']}: no column {exc}; available: "
                + ", ".join(cols)) from None
        pts = []
        for row in reader:
            x = float(row[x_col])
            if x >= p["min_x"]:
                pts.append((x, float(row[y_col])))
    fit = fit_power_law(pts)
    path = out_dir / "fit.csv"
    _write_table(path,
                 ["series", "prefactor", "exponent", "max_log_residual",
                  "points"],
                 [(p["y_column"], fit.prefactor, fit.exponent,
                   fit.max_log_residual, len(pts))])
    return [path]


_EXECUTORS = {
    "fig1b": _run_focus,
    "fig1c": _run_focus,
    "fig1d": _run_sweep,
    "fig2b": _run_optimize,
    "fig2c": _run_scaling,
    "fig3c": _run_scaling,
    "fig3d": _run_trajectories,
}


def run_recipe(config: RecipeConfig, subcommand: str) -> Path:
    """Execute a recipe and write its outputs plus the run manifest."""
    allowed = _SUBCOMMAND_RECIPES[subcommand]
    if config.recipe not in allowed:
        raise ParseError(
            f"subcommand '{subcommand}' runs recipes {', '.join(allowed)}; "
            f"config has recipe '{config.recipe}'")
    started = time.time()
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if subcommand == "fit":
        outputs = _run_fit(config, out_dir)
    elif config.recipe == "custom":
        outputs = _run_custom_lens(config, out_dir)
    else:
        outputs = _EXECUTORS[config.recipe](config, out_dir)
    return _write_manifest(out_dir, config, started, outputs)


def _load_config(args) -> RecipeConfig:
    text = Path(args.config).read_text()
    config = parse_config(text)
    if args.seed is not None:
        config.seed = args.seed
    if args.out_dir is not None:
        config.out_dir = args.out_dir
    if args.workers is not None:
        config.workers = args.workers
    return config


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="focklens",
        description="Fock-space lens simulator and optimization toolkit")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name, recipes in _SUBCOMMAND_RECIPES.items():
        sp = sub.add_parser(name, help=f"recipes: {', '.join(recipes)}")
        sp.add_argument("--config", required=True,
                        help="path to the recipe configuration")
        sp.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
        sp.add_argument("--out-dir", default=None,
                        help="override the config output directory")
        sp.add_argument("--workers", type=int, default=None,
                        help="override the config worker count")
    args = parser.parse_args(argv)
    try:
        config = _load_config(args)
        manifest = run_recipe(config, args.subcommand)
    except FockLensError as exc:
        record = {"error": type(exc).__name__, "message": str(exc)}
        out_dir = getattr(args, "out_dir", None) or "."
        try:
            Path(out_dir).mkdir(parents=True, exist_ok=True)
            (Path(out_dir) / "error.json").write_text(
                json.dumps(record, indent=2) + "\n")
        except OSError:
            pass
        print(f"error: {record['error']}: {record['message']}",
              file=sys.stderr)
        return 1
    print(manifest)
    return 0


if __name__ == "__main__":
    sys.exit(main())
