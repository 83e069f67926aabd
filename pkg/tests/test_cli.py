import json

import pytest

from focklens.cli import main
from focklens.config import parse_config
from focklens.errors import ParseError, RangeViolation, UnknownKey


def run_cli(args):
    return main([str(a) for a in args])


def test_parse_minimal_fig1b_defaults():
    cfg = parse_config("recipe = fig1b\n")
    assert cfg.recipe == "fig1b"
    assert cfg.params["alpha"] == 100.0
    assert cfg.params["kerr_time"] == 0.5
    assert cfg.params["eps_p"] == 1.0
    assert cfg.params["phi0"] == 2.45e-3
    assert cfg.seed == 1234
    assert cfg.workers == 1


def test_parse_rejects_unknown_key():
    with pytest.raises(UnknownKey):
        parse_config("recipe = fig1b\nbogus = 3\n")


def test_parse_range_violation():
    with pytest.raises(RangeViolation):
        parse_config("recipe = fig3d\nn_traj = 0\n")
    with pytest.raises(RangeViolation):
        parse_config("recipe = fig1b\nalpha = -5\n")
    with pytest.raises(RangeViolation):
        # a negative ratio would mean a negative loss rate
        parse_config("recipe = fig3d\nratios = 10, -5\n")


def test_parse_errors_carry_line_numbers():
    with pytest.raises(ParseError) as err:
        parse_config("recipe = fig1b\nsnapshots = x\n")
    assert "line 2" in str(err.value)
    with pytest.raises(ParseError):
        parse_config("recipe = fig1b\nnot a key value line\n")
    with pytest.raises(ParseError):
        parse_config("recipe = fig1b\nseed = 1\nseed = 2\n")


def test_parse_empty_config_lists_required():
    with pytest.raises(ParseError) as err:
        parse_config("")
    assert "recipe" in str(err.value)


def test_parse_unknown_recipe():
    with pytest.raises(RangeViolation):
        parse_config("recipe = fig9z\n")


def test_parse_lists():
    cfg = parse_config("recipe = fig2b\nn_list = 400, 900\nlens_counts = 1\n")
    assert cfg.params["n_list"] == [400, 900]
    assert cfg.params["lens_counts"] == [1]


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_evolve_recipe_outputs_and_reproducibility(tmp_path):
    cfg = _write(tmp_path, "f.cfg", "\n".join([
        "recipe = fig1b",
        "alpha = 20",
        "phi0 = 0.0145",
        "total_time = 1.6",
        "snapshots = 9",
        "n_stride = 4",
    ]) + "\n")
    out1 = tmp_path / "run1"
    out2 = tmp_path / "run2"
    assert run_cli(["evolve", "--config", cfg, "--out-dir", out1]) == 0
    assert run_cli(["evolve", "--config", cfg, "--out-dir", out2]) == 0
    snap1 = (out1 / "snapshots.csv").read_bytes()
    snap2 = (out2 / "snapshots.csv").read_bytes()
    assert snap1 == snap2  # byte-identical reruns
    header = snap1.decode().splitlines()[0]
    assert header.split(",")[0].startswith("t")
    manifest = json.loads((out1 / "run_manifest.json").read_text())
    assert manifest["config"]["recipe"] == "fig1b"
    assert manifest["config"]["alpha"] == 20
    assert set(manifest["outputs"]) == {"snapshots.csv", "summary.csv"}
    # checksums match the files on disk
    import hashlib

    for name, digest in manifest["outputs"].items():
        assert hashlib.sha256((out1 / name).read_bytes()).hexdigest() == digest


def test_sweep_focus_recipe(tmp_path):
    cfg = _write(tmp_path, "s.cfg", "\n".join([
        "recipe = fig1d",
        "n0 = 400",
        "phi_m = 0.0145",
        "phi_points = 2",
        "t_min = 0.3",
        "t_max = 3.0",
        "t_points = 10",
    ]) + "\n")
    out = tmp_path / "sweep"
    assert run_cli(["sweep-focus", "--config", cfg, "--out-dir", out]) == 0
    ridge = (out / "ridge.csv").read_text().splitlines()
    assert ridge[0] == "phi0 (rad),t_star (1/eps_p),t_focal_law (1/eps_p)"
    assert len(ridge) == 3
    heat = (out / "heatmap.csv").read_text().splitlines()
    assert len(heat) == 1 + 2 * 10


def test_optimize_recipe_small(tmp_path):
    cfg = _write(tmp_path, "o.cfg", "\n".join([
        "recipe = fig2b",
        "n_list = 400",
        "lens_counts = 1",
        "restarts = 1",
        "budget = 300",
        "seed = 3",
    ]) + "\n")
    out = tmp_path / "opt"
    assert run_cli(["optimize", "--config", cfg, "--out-dir", out]) == 0
    rows = (out / "fidelity.csv").read_text().splitlines()
    assert rows[0].startswith("n_target")
    n, lenses, fid = rows[1].split(",")[:3]
    assert (n, lenses) == ("400", "1")
    assert float(fid) > 0.1


def test_scaling_recipe_fig2c_small(tmp_path):
    cfg = _write(tmp_path, "sc.cfg", "\n".join([
        "recipe = fig2c",
        "n_list = 400, 900",
        "lens_counts = 0, 1",
        "restarts = 1",
        "budget = 300",
        "seed = 3",
    ]) + "\n")
    out = tmp_path / "fig2c"
    assert run_cli(["scaling", "--config", cfg, "--out-dir", out]) == 0
    fits = (out / "fits.csv").read_text().splitlines()
    assert fits[0] == "series,prefactor,exponent,max_log_residual"
    series = {row.split(",")[0] for row in fits[1:]}
    assert series == {"lenses=0", "lenses=1"}
    fid_rows = (out / "fidelity.csv").read_text().splitlines()[1:]
    assert len(fid_rows) == 4


def test_scaling_recipe_fig3c_small(tmp_path):
    cfg = _write(tmp_path, "s3.cfg", "\n".join([
        "recipe = fig3c",
        "n_list = 400, 1600",
        "fit_min_n = 0",
    ]) + "\n")
    out = tmp_path / "fig3c"
    assert run_cli(["scaling", "--config", cfg, "--out-dir", out]) == 0
    rows = (out / "phi0.csv").read_text().splitlines()
    assert rows[0] == "n_target (photons),phi0_opt (rad),fidelity"
    assert len(rows) == 3
    fit_row = (out / "fits.csv").read_text().splitlines()[1]
    assert fit_row.startswith("phi0_opt,")


def test_trajectories_recipe_small(tmp_path):
    cfg = _write(tmp_path, "t.cfg", "\n".join([
        "recipe = fig3d",
        "n = 100",
        "ratios = 5, 50",
        "n_traj = 8",
        "restarts = 1",
        "budget = 300",
    ]) + "\n")
    out = tmp_path / "traj"
    assert run_cli(["trajectories", "--config", cfg, "--out-dir", out]) == 0
    rows = (out / "loss_sweep.csv").read_text().splitlines()
    assert len(rows) == 3
    assert rows[0].split(",")[1] == "chi_over_kappa"


def test_fit_subcommand(tmp_path):
    table = tmp_path / "data.csv"
    xs = [1.0, 2.0, 4.0, 8.0]
    lines = ["n (photons),F"] + ["%.12g,%.12g" % (x, 3.0 * x**-0.25)
                                 for x in xs]
    table.write_text("\n".join(lines) + "\n")
    cfg = _write(tmp_path, "fit.cfg", "\n".join([
        "recipe = custom",
        f"input_csv = {table}",
        "x_column = n",
        "y_column = F",
    ]) + "\n")
    out = tmp_path / "fit"
    assert run_cli(["fit", "--config", cfg, "--out-dir", out]) == 0
    row = (out / "fit.csv").read_text().splitlines()[1].split(",")
    assert abs(float(row[1]) - 3.0) < 1e-9
    assert abs(float(row[2]) - 0.25) < 1e-12


def test_custom_lens_run(tmp_path):
    cfg = _write(tmp_path, "c.cfg", "\n".join([
        "recipe = custom",
        "alpha = 20",
        "target_n = 400",
        "phi0_list = 0.0145",
        "beta_re_list = 0",
        "beta_im_list = -0.86",
    ]) + "\n")
    out = tmp_path / "custom"
    assert run_cli(["evolve", "--config", cfg, "--out-dir", out]) == 0
    row = (out / "fidelity.csv").read_text().splitlines()[1].split(",")
    assert float(row[2]) > 0.1


def test_custom_lens_run_missing_keys(tmp_path):
    cfg = _write(tmp_path, "c.cfg", "recipe = custom\nalpha = 20\n")
    out = tmp_path / "bad"
    assert run_cli(["evolve", "--config", cfg, "--out-dir", out]) == 1
    record = json.loads((out / "error.json").read_text())
    assert record["error"] == "ParseError"
    assert "target_n" in record["message"]


def test_subcommand_recipe_mismatch(tmp_path):
    cfg = _write(tmp_path, "m.cfg", "recipe = fig1d\n")
    assert run_cli(["optimize", "--config", cfg,
                    "--out-dir", tmp_path / "x"]) == 1


def test_seed_override(tmp_path):
    cfg = _write(tmp_path, "f.cfg", "recipe = fig1b\nseed = 1\n")
    text = cfg.read_text()
    parsed = parse_config(text)
    assert parsed.seed == 1
