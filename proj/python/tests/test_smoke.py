import csv
import json
import math
import pathlib

import jsonschema
import numpy as np
import pytest

import deglab

ROOT = pathlib.Path(__file__).resolve().parents[2]
SCHEMAS = ROOT / "schemas"


def tiny_config(**overrides):
    cfg = {
        "schema_version": 1,
        "name": "tiny",
        "runs": 2,
        "seed_base": 3,
        "dataset": {"kind": "synthetic_clusters", "classes": 3, "per_class": 30, "dim": 6, "spread": 0.2, "seed": 1},
        "architecture": {"hidden_layers": 3, "width": 6, "skip_mode": "residual"},
        "train": {"epochs": 2, "batch_size": 15, "learning_rate": 0.01},
        "snapshots": {"epochs": [0, 2], "spectrum": True, "probes": 3, "hessian_examples": 40, "grid_points": 8},
    }
    cfg.update(overrides)
    return cfg


def test_param_count_matches_formula():
    d, n, L, C = 3072, 128, 20, 20
    expected = (d * n + n) + (L - 1) * (n * n + n) + (n * C + C)
    assert deglab.param_count(L, n, d, C) == expected == 709652


def test_skew_normal_reduces_to_gaussian():
    m = deglab.skew_normal_moments(0.5, 2.0, 0.0)
    assert m[0] == pytest.approx(0.5)
    assert m[1] == pytest.approx(0.25 + 4.0)
    assert m[2] == pytest.approx(0.125 + 3 * 0.5 * 4.0)
    assert m[3] == pytest.approx(0.0625 + 6 * 0.25 * 4.0 + 3 * 16.0)


def test_skew_normal_first_moment_against_numpy_quadrature():
    xs = np.linspace(-20, 20, 4001)
    pdf = np.array([deglab.skew_normal_pdf(x, 0.0, 1.0, 1.0) for x in xs])
    m1 = np.trapezoid(xs * pdf, xs)
    assert m1 == pytest.approx(math.sqrt(1 / math.pi), rel=1e-4)
    assert deglab.skew_normal_moments(0.0, 1.0, 1.0)[0] == pytest.approx(math.sqrt(1 / math.pi), rel=1e-12)


def test_fit_recovers_grid_point():
    grid = 6
    target = deglab.mixture_moments(1e-9 * (1e6 ** (2 / 5)), -10 + 20 * 3 / 5, 0.1 * (1e4 ** (1 / 5)), -100 + 200 * 4 / 5)
    fit = deglab.fit_mixture(list(target), grid_points=grid)
    assert fit["objective"] < 1e-12
    assert fit["index"] == [2, 4, 3, 1]


def test_degraded_skip_rank():
    for k in (8, 4, 1):
        assert deglab.numerical_rank(deglab.degraded_skip(16, k, 5)) == k


def test_designed_skip_tau_zero_is_orthogonal():
    d = deglab.designed_skip(16, 0.0, 2)
    s = d["sigma"]
    assert np.max(np.abs(s.T @ s - np.eye(16))) < 1e-10
    assert d["similarity_residual"] < 1e-8


def test_hessian_checks():
    plain = deglab.overlap_check("plain")
    assert plain["passed"] and plain["max_column_mismatch"] == 0.0
    residual = deglab.overlap_check("residual")
    assert residual["passed"] and residual["min_abs_eigenvalue"] > 1e-6
    elim = deglab.elimination_check("plain")
    assert elim["passed"] and elim["max_column_mismatch"] == 0.0


def test_linear_saddles_have_zero_rhs():
    for arch, point in (("plain", [0.0, 0.0]), ("residual", [-1.0, -1.0]), ("hyper_residual", [-1.0, -2.0])):
        assert np.all(deglab.mode_strength_rhs(arch, np.array(point)) == 0.0)


def test_bad_config_raises():
    with pytest.raises(deglab.DeglabError, match="config"):
        deglab.config_digest({"schema_version": 1, "runs": 0})
    with pytest.raises(deglab.DeglabError, match="unknown key"):
        deglab.config_digest({"schema_version": 1, "epochz": 3})


def test_config_schema_accepts_normalized_config():
    schema = json.loads((SCHEMAS / "experiment_config.schema.json").read_text())
    jsonschema.validate(deglab.normalize_config(tiny_config()), schema)


def test_campaign_resume_and_plot_manifest(tmp_path):
    cfg = tiny_config()
    full = tmp_path / "full"
    part = tmp_path / "part"
    deglab.run_campaign(cfg, str(full))
    deglab.run_campaign(cfg, str(part), stop_after=1)
    assert not json.loads((part / "campaign.json").read_text())["complete"]
    result = deglab.run_campaign(cfg, str(part))
    assert result["summary"][-1]["runs"] == 2
    for name in ("summary.csv", "run_000/history.csv", "run_001/spectrum.csv", "run_001/run.json"):
        assert (full / name).read_bytes() == (part / name).read_bytes()

    schema = json.loads((SCHEMAS / "plot_manifest.schema.json").read_text())
    for kind in ("accuracy", "tails", "metrics", "gradients", "portrait"):
        out = tmp_path / f"plot_{kind}"
        deglab.emit_plot_data([("residual", str(full))], kind, str(out))
        manifest = json.loads((out / "manifest.json").read_text())
        jsonschema.validate(manifest, schema)
        for entry in manifest["files"]:
            with open(out / entry["path"], newline="") as f:
                header = next(csv.reader(f))
            assert header == [c["name"] for c in entry["columns"]]
    tails = (tmp_path / "plot_tails" / "tails.csv").read_text().splitlines()[0]
    assert tails == "epoch,arch,mean_w,stderr_w"


def test_plot_data_without_results_writes_nothing(tmp_path):
    out = tmp_path / "empty"
    with pytest.raises(deglab.DeglabError):
        deglab.emit_plot_data([], "accuracy", str(out))
    assert not out.exists() or not any(out.iterdir())


def test_data_dir_env_is_used(tmp_path, monkeypatch):
    monkeypatch.setenv("DEGLAB_DATA_DIR", str(tmp_path))
    cfg = tiny_config(dataset={"kind": "cifar10"})
    with pytest.raises(deglab.DeglabError, match="io|cifar"):
        deglab.run_campaign(cfg, str(tmp_path / "out"))
