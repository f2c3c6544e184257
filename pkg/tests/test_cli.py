import json

import numpy as np
import pytest

from havokts.cli import main
from havokts.config import from_dict
from havokts.errors import ConfigError
from havokts.pipeline import run_pipeline


@pytest.fixture(scope="module")
def lorenz_csv(tmp_path_factory):
    d = tmp_path_factory.mktemp("gen")
    assert main(["generate", "--kind", "lorenz", "--n", "6000", "--out", str(d)]) == 0
    return d / "data.csv"


def test_generate_demo(tmp_path):
    assert main(["generate", "--demo", "--per-family", "2", "--n", "500", "--out", str(tmp_path)]) == 0
    header = (tmp_path / "data.csv").read_text().splitlines()[0].split(",")
    assert len(header) == 1 + 6


def test_fit_forecast_stats_chain(tmp_path, lorenz_csv):
    out = tmp_path / "run"
    assert main(["fit", "--input", str(lorenz_csv), "--tau", "1", "--dim", "40", "--r", "10",
                 "--out", str(out)]) == 0
    model = json.loads((out / "model.json").read_text())
    assert model["r"] == 10 and len(model["A"]) == 9
    assert main(["forecast", "--input", str(lorenz_csv), "--model", str(out / "model.json"),
                 "--horizon", "100", "--hist-instants", "10,50", "--out", str(out)]) == 0
    for name in ("forecast.csv", "forcing_intervals.json", "errors.csv", "error_histograms.csv", "scalogram.csv"):
        assert (out / name).is_file()
    assert len((out / "forecast.csv").read_text().splitlines()) == 101
    assert main(["stats", "--model", str(out / "model.json"), "--out", str(out)]) == 0
    rows = (out / "ks_table.csv").read_text().splitlines()
    assert rows[0].startswith("rank,family") and len(rows) >= 2


@pytest.mark.parametrize("argv,code", [
    (["fit", "--input", "{d}/nope.csv"], 3),
    (["fit", "--input", "{csv}", "--r", "1"], 2),
    (["fit", "--input", "{csv}", "--lambda", "-1"], 2),
    (["fit", "--input", "{csv}", "--tau", "1", "--dim", "20", "--eps", "1e9"], 4),
    (["fit", "--input", "{d}/nan.csv"], 3),
    (["pipeline", "--config", "{d}/typo.toml"], 2),
])
def test_exit_codes(tmp_path, lorenz_csv, argv, code, capsys):
    (tmp_path / "nan.csv").write_text("t,a\n0,1\n1,nan\n2,3\n")
    (tmp_path / "typo.toml").write_text("[model]\nlamda = 0.1\n")
    argv = [a.format(d=tmp_path, csv=lorenz_csv) for a in argv] + ["--out", str(tmp_path / "o")]
    assert main(argv) == code
    err = capsys.readouterr().err
    assert err.startswith("havokts: error:")
    if code == 2 and "typo" in argv[-3]:
        assert "model.lamda" in err


@pytest.fixture(scope="module")
def demo_run(tmp_path_factory):
    cfg = from_dict({"seed": 3, "input": {"source": "demo", "n_samples": 1500},
                     "forecast": {"horizon": 100, "histogram_instants": [10, 50]}})
    out = tmp_path_factory.mktemp("pipe") / "a"
    return cfg, run_pipeline(cfg, out)


def test_pipeline_counts(demo_run):
    cfg, res = demo_run
    out = res.out
    assert res.n_clusters == 3
    assert len(list((out / "fit").glob("*.json"))) == 30
    assert len(list((out / "forecast").glob("*_forcing_intervals.json"))) == 30
    assert len(list((out / "stats").glob("*_ks_table.csv"))) == 30
    lines = (out / "cluster" / "clusters.csv").read_text().splitlines()
    assert len(lines) == 31


def test_manifest_complete(demo_run):
    _, res = demo_run
    man = json.loads((res.out / "manifest.json").read_text())
    listed = {e["path"] for e in man["artifacts"]}
    on_disk = {str(p.relative_to(res.out)) for p in res.out.rglob("*") if p.is_file()}
    assert listed == on_disk and man["status"] == "complete"


def test_pipeline_deterministic_across_threads(demo_run, tmp_path):
    cfg, res = demo_run
    other = run_pipeline(from_dict({**cfg.to_dict(), "threads": 4}), tmp_path / "b")
    for p in res.out.rglob("*"):
        if p.is_file() and p.name != "manifest.json":
            assert p.read_bytes() == (other.out / p.relative_to(res.out)).read_bytes(), p


def test_pipeline_refuses_foreign_directory(tmp_path):
    (tmp_path / "keep.txt").write_text("x")
    with pytest.raises(ConfigError):
        run_pipeline(from_dict({"input": {"source": "demo"}}), tmp_path)
    assert (tmp_path / "keep.txt").exists()


def test_partial_marker_on_failure(tmp_path):
    data = tmp_path / "short.csv"
    rng = np.random.default_rng(0)
    rows = ["t,a,b,c"] + [f"{i},{rng.standard_normal()},{rng.standard_normal()},{rng.standard_normal()}" for i in range(8)]
    data.write_text("\n".join(rows) + "\n")
    cfg = from_dict({"input": {"path": str(data)}})
    with pytest.raises(Exception):
        run_pipeline(cfg, tmp_path / "out")
    assert (tmp_path / "out" / "manifest.json").is_file()
    assert json.loads((tmp_path / "out" / "manifest.json").read_text())["status"] == "partial"
