import json
import subprocess
import sys

import pytest

from bltails.cli import run
from bltails.config import RunManifest, config_hash, load_json
from bltails.errors import ConfigError

DEMO = {
    "coefficient": "smooth",
    "normals": [[0.5, 0.8660254037844386]],
    "deltas": [0.1, 0.03, 0.01],
    "n_theta": 8,
    "T": 30,
    "cell_resolution": 8,
}


@pytest.fixture
def cache_dir(tmp_path, monkeypatch):
    d = tmp_path / "cache"
    monkeypatch.setenv("BLTAILS_CACHE_DIR", str(d))
    return d


def write_config(tmp_path, **over):
    cfg = dict(DEMO, output_dir=str(tmp_path / "out"), **over)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return path


def manifest(tmp_path):
    return json.loads((tmp_path / "out" / "manifest.json").read_text())


def test_help_exits_zero():
    proc = subprocess.run([sys.executable, "-m", "bltails.cli", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "usage: bltails" in proc.stdout


def test_malformed_config_exit_two(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"n_theta": 12}))
    assert run(["sweep-dirichlet", "--config", str(path)]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "ConfigError" and err["field"] == "n_theta"


def test_unparseable_json(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert run(["holder-fit", "--config", str(path)]) == 2
    assert json.loads(capsys.readouterr().err)["field"] == "$"


def test_unknown_subcommand(capsys):
    assert run(["frobnicate"]) == 2


def test_precondition_names_hypothesis(tmp_path, capsys):
    code = run(["layer", "--coef", "identity", "--n", "ed", "--kind", "neumann", "--n-theta", "8", "--T", "10", "--out", str(tmp_path)])
    assert code == 1
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "PreconditionError" and "Diophantine" in err["hypothesis"]


def test_kappa_json(capsys):
    assert run(["kappa", "--n", "1", "1.4142135623730951", "--cutoff", "100"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["kappa_hat"] == pytest.approx(0.4782926234762006, rel=1e-12)


def test_layer_outputs(tmp_path, capsys):
    assert run(["layer", "--coef", "smooth", "--n", "golden", "--n-theta", "8", "--T", "20", "--out", str(tmp_path)]) == 0
    assert {"decay_profile.csv", "summary.json", "manifest.json"} <= {p.name for p in tmp_path.iterdir()}
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["decay_fit"]["slope_t"] < 0


def test_layer_corrector_data(tmp_path):
    assert run(["layer", "--coef", "smooth", "--data", "corrector:1,0", "--n-theta", "8", "--T", "20", "--out", str(tmp_path)]) == 0


@pytest.mark.filterwarnings("ignore:.*rational-detected")
def test_surface_data_csv(tmp_path, cache_dir, capsys):
    assert run(["kappa-stats", "--count", "12", "--export", str(tmp_path / "s.csv")]) == 0
    code = run(["neumann-data", "--coef", "smooth", "--surface", str(tmp_path / "s.csv"), "--n-theta", "8", "--T", "30", "--cell-resolution", "8", "--out", str(tmp_path / "nd")])
    assert code == 0
    rows = (tmp_path / "nd" / "neumann_data.csv").read_text().splitlines()
    assert rows[0].startswith("x0,x1,n0,n1,kappa_hat,v0") and rows[0].endswith("trusted")
    assert len(rows) > 5


def test_sweep_end_to_end_and_cache(tmp_path, cache_dir, capsys):
    cfg = write_config(tmp_path)
    assert run(["sweep-dirichlet", "--config", str(cfg)]) == 0
    out = tmp_path / "out"
    assert {"records.csv", "summary.json", "plot_data.csv", "manifest.json"} <= {p.name for p in out.iterdir()}
    first = manifest(tmp_path)
    records = (out / "records.csv").read_bytes()
    assert first["cache"]["hits"] == 0 and first["coefficient_hash"]

    assert run(["sweep-dirichlet", "--config", str(cfg)]) == 0
    second = manifest(tmp_path)
    assert second["cache"]["misses"] == 0 and second["cache"]["hits"] > 0
    assert sum(first["wall_clock"].values()) >= 10 * sum(second["wall_clock"].values())
    assert (out / "records.csv").read_bytes() == records

    cfg = write_config(tmp_path, tol=1e-9)
    assert run(["sweep-dirichlet", "--config", str(cfg)]) == 0
    assert manifest(tmp_path)["cache"]["hits"] == 0

    assert run(["sweep-dirichlet", "--config", str(cfg), "--evict"]) == 0
    assert manifest(tmp_path)["cache"]["hits"] == 0


def test_no_cache_flag(tmp_path, cache_dir):
    cfg = write_config(tmp_path)
    assert run(["sweep-neumann", "--config", str(cfg), "--no-cache"]) == 0
    assert not cache_dir.exists() or not any(cache_dir.iterdir())


def test_kappa_fit_from_records(tmp_path, cache_dir, capsys):
    cfg = write_config(tmp_path)
    run(["sweep-dirichlet", "--config", str(cfg)])
    capsys.readouterr()
    assert run(["kappa-fit", "--records", str(tmp_path / "out" / "records.csv")]) == 0
    assert "flagged" in json.loads(capsys.readouterr().out)


def test_selftest(capsys):
    assert run(["selftest"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines and all(line.startswith("PASS") for line in lines)


class TestConfigHelpers:
    def test_hash_order_independent(self):
        assert config_hash({"a": 1, "b": [1, 2]}) == config_hash({"b": [1, 2], "a": 1})

    def test_load_json_error(self, tmp_path):
        p = tmp_path / "x.json"
        p.write_text("[1,")
        with pytest.raises(ConfigError):
            load_json(p)

    def test_manifest_fields(self, tmp_path):
        m = RunManifest("demo", {"x": 1}, "abc")
        with m.stage("work"):
            pass
        m.write(tmp_path)
        data = json.loads((tmp_path / "manifest.json").read_text())
        for key in ("version", "config_hash", "coefficient_hash", "tolerances", "wall_clock", "cache"):
            assert key in data
