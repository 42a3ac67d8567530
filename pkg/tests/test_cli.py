import csv
import json
import shutil
import subprocess

import numpy as np
import pytest

from star_sl.cli import main


def write_config(path, **sections):
    path.write_text(json.dumps(sections), encoding="utf-8")
    return str(path)


def zero_star_config(tmp_path, n_max=5):
    return write_config(tmp_path / "zero.json", graph={"m": 4, "p": 2},
                        potentials={"edges": [0, 0, 0, 0]}, truncation={"n_max": n_max})


def read_branches(path):
    rows = list(csv.DictReader(path.open(encoding="utf-8")))
    out = {}
    for row in rows:
        out.setdefault(int(row["k"]), []).append(float(row["rho"]))
    return out


@pytest.fixture(scope="module")
def fixture_spectra(tmp_path_factory, generic_fixture):
    """Spectra files of the session fixture and the matching edge list."""
    fx = generic_fixture
    root = tmp_path_factory.mktemp("spectra")
    (root / "L.json").write_text(fx.specL.to_json(), encoding="utf-8")
    (root / "L0.json").write_text(fx.specL0.to_json(), encoding="utf-8")
    edges = [q.to_dict() for q in fx.potentials]
    return {"L": str(root / "L.json"), "L0": str(root / "L0.json")}, edges


class TestForward:
    def test_zero_star_branches(self, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(["forward", "--config", zero_star_config(tmp_path), "--out", str(out)]) == 0
        branches = read_branches(out / "spectrum_L.csv")
        n = np.arange(1, 6)
        for k, shift in ((1, 0.75), (2, 0.25), (3, 0.5), (4, 0.0)):
            np.testing.assert_allclose(branches[k], n - shift, atol=1e-8)
        assert (out / "spectrum_L0.json").exists()
        assert "wrote spectra" in capsys.readouterr().out

    def test_identical_runs_identical_files(self, tmp_path):
        cfg = zero_star_config(tmp_path)
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["forward", "--config", cfg, "--out", str(a)]) == 0
        assert main(["forward", "--config", cfg, "--out", str(b)]) == 0
        for name in ("spectrum_L.csv", "spectrum_L0.json", "forward_config.json"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_threads_env_same_output(self, tmp_path, monkeypatch):
        cfg = zero_star_config(tmp_path)
        assert main(["forward", "--config", cfg, "--out", str(tmp_path / "serial")]) == 0
        monkeypatch.setenv("STAR_SL_THREADS", "4")
        assert main(["forward", "--config", cfg, "--out", str(tmp_path / "threaded")]) == 0
        assert ((tmp_path / "serial" / "spectrum_L.json").read_bytes()
                == (tmp_path / "threaded" / "spectrum_L.json").read_bytes())


class TestConfigErrors:
    def test_malformed_json(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json", encoding="utf-8")
        assert main(["forward", "--config", str(bad), "--out", str(tmp_path)]) == 2

    def test_p_too_large(self, tmp_path, capsys):
        cfg = write_config(tmp_path / "c.json", graph={"m": 5, "p": 4})
        assert main(["forward", "--config", cfg, "--out", str(tmp_path)]) == 2
        assert "2 <= p <= m-2" in capsys.readouterr().err

    def test_unknown_section(self, tmp_path):
        cfg = write_config(tmp_path / "c.json", graph={"m": 4, "p": 2}, extras={})
        assert main(["forward", "--config", cfg, "--out", str(tmp_path)]) == 2

    def test_wrong_edge_count(self, tmp_path):
        cfg = write_config(tmp_path / "c.json", graph={"m": 4, "p": 2}, potentials={"edges": [0, 0]})
        assert main(["forward", "--config", cfg, "--out", str(tmp_path)]) == 2

    def test_unknown_suite(self):
        assert main(["verify", "nonsense"]) == 2


class TestReconstruct:
    def test_from_spectra_files(self, tmp_path, fixture_spectra, capsys):
        spectra, edges = fixture_spectra
        cfg = write_config(tmp_path / "c.json", potentials={"edges": edges}, spectra=spectra)
        out = tmp_path / "out"
        assert main(["reconstruct", "--config", cfg, "--out", str(out)]) == 0
        report = json.loads((out / "report.json").read_text(encoding="utf-8"))
        assert report["status"] == "ok"
        assert report["errors"]["sigma1"] <= 0.05 and report["errors"]["sigma_p1"] <= 0.05
        header = (out / "potentials.csv").read_text(encoding="utf-8").splitlines()[0]
        assert header == "x,sigma1_true,sigma1_recovered,sigma_p1_true,sigma_p1_recovered"
        assert "status: ok" in capsys.readouterr().out

    def test_unknown_edges_null(self, tmp_path, fixture_spectra):
        spectra, edges = fixture_spectra
        edges = [None, edges[1], None, *edges[3:]]
        cfg = write_config(tmp_path / "c.json", potentials={"edges": edges}, spectra=spectra)
        assert main(["reconstruct", "--config", cfg, "--dry-run", "--out", str(tmp_path)]) == 0
        report = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
        assert report["status"] == "dry-run" and report["assumptions"]["ok"]
        assert report["errors"] == {}

    def test_stage_failure_exit(self, tmp_path, fixture_spectra, capsys):
        spectra, edges = fixture_spectra
        cfg = write_config(tmp_path / "c.json", potentials={"edges": edges}, spectra=spectra,
                           tolerances={"zero_scan_min": 2.0})
        assert main(["reconstruct", "--config", cfg, "--out", str(tmp_path)]) == 5
        assert "split_zeros" in capsys.readouterr().out

    def test_assumption_failure_exit(self, tmp_path):
        fwd = tmp_path / "fwd"
        assert main(["forward", "--config", zero_star_config(tmp_path, 8), "--out", str(fwd)]) == 0
        cfg = write_config(tmp_path / "c.json", graph={"m": 4, "p": 2},
                           potentials={"edges": [None, 0, None, 0]},
                           spectra={"L": str(fwd / "spectrum_L.json"), "L0": str(fwd / "spectrum_L0.json")},
                           truncation={"n_trunc": 8, "n_use": 6})
        assert main(["reconstruct", "--config", cfg, "--out", str(tmp_path)]) == 4

    def test_missing_spectra_file(self, tmp_path):
        cfg = write_config(tmp_path / "c.json", graph={"m": 4, "p": 2},
                           potentials={"edges": [None, 0, None, 0]},
                           spectra={"L": str(tmp_path / "nope.json"), "L0": str(tmp_path / "nope.json")})
        assert main(["reconstruct", "--config", cfg, "--out", str(tmp_path)]) == 2


class TestVerify:
    def test_suites_pass(self, capsys):
        assert main(["verify", "wronskian", "products"]) == 0
        out = capsys.readouterr().out
        assert out.count("PASS") >= 6 and "FAIL" not in out

    @pytest.mark.skipif(shutil.which("star-sl") is None, reason="console script not installed")
    def test_console_script(self):
        proc = subprocess.run(["star-sl", "verify", "wronskian"], capture_output=True, text=True, timeout=300)
        assert proc.returncode == 0
        assert proc.stdout.startswith("PASS")
