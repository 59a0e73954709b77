import json
import os
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from lamfem.cli import EXIT_CONFIG, EXIT_DIVERGED, EXIT_OK, main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


@pytest.fixture
def planar(tmp_path):
    raw = json.loads((CONFIGS / "planar_exact.json").read_text())
    raw["output"] = str(tmp_path / "from_config")
    path = tmp_path / "planar.json"
    path.write_text(json.dumps(raw))
    return path


def _write(tmp_path, raw):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(raw))
    return path


class TestExitCodes:
    def test_simulate_succeeds(self, planar, tmp_path, capsys):
        out = tmp_path / "run"
        assert main(["simulate", str(planar), "--mesh", "8", "--out", str(out)]) == EXIT_OK
        assert {p.name for p in out.iterdir()} == {"summary.json", "load_curve.csv", "fields.vtk"}
        assert "L2 displacement error" in capsys.readouterr().out

    def test_invalid_config(self, tmp_path, capsys):
        raw = json.loads((CONFIGS / "planar_exact.json").read_text())
        raw["method"] = "XFEM"
        assert main(["simulate", str(_write(tmp_path, raw))]) == EXIT_CONFIG
        assert "method" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert main(["simulate", str(tmp_path / "none.json")]) == EXIT_CONFIG

    def test_divergence(self, tmp_path, capsys):
        raw = json.loads((CONFIGS / "inclusion_neo_hookean.json").read_text())
        raw["tolerances"] = {"max_iter": 1, "max_cuts": 0}
        raw["mesh"] = {"nx": 4, "ny": 4}
        raw.pop("reference", None)
        raw.pop("study", None)
        out = tmp_path / "div"
        assert main(["simulate", str(_write(tmp_path, raw)), "--out", str(out)]) == EXIT_DIVERGED
        assert "diverged" in capsys.readouterr().err
        assert json.loads((out / "summary.json").read_text())["converged"] is False

    def test_bad_mesh_argument(self, planar):
        with pytest.raises(SystemExit) as info:
            main(["simulate", str(planar), "--mesh", "8x"])
        assert info.value.code == 2


class TestEnvironment:
    def test_output_directory_precedence(self, planar, tmp_path, monkeypatch):
        monkeypatch.setenv("LAMFEM_OUT", str(tmp_path / "env"))
        assert main(["classify", str(planar), "--mesh", "4"]) == EXIT_OK
        assert (tmp_path / "env" / "classification.csv").exists()
        assert main(["classify", str(planar), "--mesh", "4", "--out", str(tmp_path / "flag")]) == EXIT_OK
        assert (tmp_path / "flag" / "classification.vtk").exists()
        monkeypatch.delenv("LAMFEM_OUT")
        assert main(["classify", str(planar), "--mesh", "4"]) == EXIT_OK
        assert (tmp_path / "from_config" / "classification.csv").exists()

    def test_thread_cap(self, planar, tmp_path, monkeypatch):
        monkeypatch.setenv("LAMFEM_THREADS", "1")
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            monkeypatch.delenv(var, raising=False)
        assert main(["classify", str(planar), "--mesh", "4", "--out", str(tmp_path)]) == EXIT_OK
        assert os.environ["OMP_NUM_THREADS"] == "1"


class TestCommands:
    def test_study(self, planar, tmp_path, capsys):
        out = tmp_path / "study"
        code = main(["study", str(planar), "--resolutions", "4", "8", "--methods", "LET", "--out", str(out)])
        assert code == EXIT_OK
        lines = (out / "study.csv").read_text().splitlines()
        assert lines[0].startswith("method,nx,h,ndof,error_L2_displacement,error_energy")
        assert len(lines) == 3

    def test_laminate_path(self, tmp_path):
        out = tmp_path / "lam"
        assert main(["laminate-path", str(CONFIGS / "laminate_path.json"), "--out", str(out)]) == EXIT_OK
        assert len((out / "laminate_path.csv").read_text().splitlines()) == 41

    def test_laminate_path_needs_laminate_block(self, planar):
        assert main(["laminate-path", str(planar)]) == EXIT_CONFIG

    @pytest.mark.skipif(shutil.which("lamfem") is None, reason="console script not installed")
    def test_console_script(self, planar, tmp_path):
        r = subprocess.run(["lamfem", "classify", str(planar), "--mesh", "4", "--out", str(tmp_path)],
                           capture_output=True, text=True)
        assert r.returncode == 0, r.stderr
        r = subprocess.run([sys.executable, "-m", "lamfem.cli", "--help"], capture_output=True, text=True)
        assert r.returncode == 0 and "simulate" in r.stdout
