"""Command-line interface: subcommands, exit codes, fit reports."""

import json
from pathlib import Path

import pytest

from bpesim.cli import main

FIXTURES = Path(__file__).parent / "fixtures"


class TestUsage:
    def test_unknown_subcommand_exits_1(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 1

    def test_unknown_flag_exits_1(self):
        with pytest.raises(SystemExit) as exc:
            main(["run", "--warp-speed"])
        assert exc.value.code == 1

    def test_missing_required_flag_exits_1(self):
        with pytest.raises(SystemExit) as exc:
            main(["fit-powerlaw", "--L", "8"])
        assert exc.value.code == 1


class TestValidationErrors:
    def test_bad_config_value_exits_2(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("backend = quantum\nout = x\n")
        assert main(["run", "-c", str(cfg)]) == 2

    def test_capacity_exits_3(self, tmp_path):
        assert main(["run", "--backend", "haar", "--L", "64", "--p", "0.1",
                     "--samples", "1", "--out", str(tmp_path / "cap")]) == 3


class TestRunCommands:
    def test_run_writes_outputs(self, tmp_path):
        out = tmp_path / "run"
        rc = main(["run", "--backend", "clifford", "--L", "8", "--p", "0.2",
                   "--samples", "3", "--seed", "4", "--t-max", "4",
                   "--workers", "1", "--out", str(out)])
        assert rc == 0
        assert (out / "profiles.csv").exists()
        assert (out / "moments.csv").exists()
        assert (out / "manifest.json").exists()

    def test_surface_preset_uses_open_boundary(self, tmp_path):
        out = tmp_path / "surf"
        rc = main(["surface", "--L", "8", "--p", "0.2", "--samples", "2",
                   "--t-max", "4", "--workers", "1", "--out", str(out)])
        assert rc == 0
        assert (out / "surface.csv").exists()


class TestFitCommands:
    def test_fit_powerlaw_on_shipped_fixture(self, tmp_path):
        report = tmp_path / "fit.json"
        rc = main(["fit-powerlaw", "--profiles", str(FIXTURES / "profiles_eta071.csv"),
                   "--L", "32", "--p", "0.16", "--rmin", "2", "--rmax", "16",
                   "--out", str(report)])
        assert rc == 0
        doc = json.loads(report.read_text())
        assert abs(doc["params"]["exponent"] - 0.71) < 1e-10

    def test_fit_dynamic_roundtrip(self, tmp_path):
        # synthesize a moments.csv with exact growth laws, then fit through
        # the CLI
        lines = ["backend,L,p,t,k,value,stderr,n_samples"]
        for t in range(2, 40):
            for k in range(4):
                v = t ** (0.38 + k / 1.01)
                lines.append(f"clifford,64,0.16,{t},{k},{v:.17g},0,100")
        path = tmp_path / "moments.csv"
        path.write_text("\n".join(lines) + "\n")
        report = tmp_path / "dyn.json"
        rc = main(["fit-dynamic", "--moments", str(path), "--L", "64",
                   "--p", "0.16", "--tmin", "4", "--tmax", "16",
                   "--out", str(report)])
        assert rc == 0
        doc = json.loads(report.read_text())
        assert abs(doc["params"]["theta"] - 0.38) < 1e-6
        assert abs(doc["params"]["z"] - 1.01) < 1e-6

    def test_fit_collapse_roundtrip(self, tmp_path):
        import numpy as np

        lines = ["backend,L,p,t,k,value,stderr,n_samples"]
        rng = np.random.default_rng(0)
        for L in (16, 32, 64):
            ps = np.linspace(0.08, 0.24, 9)
            x = (ps - 0.16) * L ** (1 / 1.3)
            vals = L**-0.7 * (0.05 + 0.5 * (1 - np.tanh(x)))
            for p, v in zip(ps, vals):
                lines.append(f"clifford,{L},{p:.9g},{2*L},0,{v:.17g},{v*0.01:.17g},500")
        path = tmp_path / "moments.csv"
        path.write_text("\n".join(lines) + "\n")
        report = tmp_path / "col.json"
        rc = main(["fit-collapse", "--moments", str(path), "--out", str(report)])
        assert rc == 0
        doc = json.loads(report.read_text())
        assert abs(doc["params"]["p_c"] - 0.16) < 0.01


class TestValidateCommand:
    def test_quick_battery_passes(self):
        assert main(["validate", "--seed", "6"]) == 0
