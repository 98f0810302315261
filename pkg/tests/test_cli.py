import csv
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from rsfield import ModeSet
from rsfield.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_NUMERIC, EXIT_OK, main
from rsfield.thermo import ThermoSample, steady_entropy_vs_beta

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"
S_BETA1_OMEGA1 = 1.0406518522564083  # mpmath


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def write(tmp_path, text, name="c.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def simulate(tmp_path, config, *extra):
    out = tmp_path / (Path(config).stem + ".csv")
    code = main(["simulate", "--config", str(config), "--output", str(out), *extra])
    return code, out


class TestSimulate:
    def test_free_entropy_constant(self, tmp_path):
        code, out = simulate(tmp_path, CONFIGS / "free.yaml")
        header, data = read_csv(out)
        assert code == EXIT_OK
        assert header == list(ThermoSample.FIELDS)
        S = data[:, header.index("S")]
        assert S[0] > 0 and np.max(np.abs(S - S[0])) < 1e-9

    def test_coherent_entropy_zero(self, tmp_path):
        code, out = simulate(tmp_path, CONFIGS / "coherent.yaml")
        header, data = read_csv(out)
        assert code == EXIT_OK
        assert np.all(data[:, header.index("S")] == 0.0)
        assert np.max(data[:, header.index("alpha_norm2")]) > 0

    def test_thermal_entropy_converges(self, tmp_path):
        code, out = simulate(tmp_path, CONFIGS / "thermal.yaml")
        header, data = read_csv(out)
        assert code == EXIT_OK
        S = data[:, header.index("S")]
        assert S[0] == 0.0
        assert S[-1] == pytest.approx(steady_entropy_vs_beta(1.0, ModeSet([1.0])), abs=1e-6)
        assert S[-1] == pytest.approx(S_BETA1_OMEGA1, abs=1e-6)
        assert np.isinf(data[0, header.index("entropy_rate")])

    def test_dump_state_columns(self, tmp_path):
        code, out = simulate(tmp_path, CONFIGS / "custom.yaml", "--dump-state")
        header, data = read_csv(out)
        assert code == EXIT_OK
        assert header[len(ThermoSample.FIELDS):][:4] == ["r_0_0_re", "r_0_0_im", "r_0_1_re", "r_0_1_im"]
        assert header[-2:] == ["alpha_1_re", "alpha_1_im"]
        assert np.all(np.isnan(data[:, header.index("heat_rate")]))
        n = data[:, header.index("N")]
        trace = data[:, header.index("r_0_0_re")] + data[:, header.index("r_1_1_re")]
        assert np.allclose(n, trace, rtol=0, atol=1e-15)

    def test_byte_identical_reruns(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        a.mkdir(), b.mkdir()
        for d in (a, b):
            assert simulate(d, CONFIGS / "custom.yaml", "--dump-state")[0] == EXIT_OK
        assert (a / "custom.csv").read_bytes() == (b / "custom.csv").read_bytes()

    @pytest.mark.parametrize("name", ["free", "coherent", "thermal", "custom"])
    def test_shipped_configs_fast(self, tmp_path, name):
        t0 = time.perf_counter()
        code, _ = simulate(tmp_path, CONFIGS / f"{name}.yaml")
        assert code == EXIT_OK and time.perf_counter() - t0 < 10.0

    def test_config_error_exit(self, tmp_path, capsys):
        cfg = write(tmp_path, "scenario: free\nmodes:\n  omega: [1.0]\nsimulation:\n  dt: -1\n  t_final: 1\n")
        code, out = simulate(tmp_path, cfg)
        assert code == EXIT_CONFIG and not out.exists()
        assert ":5: simulation.dt:" in capsys.readouterr().err

    @pytest.mark.filterwarnings("ignore::rsfield.integrator.StabilityWarning")
    def test_numerical_error_exit(self, tmp_path, capsys):
        cfg = write(tmp_path, """\
scenario: free
modes:
  omega: [1.0, 10.0]
initial:
  r: [[0.5, 0.45], [0.45, 0.5]]
simulation: {dt: 1.0, t_final: 5.0}
""")
        code, _ = simulate(tmp_path, cfg)
        assert code == EXIT_NUMERIC
        assert "smaller dt" in capsys.readouterr().err


class TestSweep:
    def test_table(self, tmp_path):
        out = tmp_path / "s.csv"
        code = main(["sweep-entropy", "--beta-min", "0.1", "--beta-max", "5", "--steps", "50",
                     "--omega", "2,0.5,4,1", "--output", str(out)])
        header, data = read_csv(out)
        assert code == EXIT_OK
        assert header == ["beta", "S(omega=0.5)", "S(omega=1)", "S(omega=2)", "S(omega=4)"]
        assert data.shape == (50, 5)
        assert np.all(np.diff(data[:, 1:], axis=0) < 0)
        assert np.all(np.diff(data[:, 1:], axis=1) < 0)

    def test_spot_value(self, tmp_path):
        out = tmp_path / "s.csv"
        main(["sweep-entropy", "--beta-min", "0.5", "--beta-max", "1.5", "--steps", "3", "--omega", "1",
              "--output", str(out)])
        _, data = read_csv(out)
        assert data[1, 0] == 1.0 and data[1, 1] == pytest.approx(S_BETA1_OMEGA1, abs=1e-12)

    @pytest.mark.parametrize("args", [
        ["--beta-min", "0", "--beta-max", "5", "--steps", "10", "--omega", "1"],
        ["--beta-min", "2", "--beta-max", "1", "--steps", "10", "--omega", "1"],
        ["--beta-min", "1", "--beta-max", "2", "--steps", "1", "--omega", "1"],
        ["--beta-min", "1", "--beta-max", "2", "--steps", "5", "--omega", "1,-2"],
    ])
    def test_domain_errors(self, tmp_path, args):
        assert main(["sweep-entropy", *args, "--output", str(tmp_path / "x.csv")]) == EXIT_CONFIG


class TestSteady:
    def test_report(self, capsys):
        assert main(["steady", "--config", str(CONFIGS / "thermal.yaml")]) == EXIT_OK
        out = capsys.readouterr().out
        assert "F_eq        -0.458675145387" in out
        assert "bose_einstein  [0.581976706869]" in out

    def test_verify(self, capsys):
        assert main(["steady", "--config", str(CONFIGS / "thermal.yaml"), "--verify"]) == EXIT_OK
        dev = float(capsys.readouterr().out.strip().split()[-1])
        assert dev < 1e-6

    def test_undriven_alpha_zero(self, tmp_path, capsys):
        text = (CONFIGS / "thermal.yaml").read_text().replace("zeta: [[0.3, 0.0]]", "zeta: [0.0]")
        assert "zeta: [0.0]" in text
        assert main(["steady", "--config", str(write(tmp_path, text))]) == EXIT_OK
        out = capsys.readouterr().out.splitlines()
        assert out[out.index("alpha_steady") + 1].strip() == "[+0+0j]"

    def test_non_thermal(self):
        assert main(["steady", "--config", str(CONFIGS / "coherent.yaml")]) == EXIT_CONFIG


class TestOracleCompare:
    @pytest.mark.parametrize("name", ["oracle_drive", "oracle_thermal", "oracle_two_mode"])
    def test_pass(self, name, capsys):
        assert main(["oracle-compare", "--config", str(CONFIGS / f"{name}.yaml")]) == EXIT_OK
        assert "result                  PASS" in capsys.readouterr().out

    def test_fail(self, tmp_path):
        text = (CONFIGS / "oracle_drive.yaml").read_text()
        text = text.replace("tolerance: 1.0e-6", "tolerance: 1.0e-30")
        assert "1.0e-30" in text
        assert main(["oracle-compare", "--config", str(write(tmp_path, text))]) == EXIT_FAIL

    def test_needs_fock_section(self):
        assert main(["oracle-compare", "--config", str(CONFIGS / "thermal.yaml")]) == EXIT_CONFIG

    def test_overflow_guard(self, tmp_path, capsys):
        text = (CONFIGS / "oracle_drive.yaml").read_text().replace("zeta: [0.1]", "zeta: [2.0]")
        assert "zeta: [2.0]" in text
        assert main(["oracle-compare", "--config", str(write(tmp_path, text))]) == EXIT_CONFIG
        assert "cutoff" in capsys.readouterr().err


def test_usage_errors():
    assert main([]) == EXIT_CONFIG
    assert main(["simulate", "--config", "x.yaml"]) == EXIT_CONFIG
    assert main(["--help"]) == EXIT_OK


def test_module_entry_point(tmp_path):
    out = tmp_path / "free.csv"
    proc = subprocess.run([sys.executable, "-m", "rsfield", "simulate", "--config", str(CONFIGS / "free.yaml"),
                           "--output", str(out)], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout == ""
    assert out.read_text().startswith("t,S,U,")
