"""
Tests for the command-line entry points.
"""

import json
import subprocess
import sys

import numpy as np
import pytest

from boussinesq_analyticity.cli import main, read_spectrum_csv

HYDRO_CFG = """\
grid_n = 32
preset = hydrostatic
t_end = 0.2
output_interval = 0.1
output_dir = {out}
"""


@pytest.fixture
def hydro_config(tmp_path):
    path = tmp_path / "hydro.cfg"
    path.write_text(HYDRO_CFG.format(out=tmp_path / "out"))
    return path


def error_line(capsys):
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1
    return err[0]


class TestRun:
    def test_success_writes_outputs(self, hydro_config, tmp_path, capsys):
        assert main(["run", "--config", str(hydro_config)]) == 0
        out = capsys.readouterr().out
        assert "termination=completed" in out and "verdict=holds" in out
        assert (tmp_path / "out" / "report.json").is_file()
        assert (tmp_path / "out" / "timeseries.csv").is_file()

    def test_missing_config(self, tmp_path, capsys):
        code = main(["run", "--config", str(tmp_path / "missing.cfg")])
        assert code != 0
        assert error_line(capsys).startswith("error: config_not_found:")

    def test_invalid_config(self, tmp_path, capsys):
        bad = tmp_path / "bad.cfg"
        bad.write_text("grid_n = 32\nbogus = 1\n")
        assert main(["run", "--config", str(bad)]) != 0
        line = error_line(capsys)
        assert line.startswith("error: config_invalid:") and "bogus" in line

    def test_unresolved_initial_data(self, tmp_path, capsys):
        cfg = tmp_path / "sr.cfg"
        cfg.write_text(f"grid_n = 32\npreset = synthetic_radius\npreset_params.tau0 = 0.2\noutput_dir = {tmp_path}\n")
        assert main(["run", "--config", str(cfg)]) != 0
        assert error_line(capsys).startswith("error: unresolved_data:")


class TestVerifyLemma:
    def test_prints_constant_and_flag(self, capsys):
        assert main(["verify-lemma", "--order-max", "12", "--dim", "2"]) == 0
        first = capsys.readouterr().out.splitlines()[0]
        assert first.startswith("C=0.70106945282021")
        assert "saturated=" in first

    def test_saturated_at_13(self, capsys):
        main(["verify-lemma", "--order-max", "13", "--dim", "1"])
        assert "saturated=True" in capsys.readouterr().out

    def test_bad_dimension(self, capsys):
        assert main(["verify-lemma", "--order-max", "4", "--dim", "5"]) != 0
        assert error_line(capsys).startswith("error: input_invalid:")


class TestEstimateRadius:
    def test_exponential_spectrum(self, tmp_path, capsys):
        path = tmp_path / "spectrum.csv"
        j = np.arange(1, 41)
        path.write_text("shell,amplitude\n" + "".join(f"{a},{float(np.exp(-0.5 * a))!r}\n" for a in j))
        assert main(["estimate-radius", "--input", str(path)]) == 0
        result = json.loads(capsys.readouterr().out)
        assert result["tau"] == pytest.approx(0.5, rel=1e-12)
        assert result["method"] == "shell_fit"

    def test_infinite_radius_serialized(self, tmp_path, capsys):
        path = tmp_path / "spectrum.csv"
        path.write_text("1,1.0\n2,0.0\n3,0.0\n")
        main(["estimate-radius", "--input", str(path)])
        assert json.loads(capsys.readouterr().out)["tau"] == "inf"

    def test_reads_emitted_spectrum(self, hydro_config, tmp_path, capsys):
        main(["run", "--config", str(hydro_config)])
        shells, amps = read_spectrum_csv(tmp_path / "out" / "plotdata" / "spectrum_0000.csv")
        assert shells[0] == 1 and amps.size == shells.size

    def test_missing_and_malformed(self, tmp_path, capsys):
        assert main(["estimate-radius", "--input", str(tmp_path / "nope.csv")]) != 0
        assert error_line(capsys).startswith("error: input_not_found:")
        bad = tmp_path / "bad.csv"
        bad.write_text("1,1.0\n2,x\n")
        assert main(["estimate-radius", "--input", str(bad)]) != 0
        assert error_line(capsys).startswith("error: input_invalid:")
        growing = tmp_path / "grow.csv"
        growing.write_text("".join(f"{a},{np.exp(0.1 * a)}\n" for a in range(1, 10)))
        assert main(["estimate-radius", "--input", str(growing)]) != 0
        assert "not decaying" in error_line(capsys)

    def test_only_first_line_may_be_header(self, tmp_path, capsys):
        path = tmp_path / "two_headers.csv"
        path.write_text("shell,amplitude\nshell,amplitude\n1,1.0\n")
        assert main(["estimate-radius", "--input", str(path)]) != 0
        assert error_line(capsys).startswith("error: input_invalid:")


class TestCalibrate:
    def test_reproduces_run_constants(self, hydro_config, tmp_path, capsys):
        main(["run", "--config", str(hydro_config)])
        capsys.readouterr()
        report = tmp_path / "out" / "report.json"
        assert main(["calibrate", "--report", str(report)]) == 0
        out = capsys.readouterr().out
        data = json.loads(report.read_text())
        assert f"C0={data['constants']['C0']!r}" in out
        assert f"C1={data['constants']['C1']!r}" in out

    def test_missing_and_invalid(self, tmp_path, capsys):
        assert main(["calibrate", "--report", str(tmp_path / "r.json")]) != 0
        assert error_line(capsys).startswith("error: report_not_found:")
        bad = tmp_path / "bad.json"
        bad.write_text('{"snapshots": []}')
        assert main(["calibrate", "--report", str(bad)]) != 0
        assert error_line(capsys).startswith("error: report_invalid:")


class TestSelfTest:
    def test_passes(self, capsys):
        assert main(["self-test"]) == 0
        out = capsys.readouterr().out
        assert "FAIL" not in out and out.count("ok") >= 8

    def test_module_entry_point(self):
        proc = subprocess.run(
            [sys.executable, "-m", "boussinesq_analyticity", "self-test", "-q"], capture_output=True, text=True
        )
        assert proc.returncode == 0, proc.stderr

    def test_unknown_subcommand(self):
        with pytest.raises(SystemExit) as info:
            main(["frobnicate"])
        assert info.value.code != 0
