import csv
import json
import subprocess
import sys

import pytest

from gaplesswalk.cli import main


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def phase_run(tmp_path_factory):
    d = tmp_path_factory.mktemp("pd")
    assert main(["phase-diagram", "--resolution", "51", "--k-grid", "512", "--output", str(d / "pd.csv")]) == 0
    return d


def test_phase_diagram_table(phase_run):
    rows = _rows(phase_run / "pd.csv")
    assert len(rows) == 51 * 51
    assert {r["w"] for r in rows} <= {"-3", "-1", "1", "3", "NA"}
    assert all(r["line_id"] for r in rows if r["w"] == "NA")
    man = json.loads((phase_run / "pd.manifest.json").read_text())
    assert man["status"] == "ok"
    assert man["outputs"] == ["pd.csv"]
    assert man["config"]["resolution"] == 51


def test_rerun_and_jobs_are_byte_identical(phase_run, tmp_path):
    out = tmp_path / "pd.csv"
    args = ["phase-diagram", "--resolution", "51", "--k-grid", "512", "--output", str(out), "--jobs", "2"]
    assert main(args) == 0
    assert out.read_bytes() == (phase_run / "pd.csv").read_bytes()


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# scan settings\nline = blue1\nresolution = 20\nformat = json\n")
    out = tmp_path / "scan"
    assert main(["critical-scan", "--config", str(cfg), "--resolution", "12", "--output", str(out)]) == 0
    records = json.loads((tmp_path / "scan.json").read_text())
    assert len(records) == 12
    man = json.loads((tmp_path / "scan.manifest.json").read_text())
    assert man["config"]["line"] == "blue1"


@pytest.mark.parametrize(
    "args",
    [
        ["phase-diagram", "--resolution", "5"],
        ["critical-scan", "--line", "green"],
        ["critical-scan", "--delta", "0.5"],
        ["velocity", "--angles", "4,0"],
        ["phase-diagram", "--jobs", "0"],
    ],
)
def test_config_errors(args, tmp_path):
    assert main(args + ["--output", str(tmp_path / "x")]) == 2


def test_missing_config_file(tmp_path):
    assert main(["velocity", "--config", str(tmp_path / "nope.cfg"), "--output", str(tmp_path / "v")]) in (2, 3)


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    assert main(["velocity", "--output", str(blocker / "v.csv")]) == 3


def test_fit_failure_exit_code(tmp_path):
    out = tmp_path / "w"
    # anchored at the linear point theta1 = 0 the curvature dips at k0 = 0
    linear = ["wannier", "--line", "red2", "--theta1-range", "0,1", "--offsets", "0.1", "--output", str(out)]
    assert main(linear) == 4
    man = json.loads((tmp_path / "w.manifest.json").read_text())
    assert man["status"] == "fit_failure"
    assert main(linear + ["--xi-source", "leading_order"]) == 0
    assert main(["wannier", "--line", "red2", "--offsets", "0.1", "--output", str(out)]) == 0


def test_velocity_and_trace_commands(tmp_path):
    assert main(["velocity", "--angles", "0,0", "--output", str(tmp_path / "v")]) == 0
    assert (tmp_path / "v_summary.csv").exists()
    assert main(["winding-trace", "--angles", "pi/2,pi/2", "--output", str(tmp_path / "t")]) == 0
    man = json.loads((tmp_path / "t.manifest.json").read_text())
    assert man["results"]["loops"] == 1


def test_acceptance_list(capsys):
    assert main(["acceptance", "--list"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 10


def test_acceptance_only(capsys):
    assert main(["acceptance", "--only", "properties"]) == 0
    assert "[PASS]" in capsys.readouterr().out
    assert main(["acceptance", "--only", "nonexistent"]) == 2


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "gaplesswalk", "--version"], capture_output=True, text=True)
    assert r.returncode == 0
    assert r.stdout.startswith("gaplesswalk")
