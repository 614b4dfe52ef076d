import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from nlpml.cli import EXIT_BLOWUP, EXIT_INVALID, EXIT_OK, main

SMALL_RUN = """
example = ex1
h = 2^-4
m = 20
tau = 1/1000
T = 0.5
snapshot_times = 0.25, 0.5
reference = nonlocal
"""


def write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return p


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_run_writes_snapshots_and_manifest(tmp_path):
    out = tmp_path / "out"
    assert main(["run", "--config", str(write(tmp_path, SMALL_RUN)), "--output-dir", str(out)]) == EXIT_OK
    rows = read_csv(out / "snapshot_t0.5.csv")
    assert rows[0] == ["x", "re_q", "im_q", "ref"]
    assert len(rows) == 1 + 79
    man = json.loads((out / "manifest.json").read_text())
    assert man["config"]["m"] == 20 and man["config"]["m_reduced"]
    assert man["health"]["ok"] and man["derived"]["N"] == 79
    assert man["snapshots"] == [0.25, 0.5]


def test_run_is_deterministic_and_reproducible_from_manifest(tmp_path):
    cfg = write(tmp_path, SMALL_RUN)
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    assert main(["run", "--config", str(cfg), "--output-dir", str(a)]) == EXIT_OK
    assert main(["run", "--config", str(cfg), "--output-dir", str(b)]) == EXIT_OK
    assert main(["run", "--config", str(a / "manifest.json"), "--output-dir", str(c)]) == EXIT_OK
    for name in ("snapshot_t0.25.csv", "snapshot_t0.5.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes() == (c / name).read_bytes()


def test_zero_data_run_gives_zero_snapshots(tmp_path):
    text = "example = custom\nh = 2^-4\nm = 20\nomega = -5\ntau = 1/1000\nT = 0.2\nsnapshot_times = 0.2\n"
    out = tmp_path / "out"
    assert main(["run", "--config", str(write(tmp_path, text)), "--output-dir", str(out)]) == EXIT_OK
    data = np.loadtxt(out / "snapshot_t0.2.csv", delimiter=",", skiprows=1)
    assert np.all(data[:, 1:] == 0)


def test_unknown_key_exit_code(tmp_path, capsys):
    assert main(["run", "--config", str(write(tmp_path, "example = ex1\nbogus = 3\n"))]) == EXIT_INVALID
    assert "unknown key" in capsys.readouterr().err


def test_missing_config_exit_code(tmp_path):
    assert main(["validate", "--config", str(tmp_path / "nope.cfg")]) == EXIT_INVALID


def test_contour_failure_exit_code(tmp_path):
    text = SMALL_RUN + "mu = 1\n"
    assert main(["run", "--config", str(write(tmp_path, text)), "--output-dir", str(tmp_path / "o")]) == EXIT_INVALID
    assert main(["validate", "--config", str(write(tmp_path, text))]) == EXIT_INVALID


def test_blow_up_exit_code(tmp_path):
    text = "example = ex2\nh = 2^-4\nm = 20\ntau = 0.2\nT = 5\nsnapshot_times = 5\n"
    assert main(["run", "--config", str(write(tmp_path, text)), "--output-dir", str(tmp_path / "o")]) == EXIT_BLOWUP


def test_validate_ex2(capsys):
    assert main(["validate", "--example", "ex2"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "stability_ok       : True" in out
    assert "sufficient_ok      : False" in out


def test_validate_ex1_enclosure(capsys):
    assert main(["validate", "--example", "ex1"]) == EXIT_OK
    assert "enclosure_ok       : True" in capsys.readouterr().out


def test_validate_reports_horizon_violation(tmp_path, capsys):
    text = "example = ex2\ndelta = 4.5\n"
    main(["validate", "--config", str(write(tmp_path, text))])
    assert "A2 horizon         : VIOLATED" in capsys.readouterr().out


def test_validate_ex3_homogeneity_check(capsys):
    main(["validate", "--example", "ex3"])
    assert "A3 homogeneity" in capsys.readouterr().out


def test_table_eh(tmp_path):
    text = ("example = ex2\nm = 20\ntau = 1/1000\nT = 0.5\nh_list = 2^-3, 2^-4, 2^-5\n"
            "delta_list = 0.5\n")
    out = tmp_path / "t"
    assert main(["table-eh", "--config", str(write(tmp_path, text)), "--output-dir", str(out)]) == EXIT_OK
    rows = read_csv(out / "table_eh.csv")
    assert rows[0] == ["h", "delta", "error", "order"]
    assert len(rows) == 4 and rows[1][3] == ""
    assert 1.5 < float(rows[3][3]) < 2.6


def test_table_edelta_and_empty_ratio_list(tmp_path):
    text = "example = ex2\nm = 20\ntau = 1/1000\nT = 0.5\nh_list = 2^-3, 2^-4\nratios = 1, 2\n"
    out = tmp_path / "t"
    assert main(["table-edelta", "--config", str(write(tmp_path, text)), "--output-dir", str(out)]) == EXIT_OK
    rows = read_csv(out / "table_edelta.csv")
    assert rows[0] == ["h", "delta", "error", "order"] and len(rows) == 5
    bad = write(tmp_path, text.replace("ratios = 1, 2", "ratios = "), "bad.cfg")
    assert main(["table-edelta", "--config", str(bad), "--output-dir", str(out)]) == EXIT_INVALID


def test_console_entry_point_help():
    res = subprocess.run([sys.executable, "-m", "nlpml.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for cmd in ("run", "table-eh", "table-edelta", "validate"):
        assert cmd in res.stdout
