import json
import shutil
import subprocess

import numpy as np
import pytest

from shifttest.cli import main
from shifttest.io import SeriesParseError, read_series, write_series


def run(argv):
    try:
        return main([str(a) for a in argv])
    except SystemExit as exc:  # argparse
        return exc.code


@pytest.fixture
def pair_files(tmp_path):
    x, y = tmp_path / "x.csv", tmp_path / "y.csv"
    code = run(
        ["simulate", "--out-x", x, "--out-y", y, "--length", 300, "--p-switch", 0.1,
         "--p-common", 0.1, "--seed", 17]
    )
    assert code == 0
    return x, y


def test_simulate_writes_series_and_sidecar(pair_files, tmp_path):
    x, y = pair_files
    assert len(x.read_text().splitlines()) == 300
    assert len(y.read_text().splitlines()) == 300
    meta = json.loads((tmp_path / "x.json").read_text())
    assert meta["config"]["seed"] == 17
    assert meta["config"]["p_common"] == 0.1
    assert b"\r" not in x.read_bytes()


def test_simulate_is_deterministic(tmp_path, pair_files):
    x2, y2 = tmp_path / "x2.csv", tmp_path / "y2.csv"
    run(["simulate", "--out-x", x2, "--out-y", y2, "--p-common", 0.1, "--seed", 17])
    assert x2.read_bytes() == pair_files[0].read_bytes()
    assert y2.read_bytes() == pair_files[1].read_bytes()


def test_simulate_without_seed_prints_one(tmp_path, capsys):
    code = run(["simulate", "--out-x", tmp_path / "a.csv", "--out-y", tmp_path / "b.csv"])
    assert code == 0
    err = capsys.readouterr().err
    seed = int(err.split("seed:")[1].split()[0])
    meta = json.loads((tmp_path / "a.json").read_text())
    assert meta["config"]["seed"] == seed


def test_simulate_invalid_probability(tmp_path):
    code = run(["simulate", "--out-x", tmp_path / "a.csv", "--out-y", tmp_path / "b.csv",
                "--p-switch", 1.5])
    assert code == 2
    assert not (tmp_path / "a.csv").exists()


def test_simulate_unwritable(tmp_path):
    code = run(["simulate", "--out-x", tmp_path / "no" / "a.csv", "--out-y", tmp_path / "b.csv",
                "--seed", 1])
    assert code == 3


def test_round_trip_through_test(pair_files, tmp_path):
    x, y = pair_files
    out = tmp_path / "r.json"
    assert run(["test", "--x", x, "--y", y, "--n-shifts", 19, "--out", out]) == 0
    res = json.loads(out.read_text())
    assert res["n_shifts"] == 19
    assert res["segment_length"] == 262
    assert len(res["profile"]["scores"]) == 39
    assert res["profile"]["shifts"][0] == -19
    assert 1 <= res["m"] <= 39
    assert res["p_conservative"] == min(1.0, res["m"] / 20)
    assert read_series(x).values.tolist() == [int(v) for v in x.read_text().split()]


def test_self_association(pair_files, tmp_path):
    x, _ = pair_files
    out = tmp_path / "r.json"
    assert run(["test", "--x", x, "--y", x, "--n-shifts", 19, "--out", out]) == 0
    res = json.loads(out.read_text())
    assert res["m"] == 1
    assert res["reject_conservative"] and res["reject_approximate"]


def test_segment_length_flag(pair_files, tmp_path):
    x, y = pair_files
    out = tmp_path / "r.json"
    assert run(["test", "--x", x, "--y", y, "--segment-length", 262, "--out", out]) == 0
    assert json.loads(out.read_text())["n_shifts"] == 19
    assert run(["test", "--x", x, "--y", y, "--segment-length", 261, "--out", out]) == 4


def test_n_too_large_no_output(pair_files, tmp_path):
    x, y = pair_files
    out = tmp_path / "r.json"
    assert run(["test", "--x", x, "--y", y, "--n-shifts", 150, "--out", out]) == 4
    assert not out.exists()


def test_length_mismatch(tmp_path, pair_files):
    short = tmp_path / "short.csv"
    write_series(short, [0, 1] * 20)
    assert run(["test", "--x", pair_files[0], "--y", short, "--n-shifts", 5]) == 4


def test_parse_error_reports_line(tmp_path, pair_files, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("value\n0\n1\nfoo\n1\n")
    code = run(["test", "--x", bad, "--y", pair_files[1], "--n-shifts", 1])
    assert code == 3
    assert "bad.csv:4" in capsys.readouterr().err


def test_missing_file(tmp_path, pair_files):
    assert run(["test", "--x", tmp_path / "nope.csv", "--y", pair_files[1], "--n-shifts", 1]) == 3


def test_non_binary_for_log_odds(tmp_path):
    f = tmp_path / "tri.csv"
    write_series(f, [0, 1, 2] * 10)
    assert run(["test", "--x", f, "--y", f, "--n-shifts", 2]) == 4


def test_unknown_flag_fails_before_writing(tmp_path, pair_files):
    out = tmp_path / "r.json"
    code = run(["test", "--x", pair_files[0], "--y", pair_files[1], "--n-shifts", 3,
                "--out", out, "--bogus"])
    assert code == 2
    assert not out.exists()


@pytest.mark.parametrize("alpha", ["0", "1", "x"])
def test_bad_alpha_is_usage_error(pair_files, alpha):
    assert run(["test", "--x", pair_files[0], "--y", pair_files[1], "--n-shifts", 3,
                "--alpha", alpha]) == 2


def test_real_series_with_header(tmp_path):
    rng = np.random.default_rng(0)
    x = rng.standard_normal(120)
    fx, fy = tmp_path / "x.csv", tmp_path / "y.csv"
    fx.write_text("signal\n" + "\n".join(repr(float(v)) for v in x) + "\n")
    write_series(fy, x + 0.1 * rng.standard_normal(120))
    for assoc in ("pearson", "spearman"):
        out = tmp_path / f"{assoc}.json"
        assert run(["test", "--x", fx, "--y", fy, "--n-shifts", 10, "--assoc", assoc,
                    "--out", out]) == 0
        res = json.loads(out.read_text())
        assert res["m"] == 1
        assert res["association"] == assoc


def test_csv_output(pair_files, capsys):
    assert run(["test", "--x", pair_files[0], "--y", pair_files[0], "--n-shifts", 5,
                "--alpha", "0.2", "--format", "csv"]) == 0
    header, row = capsys.readouterr().out.strip().splitlines()
    fields = dict(zip(header.split(","), row.split(",")))
    assert fields["m"] == "1"
    assert fields["reject_conservative"] == "true"


def test_read_series_kinds(tmp_path):
    f = tmp_path / "a.csv"
    f.write_text("1\n2\n\n3\n")
    assert read_series(f).kind == "categorical"
    assert read_series(f, "real").values.tolist() == [1.0, 2.0, 3.0]
    f.write_text("1\n2.5\n")
    assert read_series(f).kind == "real"
    with pytest.raises(SeriesParseError):
        read_series(f, "categorical")
    f.write_text("header only\n")
    with pytest.raises(SeriesParseError, match="no values"):
        read_series(f)


def test_write_read_real_round_trip(tmp_path):
    v = np.random.default_rng(1).standard_normal(50)
    f = tmp_path / "r.csv"
    write_series(f, v)
    np.testing.assert_array_equal(read_series(f).values, v)


def test_reproduce_fig2_smoke(tmp_path):
    out = tmp_path / "fig"
    assert run(["reproduce-fig2", "--replicates", 10, "--seed", 3, "--workers", 1,
                "--out", out]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["conditions"]["independent"]["status"] == "LOW-POWER"


def test_verify_bounds(tmp_path):
    out = tmp_path / "b.json"
    assert run(["verify-bounds", "--replicates", 200, "--seed", 2, "--workers", 1,
                "--out", out]) == 0
    report = json.loads(out.read_text())
    assert report["conservative_ok"]
    assert len(report["rows"]) == 39
    csv_out = tmp_path / "b.csv"
    assert run(["verify-bounds", "--replicates", 50, "--seed", 2, "--workers", 1,
                "--format", "csv", "--out", csv_out]) == 0
    assert csv_out.read_text().startswith("M,")


@pytest.mark.skipif(shutil.which("shifttest") is None, reason="console script not installed")
def test_console_script(pair_files):
    proc = subprocess.run(
        ["shifttest", "test", "--x", str(pair_files[0]), "--y", str(pair_files[0]),
         "--n-shifts", "4"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["m"] == 1


def test_independent_files_rarely_reject(tmp_path):
    ms = []
    for seed in range(20):
        x, y, out = tmp_path / "x.csv", tmp_path / "y.csv", tmp_path / "r.json"
        run(["simulate", "--out-x", x, "--out-y", y, "--p-common", 0, "--seed", seed])
        assert run(["test", "--x", x, "--y", y, "--n-shifts", 19, "--out", out]) == 0
        ms.append(json.loads(out.read_text())["m"])
    assert sum(m >= 2 for m in ms) >= 17
