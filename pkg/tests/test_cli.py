from __future__ import annotations

import json
import subprocess
import sys
from fractions import Fraction

import pytest

from cachebounds import cli, gap, sim
from cachebounds.curves import CSV_COLUMNS, CURVE_NAMES, read_csv, read_json, tradeoff_bundle
from cachebounds.envelope import evaluate


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def field(out, name):
    for line in out.splitlines():
        if line.startswith(name + ":"):
            return line.split(":", 1)[1].split()[0]
    raise KeyError(name)


def test_rates_examples(capsys):
    code, out, _ = run(capsys, "rates", "--files", "3", "--users", "3", "--memory", "1")
    assert code == 0 and field(out, "r_u") == "1"
    code, out, _ = run(capsys, "rates", "--files", "2", "--users", "2", "--memory", "2")
    assert code == 0
    assert field(out, "r_u") == field(out, "r_u_ave") == field(out, "r_dec") == "0"
    code, out, _ = run(capsys, "rates", "--files", "10", "--users", "4", "--r", "1.5")
    # halfway between r=1 (3/2) and r=2 (2/3)
    assert code == 0 and Fraction(field(out, "r_u")) == Fraction(13, 12)


def test_converse_examples(capsys):
    code, out, _ = run(capsys, "converse", "-N", "10", "-K", "4", "-M", "1")
    assert code == 0 and field(out, "best_peak_converse") == "3"
    assert "Thm2(s=4" in out
    code, out, _ = run(capsys, "converse", "-N", "10", "-K", "4", "-M", "4")
    assert code == 0 and field(out, "best_peak_converse") == "1"
    assert "Thm4(n=2, condition-holds" in out
    code, out, _ = run(capsys, "converse", "-N", "7", "-K", "3", "-M", "7")
    assert field(out, "best_peak_converse") == "0" and field(out, "ave_converse") == "0"


@pytest.mark.parametrize("argv", [
    ["rates", "-N", "2", "-K", "2"],
    ["rates", "-N", "2", "-K", "2", "-M", "1", "--r", "1"],
    ["rates", "-N", "0", "-K", "2", "-M", "0"],
    ["rates", "-N", "2", "-K", "2", "-M", "abc"],
    ["bogus"],
    ["certify", "nothing"],
])
def test_usage_errors_exit_64(capsys, argv):
    with pytest.raises(SystemExit) as exc:
        cli.main(argv)
    assert exc.value.code == 64


def test_semantic_usage_errors_exit_64(capsys):
    code, _, err = run(capsys, "rates", "-N", "2", "-K", "2", "-M", "5")
    assert code == 64 and "memory" in err
    code, _, _ = run(capsys, "simulate", "-N", "2", "-K", "2", "--r", "1/2")
    assert code == 64
    code, _, _ = run(capsys, "certify", "theorem3", "--users", "6")
    assert code == 64


def test_module_entry_point_exit_code():
    proc = subprocess.run([sys.executable, "-m", "cachebounds", "rates"], capture_output=True, text=True)
    assert proc.returncode == 64
    proc = subprocess.run([sys.executable, "-m", "cachebounds", "rates", "-N", "3", "-K", "3", "-M", "1"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "r_u: 1" in proc.stdout


@pytest.mark.parametrize("fmt", ["csv", "json"])
@pytest.mark.parametrize("n,k", [(6, 3), (10, 4)])
def test_curve_round_trip_and_tightness(tmp_path, capsys, fmt, n, k):
    out = tmp_path / f"c.{fmt}"
    code, stdout, _ = run(capsys, "curve", "-N", str(n), "-K", str(k), "--out", str(out), "--format", fmt)
    assert code == 0
    text = out.read_text()
    curves = read_csv(text) if fmt == "csv" else read_json(text).curves
    want = tradeoff_bundle(n, k).curves
    assert list(curves) == list(CURVE_NAMES)
    assert {c: v.breakpoints for c, v in curves.items()} == {c: v.breakpoints for c, v in want.items()}
    peak, best = curves["achievable-peak"], curves["best-converse"]
    for m in set(peak.memories) | set(best.memories):
        assert evaluate(peak, m) == evaluate(best, m)
    assert "max peak gap (achievable - best converse): 0 " in stdout


def test_curve_csv_header_and_domain(tmp_path, capsys):
    out = tmp_path / "c.csv"
    run(capsys, "curve", "-N", "5", "-K", "3", "--out", str(out))
    lines = out.read_text().splitlines()
    assert lines[0].split(",") == CSV_COLUMNS
    for curve in read_csv(out.read_text()).values():
        assert curve.domain == (0, 5)


def test_curve_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run(capsys, "curve", "-N", "7", "-K", "5", "--out", str(a))
    run(capsys, "curve", "-N", "7", "-K", "5", "--out", str(b))
    assert a.read_bytes() == b.read_bytes()
    assert json.loads(a.read_text())["params"] == {"N": 7, "K": 5}


def test_curve_io_failure(tmp_path, capsys):
    code, _, err = run(capsys, "curve", "-N", "3", "-K", "3", "--out", str(tmp_path / "no" / "x.csv"))
    assert code == 74 and "cannot write" in err


def test_best_converse_below_achievable_in_bundle():
    b = tradeoff_bundle(12, 6)
    peak, best = b.curves["achievable-peak"], b.curves["best-converse"]
    for m in set(peak.memories) | set(best.memories):
        assert evaluate(best, m) <= evaluate(peak, m)


def test_simulate_examples(capsys, tmp_path):
    dump = tmp_path / "t.txt"
    code, out, _ = run(capsys, "simulate", "-N", "2", "-K", "2", "--r", "1", "--seed", "7",
                       "--dump-transcript", str(dump))
    assert code == 0
    assert field(out, "measured peak") == "1/2" and field(out, "measured average") == "1/2"
    assert "decodes: all 8 OK" in out
    first = dump.read_text()
    run(capsys, "simulate", "-N", "2", "-K", "2", "--r", "1", "--seed", "7", "--dump-transcript", str(dump))
    assert dump.read_text() == first
    code, out, _ = run(capsys, "simulate", "-N", "3", "-K", "3", "--r", "3")
    assert code == 0 and field(out, "measured peak") == "0"
    code, out, _ = run(capsys, "simulate", "-N", "3", "-K", "3", "--r", "1")
    assert code == 0 and field(out, "measured peak") == "1"


def test_simulate_decode_failure_exit_2(capsys, monkeypatch):
    monkeypatch.setattr(sim, "decode", lambda *a, **k: b"\x00")
    code, _, err = run(capsys, "simulate", "-N", "2", "-K", "2", "--r", "1")
    assert code == 2 and "decode FAILED" in err


def test_certify_pass_and_report(capsys, tmp_path):
    rep = tmp_path / "r.json"
    code, out, _ = run(capsys, "certify", "corollary1", "--nmax", "12", "--out", str(rep))
    assert code == 0 and "pass: true" in out
    doc = json.loads(rep.read_text())
    assert doc["suite"] == "corollary1" and doc["pass"] is True
    code, out, _ = run(capsys, "certify", "theorem1", "--nmax", "6", "--kmax", "6")
    assert code == 0 and "worst_ratio:" in out


def test_certify_failure_exit_1(capsys, monkeypatch):
    bad = gap.GapReport("corollary1", {}, None, None, Fraction(1), False,
                        [{"N": 3, "M": Fraction(1, 2)}])
    monkeypatch.setattr(gap, "corollary1_check", lambda n_max: bad)
    code, out, _ = run(capsys, "certify", "corollary1")
    assert code == 1
    assert 'counterexample: {"N": 3, "M": {"exact": "1/2"' in out
