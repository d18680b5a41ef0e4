import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from mellinshift import cli
from mellinshift.fredholm import WindingError
from mellinshift.verify import fixture_path

CERTS = {(c["p"], c["re_gamma"], c["im_gamma"], tuple(c["omega_range"])): c
         for c in json.loads(fixture_path("certificates.json").read_text())}


def run(*argv):
    out = io.StringIO()
    code = cli.main([str(a) for a in argv], stdout=out)
    return code, out.getvalue()


def read_csv(text):
    rows = [line for line in text.splitlines() if not line.startswith("#")]
    return list(csv.DictReader(rows))


# -- check


def test_check_identity_shifts(tmp_path):
    code, text = run("check", "--p", 3, "--re-gamma", 0.1, "--im-gamma", -1.7, "--out", tmp_path / "r.json")
    assert code == cli.EXIT_OK
    assert "verdict: FREDHOLM_INDEX_ZERO" in text
    assert json.loads((tmp_path / "r.json").read_text())["verdict"] == "FREDHOLM_INDEX_ZERO"


def test_check_worked_example(tmp_path):
    code, text = run("check", "--p", 2, "--re-gamma", 0.1, "--im-gamma", 0.3,
                     "--alpha", "oscillating(1,0.5)", "--out", tmp_path / "r.json")
    assert code == cli.EXIT_OK
    assert "lower=0.55225 upper=0.64775 holds=True" in text
    rep = json.loads((tmp_path / "r.json").read_text())
    assert rep["condition"]["lower"] == pytest.approx(0.6 - 0.3 / (2 * math.pi), abs=1e-12)


def test_check_condition_violated():
    code, text = run("check", "--p", 2, "--re-gamma", 0.4, "--im-gamma", 2, "--alpha", "dilation(1)")
    assert code == cli.EXIT_NEGATIVE
    assert "upper=1.21831" in text
    assert "CONDITION_VIOLATED_INCONCLUSIVE" in text


@pytest.mark.parametrize("argv", [
    ["check", "--p", "1"],
    ["check", "--re-gamma", "0.6"],
    ["check", "--alpha", "sin(t"],
    ["check", "--alpha", "oscillating(2,1)"],
    ["check", "--grid-n", "100"],
    ["check", "--tau-ladder", "0.5"],
    ["check", "--tau-ladder", "e^x"],
    ["check", "--threads", "0"],
    ["check", "--p", "two"],
    ["frobnicate"],
    [],
])
def test_invalid_input_exits_2(argv, capsys):
    assert cli.main(argv, stdout=io.StringIO()) == cli.EXIT_INVALID


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"p": 2, "re_gamma": 0.4, "im_gamma": 2, "alpha": "dilation(1)"}))
    assert run("check", "--config", cfg)[0] == cli.EXIT_NEGATIVE
    # the flag wins over the file
    assert run("check", "--config", cfg, "--im-gamma", 0)[0] == cli.EXIT_OK


@pytest.mark.parametrize("content", ["{not json", "[1, 2]", '{"colour": 1}', '{"p": 0.5}',
                                     '{"symbol": {"n_t": 0}}'])
def test_bad_config_exits_2(tmp_path, content):
    cfg = tmp_path / "bad.json"
    cfg.write_text(content)
    assert run("check", "--config", cfg)[0] == cli.EXIT_INVALID
    assert run("check", "--config", tmp_path / "missing.json")[0] == cli.EXIT_INVALID


def test_shift_given_as_mapping(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"im_gamma": 0.5, "alpha": {"omega": "0.3*arctan(log(t))", "name": "atan"},
                               "beta": {"preset": "oscillating(0.4,0.5)"}, "i": 1, "j": 1}))
    code, text = run("check", "--config", cfg)
    assert code == cli.EXIT_OK
    assert "alpha=atan" in text


# -- symbol


def test_symbol_identity_shift_is_one():
    code, text = run("symbol", "--im-gamma", 0.4)
    assert code == cli.EXIT_OK
    rows = read_csv(text)
    assert len(rows) == 7 * 9
    assert all(float(r["abs_g"]) == 1.0 for r in rows)


def test_symbol_x_zero_column():
    code, text = run("symbol", "--alpha", "oscillating", "--im-gamma", 0.7, "--x-min", -2, "--x-max", 2, "--n-x", 5)
    rows = read_csv(text)
    assert {float(r["x"]) for r in rows} == {-2.0, -1.0, 0.0, 1.0, 2.0}
    assert all(float(r["re_g"]) == 1.0 and float(r["im_g"]) == 0.0 for r in rows if float(r["x"]) == 0)


def test_symbol_matches_oracle_csv(tmp_path):
    oracle = read_csv(fixture_path("g_oracle.csv").read_text())
    ts = sorted({float(r["t"]) for r in oracle})
    xs = sorted({float(r["x"]) for r in oracle})
    cfg = tmp_path / "sym.json"
    cfg.write_text(json.dumps({"p": 2, "re_gamma": 0.1, "im_gamma": 0.3, "alpha": "oscillating(0.5,0.5)",
                               "symbol": {"t_values": ts, "x_values": xs}}))
    code = cli.main(["symbol", "--config", str(cfg), "--out", str(tmp_path / "g.csv")], stdout=io.StringIO())
    assert code == cli.EXIT_OK
    got = {(float(r["t"]), float(r["x"])): r for r in read_csv((tmp_path / "g.csv").read_text())}
    worst = 0.0
    for r in oracle:
        g = got[(float(r["t"]), float(r["x"]))]
        for key in ("re_g", "im_g", "abs_g"):
            worst = max(worst, abs(float(g[key]) - float(r[key])))
    assert worst < 1e-12


def test_symbol_header_and_format():
    code, text = run("symbol", "--alpha", "dilation(0.5)", "--n-t", 1, "--n-x", 1, "--x-min", 0.3, "--theta", 0.5)
    lines = text.splitlines()
    assert lines[0].startswith("# g symbol samples: p=2 re_gamma=0 im_gamma=0 theta=0.5")
    assert "alpha=dilation(0.5)" in lines[1]
    assert lines[2] == "t,x,re_g,im_g,abs_g"
    # 17 significant digits
    assert lines[3].split(",")[1] == "0.29999999999999999"


@pytest.mark.parametrize("argv", [
    ["--t-min", "0"], ["--t-min", "5", "--t-max", "1"], ["--x-min", "2", "--x-max", "1"],
    ["--theta", "1.5"], ["--n-x", "0"],
])
def test_symbol_invalid_ranges(argv):
    assert run("symbol", *argv)[0] == cli.EXIT_INVALID


# -- winding


def test_winding_ok(tmp_path):
    code, text = run("winding", "--alpha", "oscillating(1,0.5)", "--re-gamma", 0.1, "--im-gamma", 0.3,
                     "--out", tmp_path / "w.json")
    assert code == cli.EXIT_OK
    assert "winding number: 0" in text
    rep = json.loads((tmp_path / "w.json").read_text())
    assert [r["winding"] for r in rep["results"]] == [0, 0, 0]
    assert rep["stabilized"] is True


def test_winding_custom_ladder():
    code, text = run("winding", "--tau-ladder", "e^2,30")
    assert code == cli.EXIT_OK
    assert text.count("tau=") == 2


def test_winding_not_stabilized_on_zero():
    # omega = pi with gamma = i puts a zero of g on the boundary
    code, text = run("winding", "--alpha", f"dilation({math.pi!r})", "--im-gamma", 1, "--tau-ladder", "e^3")
    assert code == cli.EXIT_UNSTABLE
    assert "not stabilized" in text


def test_winding_exit_3_contract(monkeypatch):
    def boom(*a, **k):
        raise WindingError("arg increment did not settle under refinement")

    monkeypatch.setattr(cli, "winding_ladder", boom)
    assert run("winding")[0] == cli.EXIT_UNSTABLE


# -- certificate


def test_certificate_identity():
    code, text = run("certificate", "--im-gamma", 0.5)
    assert code == cli.EXIT_OK
    assert "c=1\n" in text and "observed min |g~|=1 " in text


def test_certificate_fixture_case(tmp_path):
    case = CERTS[(2.0, 0.0, 0.0, (1.0, 1.0))]
    code, text = run("certificate", "--alpha", "dilation(1)", "--out", tmp_path / "c.json")
    assert code == cli.EXIT_OK
    rep = json.loads((tmp_path / "c.json").read_text())
    for key in ("c1", "c2", "c"):
        assert rep["certificate"][key] == pytest.approx(case[key], rel=1e-12)
    assert rep["observed_min"] == pytest.approx(0.98901, abs=1e-5)
    assert rep["margin"] > 0


def test_certificate_undefined():
    code, text = run("certificate", "--re-gamma", 0.4, "--im-gamma", 2, "--alpha", "dilation(1)")
    assert code == cli.EXIT_NEGATIVE
    assert "certificate undefined" in text


# -- verify


def test_verify_coarse_grid(tmp_path):
    code, text = run("verify", "--grid-n", 16, "--out", tmp_path / "v.json")
    assert code == cli.EXIT_OK
    assert "[COARSE]" in text and "[FAIL" not in text
    rep = json.loads((tmp_path / "v.json").read_text())
    statuses = {c["name"]: c["status"] for c in rep["runs"][0]["checks"]}
    for exact in ("multiplier_identity", "multiplier_algebra", "conjugation_S", "symbol_fixture"):
        assert statuses[exact] == "PASS"
    assert "COARSE" in statuses.values()


def test_verify_corrupted_fixture(tmp_path):
    lines = fixture_path("golden_symbols.txt").read_text().splitlines()
    fields = lines[5].split()
    fields[-1] = repr(float(fields[-1]) + 1e-6)
    lines[5] = " ".join(fields)
    bad = tmp_path / "golden.txt"
    bad.write_text("\n".join(lines) + "\n")
    code, text = run("verify", "--grid-n", 16, "--fixture", bad)
    assert code == cli.EXIT_NEGATIVE
    failed = [line for line in text.splitlines() if "[FAIL" in line]
    assert failed and all("symbol_fixture" in line for line in failed)
    assert "verify: FAIL" in text


def test_verify_missing_fixture(tmp_path):
    assert run("verify", "--grid-n", 16, "--fixture", tmp_path / "nope.txt")[0] == cli.EXIT_INVALID


def test_verify_rejects_short_grid():
    assert run("verify", "--grid-u", 5, "--grid-n", 64)[0] == cli.EXIT_INVALID


# -- reports


@pytest.mark.parametrize("argv", [
    ["check", "--alpha", "oscillating(1,0.5)", "--im-gamma", "0.3"],
    ["verify", "--grid-n", "16"],
    ["certificate", "--alpha", "dilation(1)"],
])
def test_reports_are_byte_identical(tmp_path, argv):
    a, b, c = tmp_path / "a.json", tmp_path / "b.json", tmp_path / "c.json"
    code_a, text_a = run(*argv, "--out", a)
    code_b, text_b = run(*argv, "--out", b)
    assert code_a == code_b and text_a == text_b
    assert a.read_bytes() == b.read_bytes()
    # the thread count only shows up in the echoed configuration
    run(*argv, "--out", c, "--threads", 3)
    ra, rc = json.loads(a.read_text()), json.loads(c.read_text())
    assert rc.pop("config")["threads"] == 3
    ra.pop("config")
    assert ra == rc


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "mellinshift.cli", "--version"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.strip().endswith("0.1.0")
    proc = subprocess.run([sys.executable, "-m", "mellinshift.cli", "check", "--p", "0.5"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 2
    assert "invalid input" in proc.stderr


def test_json_keeps_non_finite_values(tmp_path):
    run("check", "--out", tmp_path / "r.json")
    text = (tmp_path / "r.json").read_text()
    rep = json.loads(text)
    assert rep["certificate"]["J_halfwidth"] == "inf"
    assert np.isnan(float(rep["bounds"]["inf_Omega"])) or rep["bounds"]["inf_Omega"] > 0
