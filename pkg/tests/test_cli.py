import json
import subprocess
import sys

import numpy as np
import pytest

from substrat.cli import canonical_json, dispatch


def _run(args):
    return subprocess.run([sys.executable, "-m", "substrat.cli"] + args,
                          capture_output=True, text=True)


def test_group_info_json(capsys):
    code = dispatch(["group", "info", "--builtin", "heisenberg:1"])
    out = capsys.readouterr().out
    assert code == 0
    doc = json.loads(out)
    assert doc == {"d1": 2, "d2": 1, "d": 3, "Q": 4}


def test_group_info_from_file(tmp_path, capsys):
    from substrat.groups import free2step

    g = free2step(3)
    path = tmp_path / "g.json"
    path.write_text(json.dumps({"d1": 3, "d2": 3, "c": g.structure.tolist()}))
    code = dispatch(["group", "info", "--file", str(path)])
    assert code == 0
    assert json.loads(capsys.readouterr().out)["Q"] == 9


def test_phase_hankel(capsys):
    code = dispatch(["phase", "hankel", "--m", "1", "--s", "2"])
    out = capsys.readouterr().out
    assert code == 0
    assert "1/4465125" in out
    doc = json.loads(out)
    assert doc["decimal"] == pytest.approx(1.0 / 4465125.0)


def test_usage_error_exit_code():
    res = _run(["nonsense"])
    assert res.returncode == 1
    assert "usage" in res.stderr.lower()


def test_no_command_usage():
    res = _run([])
    assert res.returncode == 1


def test_heat_single_point(capsys):
    code = dispatch(["heat", "--builtin", "heisenberg:1", "--z", "1.0",
                     "--x", "0,0", "--u", "0"])
    out = capsys.readouterr().out
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "x1,x2,u1,re_p,im_p"
    vals = lines[1].split(",")
    assert float(vals[3]) == pytest.approx(np.sqrt(2.0) / 16.0, rel=1e-8)


def test_heat_lattice_rows(capsys):
    code = dispatch(["heat", "--builtin", "heisenberg:1", "--z", "1.0",
                     "--xn", "3", "--un", "3", "--xmax", "1", "--umax", "0.5"])
    out = capsys.readouterr().out
    assert code == 0
    assert len(out.strip().splitlines()) == 1 + 9 * 3


def test_heat_domain_error(capsys):
    code = dispatch(["heat", "--builtin", "heisenberg:1", "--z", "-1.0",
                     "--x", "0,0", "--u", "0"])
    out = capsys.readouterr().out
    assert code == 2
    assert json.loads(out)["error"] == "InvalidTime"


def test_phase_find_critical(capsys):
    code = dispatch(["phase", "find-critical", "--builtin", "heisenberg:1",
                     "--seed", "0"])
    out = capsys.readouterr().out
    assert code == 0
    doc = json.loads(out)
    assert abs(np.linalg.norm(doc["mu0"])) < 1.0
    assert doc["min_abs_eigenvalue"] > 0


def test_kernel_ft(capsys):
    code = dispatch(["kernel", "ft", "--builtin", "heisenberg:1",
                     "--F", "heatcap:1,40", "--xi", "0.3,0.1",
                     "--mu", "1.4142135623730951"])
    out = capsys.readouterr().out
    assert code == 0
    doc = json.loads(out)
    assert np.isfinite(doc["re"])
    assert doc["im"] == 0.0


def test_threshold(capsys):
    code = dispatch(["threshold", "--builtin", "heisenberg:1",
                     "--samples", "50"])
    out = capsys.readouterr().out
    assert code == 0
    doc = json.loads(out)
    assert doc["bound"] == 1.5
    assert doc["h"] == 1


def test_osc_verify(tmp_path, capsys):
    plot = tmp_path / "err.dat"
    code = dispatch(["osc", "verify", "--builtin", "heisenberg:1",
                     "--t", "8,16,32", "--emit-plot", str(plot)])
    out = capsys.readouterr().out
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "t,re_omega,im_omega,abs_prediction,error"
    assert len(lines) == 1 + 3 + 1
    assert lines[-1].startswith("# fitted_error_exponent=")
    assert plot.exists()
    assert len(plot.read_text().strip().splitlines()) == 1 + 3


def test_selftest_quick_pass():
    res = _run(["selftest", "--level", "quick"])
    assert res.returncode == 0
    doc = json.loads(res.stdout)
    assert doc["passed"] is True
    assert all(c["passed"] for c in doc["criteria"])


def test_selftest_deterministic_bytes():
    a = _run(["selftest", "--level", "quick"])
    b = _run(["selftest", "--level", "quick"])
    assert a.returncode == 0 and b.returncode == 0
    assert a.stdout == b.stdout


def test_selftest_tampered_bernoulli(monkeypatch, capsys):
    import substrat.bernoulli as bern

    original = bern.bernoulli_b

    def tampered(k):
        coeff = original(k)
        if k == 2:
            return type(coeff)(k=k, exact=-coeff.exact, float=-coeff.float)
        return coeff

    monkeypatch.setattr("substrat.bernoulli.bernoulli_b", tampered)
    code = dispatch(["selftest", "--level", "quick"])
    out = capsys.readouterr().out
    assert code == 2
    doc = json.loads(out)
    hankel = [c for c in doc["criteria"] if c["name"] == "hankel-positivity"][0]
    assert hankel["passed"] is False


def test_canonical_json_fixed_digits():
    text = canonical_json({"x": 1.0 / 3.0, "arr": [1, 2.5], "flag": True,
                           "none": None, "s": "a"})
    assert "0.33333333333333331" in text
    assert json.loads(text) == {"x": 1.0 / 3.0, "arr": [1, 2.5],
                                "flag": True, "none": None, "s": "a"}
    with pytest.raises(ValueError):
        canonical_json({"bad": float("nan")})


def test_out_flag_writes_file(tmp_path, capsys):
    path = tmp_path / "report.json"
    code = dispatch(["--out", str(path), "group", "info",
                     "--builtin", "free2step:3"])
    capsys.readouterr()
    assert code == 0
    assert json.loads(path.read_text())["d2"] == 3
