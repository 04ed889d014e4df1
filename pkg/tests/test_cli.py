import math
import re
from pathlib import Path

import pytest

from levyhomog.cli import main
from levyhomog.config import load_config, parse_config
from levyhomog.errors import ConfigError

ROOT = Path(__file__).resolve().parents[1]
REFERENCE = ROOT / "configs" / "reference.ini"
MINIMAL = """[problem]
alpha = 1
c = "2+cos(2*pi*y)"
g = "sin(2*pi*y)"
phi = "0"
far_field = 0
"""


def write(tmp_path, text, name="c.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


# --- configuration -----------------------------------------------------------


def test_minimal_config_takes_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.coeffs.alpha == 1.0
    assert cfg.n_torus == 512 and cfg.refinement == 16 and cfg.method == "direct"
    assert cfg.epsilons == (1 / 4, 1 / 8, 1 / 16, 1 / 32, 1 / 64)
    assert cfg.formats == ("csv", "json", "svg")


def test_reference_config_loads():
    cfg = load_config(REFERENCE)
    assert cfg.schedule.lambda_values[-1] == 1e-4 and cfg.margin == 0.1


@pytest.mark.parametrize("edit, key, reason", [
    (("alpha = 1", "alpha = 2.5"), "alpha", "out of (0,2)"),
    (("alpha = 1", "alpha = 0"), "alpha", "out of (0,2)"),
    (('c = "2+cos(2*pi*y)"', 'c = "y"'), "c", "not periodic"),
    (('c = "2+cos(2*pi*y)"', 'c = "cos(2*pi*y)"'), "c", "bounded below"),
    (('g = "sin(2*pi*y)"', 'g = "sin(2*pi*y"'), "g", "cannot parse"),
    (("far_field = 0", "far_field = lots"), "far_field", "not a number"),
])
def test_config_errors(edit, key, reason):
    with pytest.raises(ConfigError) as info:
        parse_config(MINIMAL.replace(*edit))
    assert info.value.key == key and reason in info.value.reason


@pytest.mark.parametrize("extra, key", [
    ("[problem2]\nx = 1\n", "problem2"),
    ("[sweep]\nepsilon = 1/4\n", "sweep.epsilon"),
    ("[sweep]\nepsilons = 1/8, 1/4\n", "sweep.epsilons"),
    ("[sweep]\nepsilons = 0.3\n", "sweep.epsilons"),
    ("[sweep]\nrefinement = 4\n", "sweep.refinement"),
    ("[cell]\nmethod = magic\n", "cell.method"),
    ("[cell]\nschedule = geometric(0.1, 1e-4, 2)\n", "cell.schedule"),
    ("[discretization]\nh_rule = eps/4\n", "discretization.h_rule"),
    ("[discretization]\nn_torus = 100000\n", "discretization.n_torus"),
    ("[output]\nformats = csv, pdf\n", "output.formats"),
])
def test_unknown_and_malformed_keys(extra, key):
    with pytest.raises(ConfigError) as info:
        parse_config(MINIMAL + extra)
    assert info.value.key == key


def test_missing_required_key():
    with pytest.raises(ConfigError) as info:
        parse_config(MINIMAL.replace('phi = "0"\n', ""))
    assert info.value.key == "problem.phi"


def test_schedule_forms():
    cfg = parse_config(MINIMAL + "[cell]\nschedule = 0.1, 0.01, 0.001\nextrapolation_order = 2\n")
    assert cfg.schedule.lambda_values == (0.1, 0.01, 0.001) and cfg.schedule.extrapolation_order == 2


# --- commands ------------------------------------------------------------------


def test_cell_constant(tmp_path, capsys):
    cfg = write(tmp_path, MINIMAL.replace('"2+cos(2*pi*y)"', '"3"').replace('"sin(2*pi*y)"', '"2"')
                + "[cell]\nI = 1.5\n")
    assert main(["cell", "--config", str(cfg)]) == 0
    out = capsys.readouterr().out
    assert float(re.search(r"^d: (.+)$", out, re.M).group(1)) == pytest.approx(6.5, abs=1e-10)
    assert "rho:" in out and "trace:" in out


def test_cell_discounted_prints_trace(tmp_path, capsys):
    cfg = write(tmp_path, MINIMAL + "[discretization]\nn_torus = 128\n")
    assert main(["cell", "--config", str(cfg), "--method", "discounted"]) == 0
    out = capsys.readouterr().out
    assert "method: discounted" in out and "0.0001," in out


def test_effective_reference(tmp_path, capsys):
    cfg = write(tmp_path, MINIMAL + "[discretization]\nn_torus = 256\n")
    assert main(["effective", "--config", str(cfg)]) == 0
    out = capsys.readouterr().out
    c_bar = float(re.search(r"^c_bar: (.+)$", out, re.M).group(1))
    margin = float(re.search(r"margin = ([^,]+),", out).group(1))
    assert c_bar == pytest.approx(math.sqrt(3), abs=1e-3) and margin > 0


def test_solve_writes_csv(tmp_path):
    cfg = write(tmp_path, MINIMAL.replace("far_field = 0", "far_field = 0\nepsilon = 1/4"))
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    lines = (tmp_path / "o" / "solution.csv").read_text().splitlines()
    assert lines[0] == "x,u" and len(lines) == 65 + 1


def test_homogenize_and_tamper(tmp_path, capsys):
    cfg = write(tmp_path, MINIMAL + "[sweep]\nepsilons = 1/4, 1/8\n[discretization]\nn_torus = 128\n")
    assert main(["homogenize", "--config", str(cfg), "--out", str(tmp_path / "ok")]) == 0
    assert sorted(p.name for p in (tmp_path / "ok").iterdir()) == [
        "convergence.csv", "convergence.json", "convergence.svg"]
    capsys.readouterr()
    assert main(["homogenize", "--config", str(cfg), "--out", str(tmp_path / "bad"), "--debug-tamper"]) == 1
    assert "OrderingViolated" in capsys.readouterr().err
    assert not (tmp_path / "bad").exists()


def test_split_check_and_selftest(tmp_path, capsys):
    cfg = write(tmp_path, MINIMAL + "[discretization]\nn_torus = 128\nR_torus = 8\n")
    assert main(["split-check", "--config", str(cfg)]) == 0
    assert "all passed" in capsys.readouterr().out
    assert main(["selftest"]) == 0
    assert "FAIL" not in capsys.readouterr().out


def test_error_exit_codes(tmp_path, capsys):
    assert main(["cell", "--config", str(tmp_path / "missing.ini")]) == 2
    bad = write(tmp_path, MINIMAL.replace("alpha = 1", "alpha = 2.5"))
    assert main(["cell", "--config", str(bad)]) == 2
    assert "alpha: out of (0,2)" in capsys.readouterr().err
    assert main(["cell"]) == 2
    with pytest.raises(SystemExit) as info:
        main(["bogus", "--config", str(bad)])
    assert info.value.code == 2


def test_certificate_failure_exits_one(tmp_path, capsys, monkeypatch):
    import levyhomog.cli as cli
    from levyhomog.errors import CertificateFailed

    def boom(*a, **k):
        raise CertificateFailed("forced", pair=(0.0, 1.0))

    monkeypatch.setattr(cli, "check_subellipticity", boom)
    cfg = write(tmp_path, MINIMAL + "[discretization]\nn_torus = 64\n")
    assert main(["effective", "--config", str(cfg)]) == 1
    assert "CertificateFailed" in capsys.readouterr().err
