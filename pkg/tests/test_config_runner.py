import json
import math
from pathlib import Path

import numpy as np
import pytest

from kerninv import runner
from kerninv.config import ConfigError, config_dict, format_config, parse_config

CONFIGS = Path(__file__).parent.parent / "configs"

MINIMAL = "kind = bernstein\nm = 2\ns = 1\nlevels = 3 4 5 6\n"
FAST = "kind = bernstein\nm = 2\ns = 1\nlevels = 2 3 4 5\n"


def test_minimal_config_parses():
    cfg = parse_config(MINIMAL)
    assert cfg.kind == "bernstein" and cfg.geometry == "interval" and cfg.d == 1
    assert cfg.levels == (3, 4, 5, 6) and cfg.s == 1.0


def test_all_violations_reported():
    text = "kind = bernstein\nm = 1.7\ns = 5\nlevels = 1 2\nbogus = 3\ngenerator = grid\nseed = x\n"
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    v = exc.value.violations
    assert any("unknown key" in e for e in v)
    assert any("bad value" in e for e in v)
    assert len(v) >= 2
    with pytest.raises(ConfigError) as exc:
        parse_config("kind = bernstein\nm = 1.7\ns = 5\nlevels = 1 2\ngenerator = grid\n")
    v = exc.value.violations
    assert any("unsupported" in e for e in v)
    assert any("4 levels" in e for e in v)
    assert any("generator" in e for e in v)
    assert any("Bernstein hypothesis" in e for e in v)


def test_boundary_s_equals_half_d():
    assert parse_config("kind = bernstein\ngeometry = box\nm = 2.5\ns = 1\nlevels = 1 2 3 4\n").s == 1.0
    with pytest.raises(ConfigError, match="Bernstein hypothesis"):
        parse_config("kind = bernstein\nm = 1\ns = 1.5\nlevels = 1 2 3 4\n")


def test_kind_specific_errors():
    bad = {
        "sampling": "kind = sampling\ns = 3\nlevels = 1 2 3 4\n",
        "gn-check": "kind = gn-check\nalpha = 2\nm_order = 1\nlevels = 1 2 3 4\n",
        "manifold-bernstein": "kind = manifold-bernstein\ngeometry = circle\nm = 1.5\nbeta = 0.3\nlevels = 1 2 3 4\n",
        "equivalence": "kind = equivalence\ngeometry = circle\nm = 2.5\nbeta = 2\nlevels = 4 5 6\n",
        "stability": "kind = stability\ns = 3\nlevels = 1 2 3 4\n",
        "circle-domain": "kind = bernstein\ngeometry = circle\nm = 2.5\ns = 1\nlevels = 1 2 3 4\n",
    }
    for name, text in bad.items():
        with pytest.raises(ConfigError):
            parse_config(text)


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.cfg")), ids=lambda p: p.stem)
def test_shipped_configs_parse(path):
    parse_config(path.read_text())


def test_round_trip_fuzz():
    rng = np.random.default_rng(2024)
    shipped = [parse_config(p.read_text()) for p in sorted(CONFIGS.glob("*.cfg"))]
    for _ in range(100):
        cfg = shipped[int(rng.integers(len(shipped)))]
        text = format_config(cfg)
        text += f"seed = {int(rng.integers(0, 2**63))}\n" if "seed =" not in text else ""
        text += f"trials = {int(rng.integers(1, 50))}\n" if "trials =" not in text else ""
        text += f"c_delta = {rng.uniform(0.05, 0.5)!r}\n" if "c_delta" not in text else ""
        a = parse_config(text)
        b = parse_config(format_config(a))
        assert config_dict(a) == config_dict(b)
        assert format_config(a) == format_config(b)


def test_inf_values_round_trip():
    cfg = parse_config("kind = sampling\ns = 0\nq_norm = inf\nlevels = 2 3 4 5\n")
    assert cfg.q_norm == math.inf
    assert parse_config(format_config(cfg)).q_norm == math.inf


def run(tmp_path, text, *extra, name="c.cfg"):
    cfg = tmp_path / name
    cfg.write_text(text)
    kind = parse_config(text).kind if "kind" in text else "bernstein"
    return runner.main([kind, "--config", str(cfg), *extra])


def test_cli_exit_codes(tmp_path, capsys):
    assert run(tmp_path, FAST, "--out", str(tmp_path / "ok")) == 0
    assert runner.main(["nonsense", "--config", "x"]) == 1
    assert runner.main(["bernstein", "--config", str(tmp_path / "missing.cfg")]) == 1
    bad = tmp_path / "bad.cfg"
    bad.write_text("kind = bernstein\nm = 2\nlevels = 3 4 5 6\n")
    assert runner.main(["bernstein", "--config", str(bad)]) == 1
    assert runner.main(["nikolskii", "--config", str(tmp_path / "c.cfg")]) == 1
    # a slope window that excludes the measured exponent
    assert run(tmp_path, FAST + "slope_min = 5\nslope_max = 6\n", "--out", str(tmp_path / "fail")) == 2


def test_tiny_separation_fails(tmp_path):
    # nodes 1e-10 apart: Grams need jitter and the constants stop scaling
    text = "kind = bernstein\nm = 2\ns = 1\nbounds = 0 1e-9\nlevels = 2 3 4 5\n"
    assert run(tmp_path, text, "--out", str(tmp_path / "t")) == 2


def test_cli_runtime_failure(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise np.linalg.LinAlgError("Gram not positive definite after maximal jitter")
    monkeypatch.setattr(runner, "run_scaling_experiment", boom)
    assert run(tmp_path, FAST) == 2


def test_incomplete_level_fails(tmp_path):
    # level 30 exceeds the node budget, so the report is incomplete
    text = "kind = bernstein\nm = 2\ns = 1\nlevels = 2 3 4 30\n"
    assert run(tmp_path, text, "--out", str(tmp_path / "o")) == 2
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    assert rep["complete"] is False and rep["verdict"] == "fail" and rep["error"]


def test_outputs_and_determinism(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(tmp_path, FAST, "--out", str(a), "--threads", "1") == 0
    assert run(tmp_path, FAST, "--out", str(b), "--threads", "2") == 0
    for name in ("report.csv", "report.json", "loglog.dat"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    rep = json.loads((a / "report.json").read_text())
    assert rep["verdict"] == "pass" and len(rep["levels"]) == 4
    assert parse_config(rep["config_text"]).levels == (2, 3, 4, 5)
    header = (a / "report.csv").read_text().splitlines()[0].split(",")
    assert header[:8] == runner.BASE_COLUMNS
    assert len((a / "loglog.dat").read_text().splitlines()) == 5


def test_seed_override_and_dump_grams(tmp_path):
    out = tmp_path / "g"
    assert run(tmp_path, FAST, "--out", str(out), "--seed", "17", "--dump-grams") == 0
    assert json.loads((out / "report.json").read_text())["seed"] == 17
    files = sorted(p.name for p in (out / "grams").iterdir())
    assert "level2_kernel_gram.csv" in files
    G = np.loadtxt(out / "grams" / "level2_kernel_gram.csv", delimiter=",")
    np.testing.assert_array_equal(G, G.T)


def test_poincare_cli(tmp_path):
    assert runner.main(["poincare", "--config", str(CONFIGS / "poincare.cfg"), "--out", str(tmp_path)]) == 0
    assert len((tmp_path / "report.csv").read_text().splitlines()) == 7
