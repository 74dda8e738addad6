import math
import os
import pathlib

import pytest

import bladectl

ROOT = pathlib.Path(os.environ.get("BLADECTL_SOURCE_DIR", pathlib.Path(__file__).resolve().parents[2]))
CONFIG = str(ROOT / "configs" / "blade_default.ini")


def test_shipped_config_loads():
    c = bladectl.load_config(CONFIG)
    assert c.scenario == "output-feedback"
    assert c.c1_acute == 10.0
    assert c.dt == pytest.approx(1e-3)
    assert c.dx == pytest.approx(0.05)


def test_empty_config_names_required_keys():
    with pytest.raises(bladectl.BladeError) as err:
        bladectl.parse_config("")
    for key in bladectl.required_config_keys():
        assert key in str(err.value)


def test_dimensionless_groups():
    d = bladectl.nondimensionalize()
    assert d["G"] == pytest.approx(2792.6, abs=0.05)
    assert d["b"] == pytest.approx(2.7221, abs=1e-4)


def test_place_poles_companion():
    k = bladectl.place_poles([[0.0, 1.0], [0.0, 0.0]], [[0.0], [1.0]], [-1.0, -2.0])
    assert list(k) == pytest.approx([-2.0, -3.0])


def test_fit_decay_exponential():
    t = [0.01 * i for i in range(501)]
    v = [math.exp(-2.0 * s) for s in t]
    rate, r2 = bladectl.fit_decay(t, v, 1.0, 5.0)
    assert rate == pytest.approx(-2.0, abs=1e-3)
    assert r2 > 0.999


def test_open_loop_grows():
    c = bladectl.load_config(CONFIG, {"scenario.mode": "open-loop", "grid.t_final": "0.5"})
    r = bladectl.run_scenario(c)
    assert r["t"][-1] == pytest.approx(0.5)
    assert r["absX"][-1] > r["absX"][0]


def test_simulate_writes_manifest(tmp_path):
    out = tmp_path / "run"
    c = bladectl.load_config(CONFIG, {"scenario.mode": "open-loop", "grid.t_final": "0.2", "output.dir": str(out)})
    code, _ = bladectl.simulate(c)
    assert code == 0
    lines = (out / "MANIFEST").read_text().splitlines()
    assert lines[0] == "# status: ok"
    for line in lines[2:]:
        name, digest, _rows = line.split()
        assert bladectl.sha256_file(str(out / name)) == digest
