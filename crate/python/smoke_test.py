"""Smoke test for the nambd extension module.

Build and run:
    maturin develop --release -m crates/py/Cargo.toml
    python python/smoke_test.py
"""

import json
import math
import pathlib
import tempfile

import nambd

HERE = pathlib.Path(__file__).resolve().parent
MODEL = HERE.parent / "crates" / "core" / "models" / "nam.spi"


def test_rates():
    assert math.isclose(nambd.analytic_beta(10, 50, 100), 1 / 9, rel_tol=1e-15)
    kb = nambd.smoluchowski_rate(1.0, 50.0)
    kq = nambd.smoluchowski_rate(1.0, 100.0)
    binf = nambd.beta_infinity(1 / 9, kb, kq)
    assert math.isclose(nambd.association_rate(kb, binf), 40 * math.pi, rel_tol=1e-12)
    assert math.isclose(nambd.rate_with_potential(1.0, 50.0), kb, rel_tol=1e-8)
    dh = nambd.Potential.debye_huckel(-20.0, 0.1)
    assert nambd.rate_with_potential(1.0, 50.0, dh) > kb
    assert nambd.beta_with_potential(10, 50, 100, dh) > 1 / 9
    assert nambd.required_replications(0.111, 0.05, 0.99) == 262
    try:
        nambd.analytic_beta(60, 50, 100)
    except ValueError:
        pass
    else:
        raise AssertionError("ordering violation accepted")


def test_geometry_and_engine():
    g = nambd.Geometry(10, 50, 100, 64.0)
    assert (g.a, g.b, g.q, g.diffusion) == (10, 50, 100, 64.0)
    assert g == nambd.Geometry(10, 50, 100, 64.0)
    engine = nambd.Engine(g)
    first = engine.run(seed=3)
    again = engine.run(seed=3)
    assert (first.reacted, first.steps, first.model_time) == (again.reacted, again.steps, again.model_time)
    assert math.isclose(first.final_distance, 10 if first.reacted else 100, rel_tol=1e-9)
    beta, se = engine.estimate_beta(4000, seed=1)
    assert abs(beta - 1 / 9) < 4 * se, (beta, se)
    try:
        nambd.Engine(g, rng="xorshift")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown rng accepted")


def test_model():
    text = MODEL.read_text(encoding="utf-8")
    model = nambd.parse_model(text)
    geometry, potential = model.lower(2.0)
    assert (geometry.a, geometry.b, geometry.q, geometry.diffusion) == (10, 50, 100, 2.0)
    assert potential.energy(30.0) == 0.0
    assert nambd.parse_model(model.format()) == model
    try:
        nambd.parse_model(text.replace("coll!(∼, r_react)", "coll!(∼, r_react"))
    except nambd.ParseError as e:
        assert "22:" in str(e), str(e)
    else:
        raise AssertionError("broken model accepted")


def test_experiment():
    with tempfile.TemporaryDirectory() as tmp:
        spec = pathlib.Path(tmp) / "spec.toml"
        spec.write_text(
            'e = 0.05\nc = 0.95\nseed = 4\n'
            "[[grid]]\na = 10\nb = 50\nq = 100\nD = 64.0\n"
            '[[engines]]\nrng = "mersenne_twister"\ndetector = "event_triggered"\nstepsize = { fixed = 0.1 }\n'
        )
        one = nambd.run_experiment(str(spec), threads=1)
        two = nambd.run_experiment(str(spec), threads=2)
        assert one == two
        report = json.loads(one)
        assert report["all_valid"] is True
        assert report["rows"][0]["n"] >= 50


if __name__ == "__main__":
    for name, fn in list(globals().items()):
        if name.startswith("test_"):
            fn()
            print(f"{name}: ok")
