import json
import math

import numpy as np
import pytest

import irrlab


def test_scenarios_and_critical_points():
    assert set(irrlab.scenarios()) >= {"bowl", "double_well"}
    kinds = sorted(k for k, *_ in irrlab.critical_points("double_well"))
    assert kinds == ["minimum", "minimum", "saddle"]


def test_drift_conditions():
    r = irrlab.verify_conditions("double_well", 200)
    assert r["max_orthogonality"] <= 1e-12
    assert r["max_divergence"] <= 1e-6


def test_simulate_shape_and_determinism():
    t, xy = irrlab.simulate("bowl", delta=10.0, t=1.0, dt=0.01, seed=3)
    assert xy.shape == (t.shape[0], 2)
    assert t[0] == 0.0 and math.isclose(t[-1], 1.0)
    _, again = irrlab.simulate("bowl", delta=10.0, t=1.0, dt=0.01, seed=3)
    np.testing.assert_array_equal(xy, again)


def test_bowl_coefficients_closed_form():
    edges, glue = irrlab.coefficients("bowl", beta=0.1, grid=64)
    assert len(edges) == 1 and glue == []
    e = edges[0]
    np.testing.assert_allclose(e["T"], 2 * math.pi, rtol=1e-6)
    np.testing.assert_allclose(e["diffusion_var"], 0.4 * e["z"], rtol=1e-6)


def test_graph_and_limit():
    g = json.loads(irrlab.graph_json("double_well"))
    assert len(g["vertices"]) == 4 and len(g["edges"]) == 3
    assert irrlab.limiting_variance("bowl", grid=64) == pytest.approx(0.04, rel=1e-2)


def test_validation_error():
    with pytest.raises(ValueError):
        irrlab.simulate("volcano")
    with pytest.raises(irrlab.ValidationError):
        irrlab.run_preset("nope")


def test_preset_manifest(tmp_path):
    m = json.loads(irrlab.run_preset("fig1_trajectories", seed=1, out_dir=str(tmp_path), workers=1))
    assert [f["status"] for f in m["files"]] == ["ok", "ok"]
    assert (tmp_path / "fig1_delta0.csv").read_text().startswith("t,x,y\n")
