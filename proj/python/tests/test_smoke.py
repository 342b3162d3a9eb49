import numpy as np
import pytest

import sativ

DESIGN = {"saturations": [0.25, 0.5, 0.75], "counts": [17, 17, 16]}


def noiseless_config():
    return {
        "design": DESIGN,
        "basis": "linear",
        "sim": {
            "G": 50,
            "n": 20,
            "kappa": [0, 0, 0, 0],
            "sigma": [0, 0, 0, 0],
            "seed": 3,
        },
    }


def test_simulate_columns():
    data = sativ.simulate(noiseless_config())
    assert set(data) >= {"group_id", "saturation", "z", "d", "y", "complier"}
    assert len(data["y"]) == 50 * 20
    assert np.all(data["d"] <= data["z"])


def test_simulate_seed_override():
    a = sativ.simulate(noiseless_config(), seed=1)
    b = sativ.simulate(noiseless_config(), seed=1)
    c = sativ.simulate(noiseless_config(), seed=2)
    assert np.array_equal(a["z"], b["z"])
    assert not np.array_equal(a["z"], c["z"])


def test_estimate_recovers_noiseless_truth():
    cfg = noiseless_config()
    data = sativ.simulate(cfg)
    joint = sativ.estimate(cfg, data, target="joint")
    np.testing.assert_allclose(joint["coefficients"], [0.5, -0.7, 0.2, 0.8], atol=1e-8)
    naive = sativ.estimate(cfg, data, target="naive")
    np.testing.assert_allclose(naive["coefficients"], [0.5, 0.2, -0.7, 0.8], atol=1e-8)


def test_effect_curve_direct_effect():
    cfg = noiseless_config()
    data = sativ.simulate(cfg)
    curve = sativ.effect_curve(cfg, data, "DE_treated", grid_points=11)
    assert len(curve["dbar"]) == 11
    np.testing.assert_allclose(curve["estimate"], 0.2 + 0.8 * curve["dbar"], atol=1e-8)


def test_unidentified_effect_raises():
    cfg = noiseless_config()
    data = sativ.simulate(cfg)
    with pytest.raises(sativ.ValidationError, match="not identified"):
        sativ.effect_curve(cfg, data, "IE1_never_taker")


def test_ior_and_design_checks():
    cfg = noiseless_config()
    data = sativ.simulate(cfg)
    ior = sativ.ior_test(data)
    assert ior["df"] == 2
    assert 0.0 <= ior["p_value"] <= 1.0
    diag = sativ.validate_design(cfg, n=[11, 21])
    assert not diag["singular_everywhere"]


def test_q_exact_block_layout():
    q0, q1, q = sativ.q_exact(noiseless_config(), 0.5, 21)
    np.testing.assert_allclose(q[:2, :2], q0 + q1)
    np.testing.assert_allclose(q[2:, 2:], q1)


def test_bad_data_raises_value_error():
    with pytest.raises(ValueError):
        sativ.ior_test({"group_id": [0, 0], "saturation": [0.5, 0.5], "z": [0, 0], "d": [1, 0], "y": [0, 0]})


def test_montecarlo_report():
    cfg = noiseless_config()
    report = sativ.montecarlo(cfg, reps=3, oracle_draws=100000)
    names = [row["name"] for row in report["rows"]]
    assert "gamma_c" in names and "naive_gamma" in names
