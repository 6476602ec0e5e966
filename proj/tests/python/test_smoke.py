import json
import math

import numpy as np
import pytest

import fimlab


def test_rng_replays():
    a = fimlab.RngStream(7, 1)
    b = fimlab.RngStream(7, 1)
    assert [a.uniform() for _ in range(5)] == [b.uniform() for _ in range(5)]
    assert a.substream("x").normal() == b.substream("x").normal()


def test_poisson_mle_and_information():
    model = fimlab.exp_family_poisson()
    rng = fimlab.RngStream(11, 0)
    theta = np.array([2.0])
    data = model.sample(theta, 400, rng)
    fit = fimlab.fit_mle(model, data, rng.substream("fit"))
    assert fit.converged
    xbar = data.matrix().mean()
    assert fit.theta[0] == pytest.approx(xbar, rel=1e-6)
    # Poisson: expected information per observation is 1/theta.
    fim = model.expected_fim(fit.theta, data.n) / data.n
    assert fim[0, 0] == pytest.approx(1.0 / fit.theta[0], rel=1e-9)
    obs = fimlab.observed_fim(model, data, fit.theta)
    assert obs[0, 0] == pytest.approx(fim[0, 0], rel=1e-6)


def test_mixture_density_derivatives():
    model = fimlab.mixture_location()
    rng = fimlab.RngStream(3, 0)
    theta = np.array([0.5, -1.0, 1.0])
    data = model.sample(theta, 50, rng)
    g = model.grad(theta, data)
    h = model.hessian(theta, data)
    assert g.shape == (3,)
    assert h.shape == (3, 3)
    assert np.allclose(h, h.T)


def test_segmented_uniform_moments():
    d = fimlab.PerturbationDist.segmented_uniform()
    assert d.variance == pytest.approx(1.0)
    assert d.inv_sq_moment == pytest.approx(100.0 / 61.0)
    lo = fimlab.PerturbationDist.segmented_uniform_lo()
    hi = fimlab.PerturbationDist.segmented_uniform_hi()
    assert lo == pytest.approx((19.0 - 3.0 * math.sqrt(13.0)) / 20.0)
    assert hi == pytest.approx((19.0 + 3.0 * math.sqrt(13.0)) / 20.0)


def test_first_step_mse_gap_value():
    theta0 = np.array([0.3, 0.3])
    theta_star = np.zeros(2)
    grad = np.array([0.3, 0.3])
    lhs = fimlab.theorem_a1_lhs(grad, theta0, theta_star, 1.0, 0.0011, 0.01252, 0.1, 0.1)
    assert lhs < 0.0
    assert lhs == pytest.approx(-0.0114, abs=5e-4)


def test_sp_hessian_quadratic_identity():
    a = np.array([[2.0, 0.3], [0.3, 1.5]])

    def grad(t):
        return a @ t

    theta = np.array([0.4, -0.2])
    delta = np.array([1.0, -1.0])
    est = fimlab.sp_hessian_estimate(grad, theta, 1e-3, delta)
    # Estimate = H + psi(H) exactly for quadratic losses.
    assert np.allclose(est - fimlab.psi(a, delta), a, atol=1e-8)


def test_fim_feedback_beats_basic_on_gaussian():
    cov = np.array([[1.0, 0.4], [0.4, 2.0]])
    model = fimlab.gaussian_mean(cov)
    theta = np.zeros(2)
    opts = fimlab.McFimOptions()
    opts.datasets = 1000
    opts.inner_reps = 2
    rng = fimlab.RngStream(99, 5)
    basic = fimlab.fim_basic(model, theta, 30, opts, rng)
    fb = fimlab.fim_feedback(model, theta, 30, opts, rng)
    ref = model.expected_fim(theta, 30)
    assert fimlab.relative_error(fb.value, ref) < fimlab.relative_error(basic.value, ref)


def test_experiment_listing():
    infos = fimlab.list_experiments()
    names = {e["name"] for e in infos}
    assert len(names) == 10
    assert "spsa_table_A2" in names
    assert "mixture_table_3_1" in names
    for e in infos:
        assert e["description"]
        assert any(k["key"] == "reps" for k in e["overrides"])


def test_run_experiment_from_json():
    cfg = json.dumps(
        {"experiment": "spsa_table_A2", "seed": 7, "overrides": {"reps": 50}}
    )
    tables = fimlab.run_experiment(cfg)
    assert len(tables) == 1
    t = tables[0]
    assert t["columns"][0] == "iterations"
    assert len(t["rows"]) == 4
    assert all(math.isfinite(v) for row in t["rows"] for v in row)
    assert t["metadata"]["seed"] == "7"
    # Same config renders to the same bytes.
    assert fimlab.render_experiment(cfg, "csv") == fimlab.render_experiment(cfg, "csv")
    assert fimlab.render_experiment(cfg, "md").startswith("##")


def test_run_experiment_rejects_unknown_name():
    with pytest.raises(fimlab.FimlabError):
        fimlab.run_experiment(json.dumps({"experiment": "nope"}))
