import json
import math

import pytest

ssrecon_lab = pytest.importorskip("ssrecon_lab")
np = pytest.importorskip("numpy")


def test_basis_is_orthonormal():
    u = ssrecon_lab.random_orthonormal_basis(50, 7, seed=3)
    gram = u.T @ u
    assert np.abs(gram - np.eye(7)).max() < 1e-10


def test_optimal_risk_and_estimator():
    model = ssrecon_lab.SubspaceModel(n=100, d=10, sigma_z=0.1, sigma_e=0.1, seed=0)
    assert math.isclose(ssrecon_lab.optimal_risk(model), 1.0 / 1001, rel_tol=1e-12)
    w_star = ssrecon_lab.optimal_estimator(model)
    assert math.isclose(
        ssrecon_lab.risk_closed_form(w_star, model), 1.0 / 1001, rel_tol=1e-9
    )
    grad = ssrecon_lab.risk_gradient(w_star, model)
    assert np.abs(grad).max() < 1e-9


def test_dataset_shapes_and_prefix_nesting():
    model = ssrecon_lab.SubspaceModel(n=20, d=4, sigma_z=0.1, sigma_e=0.2, seed=1)
    small = ssrecon_lab.make_dataset(model, 10, seed=7)
    large = ssrecon_lab.make_dataset(model, 40, seed=7)
    assert small["y"].shape == (20, 10)
    assert np.array_equal(small["y"], large["y"][:, :10])
    assert np.array_equal(small["x"], large["x"][:, :10])


def test_theorem1_bound_monotone():
    model = ssrecon_lab.SubspaceModel(n=100, d=10, sigma_z=0.1, sigma_e=0.1, seed=0)
    bounds = [ssrecon_lab.theorem1_bound(model, n) for n in (3, 10, 100, 1000)]
    assert all(a > b for a, b in zip(bounds, bounds[1:]))
    assert ssrecon_lab.lemma1_stepsize(1, model) > 0


def test_mask_split_counts_and_weights():
    split = ssrecon_lab.build_split(1000, nu=0.08, p=0.25, mu=0.33, seed=5)
    assert sum(split["m_input"]) == 250
    assert sum(split["m_tilde"]) == 330
    q = split["q"]
    non_center = [
        j
        for j in range(1000)
        if not split["center_begin"] <= j < split["center_begin"] + split["center_count"]
    ]
    assert all(split["weights"][j] == 1.0 / math.sqrt(q) for j in non_center)


def test_prop2_exact_residual():
    rng = np.random.default_rng(0)
    a = rng.normal(size=64) + 1j * rng.normal(size=64)
    x = rng.normal(size=64) + 1j * rng.normal(size=64)
    prob = np.full(64, 0.3)
    prob[28:36] = 1.0
    assert ssrecon_lab.prop2_exact_check(a, x, prob) < 1e-10


def test_training_smoke():
    model = ssrecon_lab.SubspaceModel(n=30, d=4, sigma_z=0.1, sigma_e=0.1, seed=2)
    result = ssrecon_lab.train_denoiser_gd(model, 200, seed=3)
    assert result["risk"] >= ssrecon_lab.optimal_risk(model)
    assert result["risk"] < 0.1  # far below the zero-estimator risk of 1


def test_sweep_roundtrip_and_determinism():
    config = json.dumps(
        {
            "experiment": "denoise-gd",
            "n": 30,
            "d": 4,
            "sigma_z": 0.1,
            "sigma_e": [0.0],
            "train_sizes": [10, 30, 100],
            "trials": 2,
            "seed": 1,
        }
    )
    csv_once = ssrecon_lab.run_sweep(config)
    csv_twice = ssrecon_lab.run_sweep(config)
    assert csv_once == csv_twice
    header = csv_once.splitlines()[0]
    assert header == "experiment,N,trial,param,risk,optimal_risk,excess,bound,wall_time_s"
    fit = ssrecon_lab.fit_rate(csv_once, 0.0)
    assert fit["slope"] < 0
