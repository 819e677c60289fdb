"""Smoke tests for the python bindings: import, core operations, and a tiny
training run. Plain asserts so the file runs with or without pytest."""

import math
import os
import tempfile

import numpy as np

import ladg


def test_knn_tie_break():
    eye = np.eye(3)
    nbrs = ladg.knn_neighbors(eye, 1)
    assert nbrs == [[1], [0], [0]]


def test_propagation_matches_iterative():
    rng = np.random.default_rng(7)
    g = rng.normal(size=(20, 4))
    domains = [i % 3 for i in range(20)]
    r_closed, p_closed = ladg.label_propagation(g, domains, k=4, alpha=0.8)
    r_iter, p_iter, steps = ladg.label_propagation_iterative(
        g, domains, k=4, alpha=0.8, max_steps=5000, tol=1e-10
    )
    assert np.abs(r_closed - r_iter).max() <= 1e-6
    assert steps > 1
    assert np.allclose(p_closed.sum(axis=1), 1.0, atol=1e-9)


def test_coding_rate_rank_one():
    h = np.zeros((6, 4))
    h[:, 2] = 3.0  # rank one; row normalization removes the scale
    expected = 0.5 * math.log(1.0 + 4.0 / 0.25)
    assert abs(ladg.coding_rate(h, 0.5) - expected) <= 1e-9


def test_avg_knn_degree_identical_vectors():
    h = np.zeros((5, 4))
    h[:, 0] = 1.0
    assert ladg.avg_knn_degree(h, 3) == 3.0


def test_prior_loss_bound():
    rng = np.random.default_rng(3)
    probs = rng.dirichlet(np.ones(4), size=16)
    q = [0.25, 0.25, 0.25, 0.25]
    assert ladg.prior_matching_loss(probs, q) >= math.log(4.0) - 1e-12
    at_prior = np.tile(q, (16, 1))
    assert abs(ladg.prior_matching_loss(at_prior, q) - math.log(4.0)) <= 1e-9


def test_generator_determinism_and_shapes():
    a = ladg.gen_rotated_moons(n_per_domain=32, seed=9)
    b = ladg.gen_rotated_moons(n_per_domain=32, seed=9)
    assert np.array_equal(a["inputs"], b["inputs"])
    assert a["inputs"].shape[1] == 2
    assert a["n_classes"] == 2
    assert set(a["splits"]) == {"train", "val", "ood"}

    g = ladg.gen_shifted_gaussians(n_per_domain=16, n_classes=3, n_domains=2, seed=4)
    assert g["inputs"].shape == (2 * 16 + 2 * 4 + 16, max(4, 3))


def test_mixing_entropy_bounds():
    stacked = np.full((12, 2), 0.5) + 1e-9 * np.arange(24).reshape(12, 2)
    domains = [i % 3 for i in range(12)]
    ent = ladg.mixing_entropy(stacked, domains, k=11)
    assert abs(ent - math.log(3.0)) <= 0.02


def test_training_round_trip():
    ds = ladg.gen_shifted_gaussians(
        n_per_domain=40, n_classes=2, n_domains=2, class_sep=5.0, seed=2
    )
    inputs, labels, domains, splits = (
        ds["inputs"],
        ds["labels"],
        ds["domains"],
        ds["splits"],
    )
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "data.csv")
        with open(path, "w") as f:
            p = inputs.shape[1]
            f.write(",".join(f"f{j}" for j in range(p)) + ",label,domain,split\n")
            for i in range(inputs.shape[0]):
                row = ",".join(f"{float(v):.17g}" for v in inputs[i])
                f.write(f"{row},{int(labels[i])},{domains[i]},{splits[i]}\n")
        summary = ladg.train(
            path,
            {
                "method": "ladg",
                "pretrain_steps": 15,
                "total_steps": 30,
                "log_every": 5,
                "samples_per_domain": 8,
                "k_nn": 3,
                "feat_hidden": 12,
                "feat_dim": 6,
                "disc_hidden": 12,
                "disc_dim": 6,
                "seed": 1,
            },
        )
    assert summary["final_step"] == 30
    assert summary["loss_task"] >= 0.0
    assert len(summary["coding_rate_series"]) == 6
    assert summary["train_metric"] >= 0.5  # separable classes at sep=5


def test_error_mapping():
    try:
        ladg.knn_neighbors(np.zeros((3, 2)), 1)
    except ValueError:
        pass
    else:
        raise AssertionError("zero-norm rows should raise ValueError")


def main():
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_")]
    for test in tests:
        test()
        print(f"ok {test.__name__}")
    print(f"{len(tests)} python smoke tests passed")


if __name__ == "__main__":
    main()
