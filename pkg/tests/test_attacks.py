import numpy as np
import pytest

import robustval as rv

from conftest import random_dense_net


def test_zero_gradient_network_fgsm_noop():
    net = rv.Network((3,), [rv.Dense(np.zeros((2, 3)), np.zeros(2))], 2)
    x = np.array([0.2, 0.5, 0.8])
    r = rv.fgsm(net, x, 0, 0.1)
    assert np.array_equal(r.adversarial, x)
    assert not r.success
    assert r.perturbation_linf == 0.0


def test_fgsm_linear_margin_oracle():
    # two-class linear net: flip iff eps > margin / ||w1 - w2||_1
    rng = np.random.default_rng(83)
    for _ in range(10):
        w = rng.normal(size=(2, 4))
        b = rng.normal(size=2) * 0.1
        net = rv.Network((4,), [rv.Dense(w, b)], 2)
        x = rng.uniform(0.35, 0.65, 4)
        scores, label = net.forward(x)
        other = 1 - label
        margin = scores[label] - scores[other]
        denom = np.abs(w[label] - w[other]).sum()
        eps_crit = margin / denom
        if eps_crit > 0.3:  # clipping would interfere
            continue
        below = rv.fgsm(net, x, label, max(eps_crit * 0.9, 1e-6))
        above = rv.fgsm(net, x, label, eps_crit * 1.1)
        assert not below.success
        assert above.success


def test_fgsm_perturbation_never_exceeds_eps():
    rng = np.random.default_rng(89)
    for _ in range(10):
        net = random_dense_net(rng)
        x = rng.random(net.input_dim)
        _, label = net.forward(x)
        eps = rng.uniform(0.01, 0.3)
        r = rv.fgsm(net, x, label, eps)
        assert r.perturbation_linf <= eps + 1e-12
        assert r.adversarial.min() >= 0.0 and r.adversarial.max() <= 1.0


def test_fgsm_rejects_nonpositive_eps():
    net = rv.Network((2,), [rv.Dense(np.eye(2), np.zeros(2))], 2)
    with pytest.raises(ValueError):
        rv.fgsm(net, [0.5, 0.5], 0, 0.0)


def test_pgd_success_rate_at_least_fgsm(fixture_net, fixture_dataset):
    preds = np.argmax(fixture_net.forward_batch(fixture_dataset.inputs), axis=1)
    correct = np.nonzero(preds == fixture_dataset.labels)[0][:40]
    eps = 0.05
    fgsm_wins = pgd_wins = 0
    for i in correct:
        x, y = fixture_dataset.inputs[i], int(fixture_dataset.labels[i])
        fgsm_wins += rv.fgsm(fixture_net, x, y, eps).success
        pgd_wins += rv.pgd(fixture_net, x, y, eps, steps=10).success
    assert pgd_wins >= fgsm_wins


def test_pgd_single_step_equals_fgsm():
    rng = np.random.default_rng(97)
    net = random_dense_net(rng)
    x = rng.random(net.input_dim)
    _, label = net.forward(x)
    a = rv.fgsm(net, x, label, 0.1)
    b = rv.pgd(net, x, label, 0.1, steps=1)
    assert np.array_equal(a.adversarial, b.adversarial)


def test_min_pgd_requires_ascending_grid():
    net = rv.Network((2,), [rv.Dense(np.eye(2), np.zeros(2))], 2)
    with pytest.raises(ValueError):
        rv.min_pgd(net, [0.5, 0.5], 0, eps_grid=[0.1, 0.05])


def test_min_pgd_returns_smallest_successful_eps(fixture_net, fixture_dataset):
    preds = np.argmax(fixture_net.forward_batch(fixture_dataset.inputs), axis=1)
    i = np.nonzero(preds == fixture_dataset.labels)[0][0]
    x, y = fixture_dataset.inputs[i], int(fixture_dataset.labels[i])
    grid = list(np.linspace(0.002, 0.1, 25))
    r = rv.min_pgd(fixture_net, x, y, grid)
    if r.success:
        # no strictly smaller grid eps succeeds
        smaller = [e for e in grid if e < r.perturbation_linf - 1e-12]
        if smaller:
            assert not rv.pgd(fixture_net, x, y, smaller[-1]).success


def test_falsify_deterministic_and_finds_boundary_crossing():
    # scores = (x, 1 - x): boundary at 0.5
    net = rv.Network((1,), [rv.Dense(np.array([[1.0], [-1.0]]), np.array([0.0, 1.0]))], 2)
    c1 = rv.falsify(net, [0.52], 0.1, trials=500, seed=7)
    c2 = rv.falsify(net, [0.52], 0.1, trials=500, seed=7)
    assert c1 is not None and np.array_equal(c1, c2)
    assert rv.falsify(net, [0.9], 0.05, trials=500, seed=7) is None


def test_falsify_rejects_bad_trials():
    net = rv.Network((1,), [rv.Dense(np.array([[1.0], [-1.0]]), np.zeros(2))], 2)
    with pytest.raises(ValueError):
        rv.falsify(net, [0.5], 0.1, trials=0)


def test_successful_attack_forbids_certification(fixture_net, fixture_dataset):
    # a real adversarial point inside the delta-box must yield a non-robust verdict
    preds = np.argmax(fixture_net.forward_batch(fixture_dataset.inputs), axis=1)
    correct = np.nonzero(preds == fixture_dataset.labels)[0][:30]
    checked = 0
    for i in correct:
        x, y = fixture_dataset.inputs[i], int(fixture_dataset.labels[i])
        r = rv.fgsm(fixture_net, x, y, 0.1)
        if r.success:
            assert not rv.is_robust(fixture_net, x, r.perturbation_linf).robust
            checked += 1
    assert checked > 0
