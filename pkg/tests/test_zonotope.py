import itertools

import numpy as np
import pytest

import robustval as rv
from robustval.zonotope import propagate_interval, propagate_zonotope, rebox

from conftest import random_dense_net


def sample_points(z: rv.Zonotope, n: int, rng) -> np.ndarray:
    eps = rng.uniform(-1.0, 1.0, (n, z.num_generators))
    return z.center + eps @ z.generators.T


# --- input_region ---

def test_input_region_degenerate():
    z = rv.input_region(np.array([0.3, 0.7]), 0.0)
    assert np.allclose(z.center, [0.3, 0.7])
    assert np.allclose(z.generators, 0.0)


def test_input_region_boundary_clipping():
    z = rv.input_region(np.array([0.05]), 0.1)
    lo, hi = z.bounds()
    assert np.isclose(lo[0], 0.0) and np.isclose(hi[0], 0.15)
    assert np.isclose(z.center[0], 0.075)
    assert np.isclose(np.abs(z.generators).sum(), 0.075)


def test_input_region_interior_box():
    z = rv.input_region(np.array([0.5, 0.5]), 0.1)
    assert z.num_generators == 2
    lo, hi = z.bounds()
    assert np.allclose(lo, 0.4) and np.allclose(hi, 0.6)


# --- affine ---

def test_affine_identity():
    z = rv.input_region(np.array([0.5, 0.5]), 0.1)
    z2 = rv.affine_transform(z, np.eye(2), np.zeros(2))
    assert np.allclose(z2.center, z.center)
    assert np.allclose(z2.generators, z.generators)


def test_affine_hand_example():
    z = rv.Zonotope(np.zeros(2), np.eye(2))
    z2 = rv.affine_transform(z, np.array([[1.0, 1.0]]), np.zeros(1))
    assert np.allclose(z2.center, 0.0)
    assert np.allclose(z2.generators, [[1.0, 1.0]])
    lo, hi = z2.bounds()
    assert np.isclose(lo[0], -2.0) and np.isclose(hi[0], 2.0)


def test_affine_interval_oracle():
    # interval arithmetic on a seeded 3x3 affine map
    rng = np.random.default_rng(17)
    w, b = rng.normal(size=(3, 3)), rng.normal(size=3)
    lo_in, hi_in = rng.random(3) * 0.4, None
    hi_in = lo_in + rng.random(3) * 0.4
    mid, rad = (lo_in + hi_in) / 2, (hi_in - lo_in) / 2
    z = rv.Zonotope(mid, np.diag(rad))
    z2 = rv.affine_transform(z, w, b)
    lo, hi = z2.bounds()
    # hand interval arithmetic: sum of per-entry interval products
    expect_lo = b + np.sum(np.minimum(w * lo_in, w * hi_in), axis=1)
    expect_hi = b + np.sum(np.maximum(w * lo_in, w * hi_in), axis=1)
    assert np.allclose(lo, expect_lo, atol=1e-12)
    assert np.allclose(hi, expect_hi, atol=1e-12)


# --- relu ---

def test_relu_stable_positive_unchanged():
    z = rv.Zonotope(np.array([3.5]), np.array([[1.0, 0.5]]))  # bounds [2, 5]
    z2 = rv.relu_transform(z)
    assert np.allclose(z2.center, z.center)
    assert np.allclose(z2.generators, z.generators)


def test_relu_stable_negative_zeroed():
    z = rv.Zonotope(np.array([-3.5]), np.array([[1.0, 0.5]]))  # bounds [-5, -2]
    z2 = rv.relu_transform(z)
    assert np.allclose(z2.center, 0.0)
    assert np.allclose(z2.generators, 0.0)


def test_relu_crossing_hand_values():
    z = rv.Zonotope(np.array([0.0]), np.array([[1.0]]))  # bounds [-1, 1]
    z2 = rv.relu_transform(z)
    assert np.isclose(z2.center[0], 0.25)
    assert np.allclose(z2.generators, [[0.5, 0.25]])
    lo, hi = z2.bounds()
    assert np.isclose(lo[0], -0.5) and np.isclose(hi[0], 1.0)


# --- s-shaped ---

def test_sshape_degenerate_point():
    z = rv.Zonotope(np.array([0.0]), np.zeros((1, 0)))
    z2 = rv.sshape_transform(z, "sigmoid")
    assert np.isclose(z2.center[0], 0.5)
    assert z2.num_generators == 0


def test_tanh_hand_values():
    z = rv.Zonotope(np.array([0.0]), np.array([[1.0]]))  # bounds [-1, 1]
    z2 = rv.sshape_transform(z, "tanh")
    lam = 1.0 - np.tanh(1.0) ** 2
    mu2 = (2 * np.tanh(1.0) - 2 * lam) / 2
    assert np.isclose(lam, 0.41997, atol=1e-5)
    assert np.isclose(mu2, 0.34162, atol=1e-5)
    assert np.isclose(z2.center[0], 0.0, atol=1e-12)
    assert np.allclose(sorted(np.abs(z2.generators[0])), sorted([lam, mu2]))


@pytest.mark.parametrize("fn", ["sigmoid", "tanh"])
def test_sshape_monte_carlo_containment(fn):
    g = {"sigmoid": lambda v: 1 / (1 + np.exp(-v)), "tanh": np.tanh}[fn]
    rng = np.random.default_rng(23)
    for _ in range(20):
        l = rng.uniform(-4, 3)
        u = l + rng.uniform(0, 4)
        z = rv.Zonotope(np.array([(l + u) / 2]), np.array([[(u - l) / 2]]))
        z2 = rv.sshape_transform(z, fn)
        lo, hi = z2.bounds()
        v = rng.uniform(l, u, 500)
        out = g(v)
        assert np.all(out >= lo[0] - 1e-12) and np.all(out <= hi[0] + 1e-12)


# --- maxpool ---

def pool_zonotope(cells_lo, cells_hi):
    mid = (np.asarray(cells_lo) + np.asarray(cells_hi)) / 2.0
    rad = (np.asarray(cells_hi) - np.asarray(cells_lo)) / 2.0
    return rv.Zonotope(mid, np.diag(rad))


def test_maxpool_dominant_cell_passes_through():
    z = pool_zonotope([3, 0, 0, 0], [4, 1, 1, 1])
    idx = np.array([[0, 1, 2, 3]])
    z2 = rv.maxpool_transform(z, idx)
    assert np.isclose(z2.center[0], 3.5)
    assert np.allclose(z2.generators[0][:4], z.generators[0])


def test_maxpool_overlap_falls_back_to_interval():
    z = pool_zonotope([0, 1], [2, 3])
    z2 = rv.maxpool_transform(z, np.array([[0, 1]]))
    assert np.isclose(z2.center[0], 2.0)
    lo, hi = z2.bounds()
    assert np.isclose(lo[0], 1.0) and np.isclose(hi[0], 3.0)


def test_maxpool_constant_pool_is_point():
    z = rv.Zonotope(np.full(4, 0.7), np.zeros((4, 1)))
    z2 = rv.maxpool_transform(z, np.array([[0, 1, 2, 3]]))
    assert np.isclose(z2.center[0], 0.7)
    lo, hi = z2.bounds()
    assert np.isclose(lo[0], 0.7) and np.isclose(hi[0], 0.7)


# --- dominance ---

def test_dominance_identical_rows_zero():
    z = rv.Zonotope(np.array([1.0, 1.0]), np.array([[0.5], [0.5]]))
    assert rv.dominance_lower_bound(z, 0, 1) == 0.0


def test_dominance_correlation_cancels():
    z = rv.Zonotope(np.array([1.0, 0.0]), np.array([[0.5], [0.5]]))
    assert np.isclose(rv.dominance_lower_bound(z, 0, 1), 1.0)


def test_dominance_anticorrelated():
    z = rv.Zonotope(np.array([1.0, 0.0]), np.array([[0.5], [-0.5]]))
    assert np.isclose(rv.dominance_lower_bound(z, 0, 1), 0.0)


def test_dominance_same_class_rejected():
    z = rv.Zonotope(np.zeros(2), np.zeros((2, 1)))
    with pytest.raises(ValueError):
        rv.dominance_lower_bound(z, 1, 1)


# --- is_robust ---

def one_layer_margin_net():
    # scores = (x, 1 - x)
    return rv.Network((1,), [rv.Dense(np.array([[1.0], [-1.0]]), np.array([0.0, 1.0]))], 2)


def test_is_robust_delta_zero_always_robust():
    rng = np.random.default_rng(31)
    net = random_dense_net(rng)
    x = rng.random(net.input_dim)
    assert rv.is_robust(net, x, 0.0).robust


def test_is_robust_hand_example_robust():
    net = one_layer_margin_net()
    v = rv.is_robust(net, [0.9], 0.3)
    assert v.robust
    assert np.isclose(v.margins[0], 0.2)


def test_is_robust_hand_example_unknown():
    net = one_layer_margin_net()
    assert not rv.is_robust(net, [0.55], 0.3).robust


@pytest.mark.parametrize("domain", ["zonotope", "interval"])
def test_is_robust_domains(domain):
    net = one_layer_margin_net()
    assert rv.is_robust(net, [0.9], 0.3, domain).robust


# --- whole-network properties ---

def test_transformer_containment_through_network():
    rng = np.random.default_rng(37)
    for trial in range(5):
        net = random_dense_net(rng, max_hidden=2, max_width=12)
        x = rng.random(net.input_dim)
        delta = rng.uniform(0.01, 0.2)
        z = rv.input_region(x, delta)
        zo = propagate_zonotope(net, z)
        lo, hi = zo.bounds()
        pts = sample_points(z, 2000, rng)
        scores = net.forward_batch(pts)
        assert np.all(scores >= lo - 1e-9)
        assert np.all(scores <= hi + 1e-9)


def test_affine_exactness_vertex_enumeration():
    # purely affine net: zonotope bounds equal exhaustive vertex bounds
    rng = np.random.default_rng(41)
    d = 6
    w1, b1 = rng.normal(size=(5, d)), rng.normal(size=5)
    w2, b2 = rng.normal(size=(3, 5)), rng.normal(size=3)
    net = rv.Network((d,), [rv.Dense(w1, b1), rv.Dense(w2, b2)], 3)
    x = rng.uniform(0.3, 0.7, d)
    delta = 0.1
    z = propagate_zonotope(net, rv.input_region(x, delta))
    lo, hi = z.bounds()
    vertices = np.array([
        [x[i] + s * delta for i, s in enumerate(signs)]
        for signs in itertools.product([-1, 1], repeat=d)
    ])
    scores = net.forward_batch(vertices)
    assert np.allclose(lo, scores.min(axis=0), atol=1e-9)
    assert np.allclose(hi, scores.max(axis=0), atol=1e-9)


def test_interval_monotone_region_growth():
    rng = np.random.default_rng(43)
    net = random_dense_net(rng)
    x = rng.random(net.input_dim)
    prev_lo, prev_hi = None, None
    for delta in [0.01, 0.05, 0.1, 0.2]:
        iv = propagate_interval(net, np.clip(x - delta, 0, 1), np.clip(x + delta, 0, 1))
        if prev_lo is not None:
            assert np.all(iv.lower <= prev_lo + 1e-12)
            assert np.all(iv.upper >= prev_hi - 1e-12)
        prev_lo, prev_hi = iv.lower, iv.upper


def test_interval_agrees_with_reboxed_zonotope():
    rng = np.random.default_rng(47)
    for _ in range(5):
        net = random_dense_net(rng, max_hidden=2, max_width=10)
        x = rng.random(net.input_dim)
        delta = 0.05
        iv = propagate_interval(net, np.clip(x - delta, 0, 1), np.clip(x + delta, 0, 1))
        zr = propagate_zonotope(net, rv.input_region(x, delta), rebox_each_layer=True)
        lo, hi = zr.bounds()
        assert np.allclose(iv.lower, lo, atol=1e-9)
        assert np.allclose(iv.upper, hi, atol=1e-9)


def test_soundness_falsification_quick():
    rng = np.random.default_rng(53)
    for _ in range(10):
        net = random_dense_net(rng, max_hidden=2, max_width=16)
        x = rng.random(net.input_dim)
        res = rv.approximate_radius(net, x, rv.SearchParams(up=0.128, e=0.002))
        if res.radius > 0:
            assert rv.falsify(net, x, res.radius, trials=2000, seed=1) is None


def test_rebox_preserves_bounds():
    z = rv.Zonotope(np.array([1.0, -1.0]), np.array([[0.5, 0.2], [-0.1, 0.3]]))
    z2 = rebox(z)
    l1, u1 = z.bounds()
    l2, u2 = z2.bounds()
    assert np.allclose(l1, l2) and np.allclose(u1, u2)
