import numpy as np
import pytest

import robustval as rv

FIXTURE_PARAMS = rv.SearchParams()


@pytest.fixture(scope="session")
def fixture_dataset():
    return rv.gen_synthetic(classes=4, dims=8, per_class=250, spread=0.12, seed=42)


@pytest.fixture(scope="session")
def fixture_net(fixture_dataset):
    net, stats = rv.train_sgd(fixture_dataset, "2x24,4", epochs=40,
                              learning_rate=0.2, seed=7)
    assert stats["test_accuracy"] >= 0.90
    return net


@pytest.fixture(scope="session")
def fixture_category_radii(fixture_net, fixture_dataset):
    """Radii per input category, 60 inputs each (or fewer on shortfall)."""
    cats = rv.categorize(fixture_net, fixture_dataset, n_per_category=60, seed=0)
    return {
        c: [r.radius for r in rv.batch_radii(fixture_net, inputs, FIXTURE_PARAMS)]
        for c, inputs in cats.items()
    }


@pytest.fixture(scope="session")
def fixture_valid_radii(fixture_net, fixture_dataset):
    """Radii of the first 200 correctly classified inputs, in dataset order."""
    preds = np.argmax(fixture_net.forward_batch(fixture_dataset.inputs), axis=1)
    correct = np.nonzero(preds == fixture_dataset.labels)[0][:200]
    inputs = [fixture_dataset.inputs[i] for i in correct]
    return [r.radius for r in rv.batch_radii(fixture_net, inputs, FIXTURE_PARAMS)]


@pytest.fixture(scope="session")
def fixture_fgsm_radii(fixture_net, fixture_dataset):
    """Radii of 50 successful FGSM(0.05) adversarials."""
    preds = np.argmax(fixture_net.forward_batch(fixture_dataset.inputs), axis=1)
    correct = np.nonzero(preds == fixture_dataset.labels)[0]
    adv = []
    for i in correct:
        r = rv.fgsm(fixture_net, fixture_dataset.inputs[i],
                    int(fixture_dataset.labels[i]), 0.05)
        if r.success:
            adv.append(r.adversarial)
        if len(adv) >= 50:
            break
    assert len(adv) == 50
    return [r.radius for r in rv.batch_radii(fixture_net, adv, FIXTURE_PARAMS)]


def random_dense_net(rng: np.random.Generator, input_dim=None, activation=None,
                     max_hidden=3, max_width=32, label_count=None) -> rv.Network:
    """Seeded random dense network for falsification and gradient tests."""
    input_dim = input_dim or int(rng.integers(2, 10))
    label_count = label_count or int(rng.integers(2, 5))
    activation = activation or str(rng.choice(["relu", "sigmoid", "tanh"]))
    layers = []
    prev = input_dim
    for _ in range(int(rng.integers(1, max_hidden + 1))):
        width = int(rng.integers(2, max_width + 1))
        layers.append(rv.Dense(rng.normal(0, 1.0 / np.sqrt(prev), (width, prev)),
                               rng.normal(0, 0.1, width)))
        layers.append(rv.Activation(activation))
        prev = width
    layers.append(rv.Dense(rng.normal(0, 1.0 / np.sqrt(prev), (label_count, prev)),
                           rng.normal(0, 0.1, label_count)))
    return rv.Network((input_dim,), layers, label_count)
