import numpy as np
import pytest

from logbarrier import Classifier, Layer, Sample, train_toy


def central_diff(f, x, step=1e-5):
    """Independent gradient oracle: central finite differences, coordinatewise."""
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    for i in range(x.size):
        hi = x.copy()
        lo = x.copy()
        hi[i] += step
        lo[i] -= step
        grad[i] = (f(hi) - f(lo)) / (2.0 * step)
    return grad


def rel_err(approx, exact):
    denom = max(np.linalg.norm(exact), 1e-12)
    return np.linalg.norm(np.asarray(approx) - np.asarray(exact)) / denom


def make_blobs(centers, n_per, spread, seed):
    """Gaussian clusters clipped to the unit box, one class per center."""
    rng = np.random.default_rng(seed)
    samples = []
    for label, center in enumerate(centers):
        pts = center + spread * rng.standard_normal((n_per, len(center)))
        for p in np.clip(pts, 0.0, 1.0):
            samples.append(Sample(p, label))
    return samples


@pytest.fixture(scope="session")
def two_class_linear():
    # logit gap hyperplane: x0 - x1 + 0.1 = 0
    return Classifier(
        [Layer(np.array([[1.0, 0.0], [0.0, 1.0]]), np.array([0.1, 0.0]))]
    )


@pytest.fixture(scope="session")
def random_mlp():
    rng = np.random.default_rng(3)
    return Classifier(
        [
            Layer(rng.standard_normal((6, 4)), rng.standard_normal(6), "relu"),
            Layer(rng.standard_normal((3, 6)), rng.standard_normal(3)),
        ]
    )


@pytest.fixture(scope="session")
def blob_samples():
    return make_blobs(
        [np.full(5, 0.3), np.full(5, 0.7)], n_per=30, spread=0.05, seed=7
    )


@pytest.fixture(scope="session")
def blob_mlp(blob_samples):
    model = train_toy(blob_samples, hidden_sizes=(8,), epochs=400,
                      learning_rate=0.5, seed=1)
    return model
