import numpy as np
import pytest

from logbarrier import Classifier, Layer, Sample, accuracy, load_model, save_model, train_toy
from logbarrier.errors import InvalidInput, InvalidModel, ParseError, TrainingDiverged

from conftest import central_diff, make_blobs, rel_err


def identity_model(bias=(0.0, 0.0), temperature=1.0):
    return Classifier(
        [Layer(np.eye(2), np.asarray(bias, dtype=float))], temperature
    )


def test_forward_hand_softmax():
    model = identity_model(bias=(1.0, 0.0))
    logits, probs = model.forward(np.zeros(2))
    assert np.allclose(logits, [1.0, 0.0])
    e = np.exp(1.0)
    assert probs[0] == pytest.approx(e / (1.0 + e), abs=1e-12)
    assert probs[1] == pytest.approx(1.0 / (1.0 + e), abs=1e-12)


def test_probs_normalized(random_mlp):
    rng = np.random.default_rng(0)
    for _ in range(20):
        _, probs = random_mlp.forward(rng.uniform(0, 1, 4))
        assert probs.sum() == pytest.approx(1.0, abs=1e-9)
        assert np.all(probs > 0.0) and np.all(probs < 1.0)


def test_temperature_sharpens_and_keeps_argmax():
    # larger temperature saturates probabilities toward one-hot without
    # moving the decision boundary
    cold = identity_model(bias=(1.0, 0.0), temperature=1.0)
    hot = identity_model(bias=(1.0, 0.0), temperature=2.0)
    x = np.zeros(2)
    _, p_cold = cold.forward(x)
    _, p_hot = hot.forward(x)
    assert np.argmax(p_cold) == np.argmax(p_hot)
    assert p_hot.max() > p_cold.max()


def test_predict_argmax_and_ties():
    model = Classifier([Layer(np.eye(3), np.array([0.2, 0.5, 0.3]))])
    assert model.predict(np.zeros(3)) == 1
    tie = Classifier([Layer(np.eye(2), np.array([0.5, 0.5]))])
    assert tie.predict(np.zeros(2)) == 0
    lin = Classifier([Layer(np.array([[1.0, -1.0], [0.0, 0.0]]), np.zeros(2))])
    assert lin.predict(np.array([0.9, 0.1])) == 0


def test_forward_rejects_bad_shape(random_mlp):
    with pytest.raises(InvalidInput):
        random_mlp.forward(np.zeros(7))


def test_is_misclassified():
    model = Classifier([Layer(np.eye(3), np.array([0.2, 0.5, 0.3]))])
    x = np.zeros(3)
    assert not model.is_misclassified(x, 1, 1)
    assert model.is_misclassified(x, 0, 1)
    four = Classifier([Layer(np.eye(4), np.array([0.4, 0.3, 0.2, 0.1]))])
    assert four.is_misclassified(np.zeros(4), 2, 2)
    assert not four.is_misclassified(np.zeros(4), 1, 2)
    with pytest.raises(InvalidInput):
        model.is_misclassified(x, 0, 3)


def test_predict_consistent_with_misclassified(random_mlp):
    rng = np.random.default_rng(1)
    for _ in range(50):
        x = rng.uniform(0, 1, 4)
        assert not random_mlp.is_misclassified(x, random_mlp.predict(x), 1)


def test_gap_negative_when_correct(two_class_linear):
    x = np.array([0.9, 0.1])
    c = two_class_linear.predict(x)
    gaps, _ = two_class_linear.gap_and_gradient(x, c, 1)
    assert gaps[0] < 0.0


def test_gap_gradient_matches_finite_differences(random_mlp):
    rng = np.random.default_rng(2)
    checked = 0
    while checked < 100:
        x = rng.uniform(0.05, 0.95, 4)
        c = int(rng.integers(0, 3))
        gaps, grads = random_mlp.gap_and_gradient(x, c, 1)
        _, probs = random_mlp.forward(x)
        j = random_mlp.ranked_rivals(probs, c, 1)[0]

        def fixed_gap(v):
            _, p = random_mlp.forward(v)
            return p[j] - p[c]

        fd = central_diff(fixed_gap, x)
        if np.linalg.norm(fd) < 1e-8:
            continue
        assert rel_err(grads[0], fd) < 1e-5
        checked += 1


def test_two_class_gap_gradient_closed_form():
    w = np.array([[1.0, -0.5], [0.3, 0.8]])
    for temp in (1.0, 3.0):
        model = Classifier([Layer(w, np.array([0.1, -0.2]))], temp)
        x = np.array([0.4, 0.6])
        _, probs = model.forward(x)
        gaps, grads = model.gap_and_gradient(x, 0, 1)
        # d(p1 - p0)/dx = 2 T p0 p1 (w1 - w0) for a 2-class softmax
        expected = 2.0 * temp * probs[0] * probs[1] * (w[1] - w[0])
        assert np.allclose(grads[0], expected, rtol=1e-10)
        assert gaps[0] == pytest.approx(probs[1] - probs[0])


def test_topk_gaps_ranked(random_mlp):
    x = np.full(4, 0.5)
    c = random_mlp.predict(x)
    gaps, grads = random_mlp.gap_and_gradient(x, c, 2)
    assert len(gaps) == 2 and len(grads) == 2
    assert gaps[0] >= gaps[1]


def test_loss_gradient_closed_form():
    w = np.array([[0.5, 1.5], [-1.0, 0.2]])
    for temp in (1.0, 2.5):
        model = Classifier([Layer(w, np.zeros(2))], temp)
        x = np.array([0.3, 0.7])
        _, probs = model.forward(x)
        onehot = np.array([1.0, 0.0])
        expected = temp * (probs - onehot) @ w
        assert np.allclose(model.loss_gradient(x, 0), expected, rtol=1e-10)


def test_loss_gradient_matches_finite_differences(random_mlp):
    rng = np.random.default_rng(3)
    checked = 0
    while checked < 100:
        x = rng.uniform(0.05, 0.95, 4)
        c = int(rng.integers(0, 3))
        fd = central_diff(lambda v: random_mlp.cross_entropy(v, c), x)
        if np.linalg.norm(fd) < 1e-8:
            continue
        assert rel_err(random_mlp.loss_gradient(x, c), fd) < 1e-5
        checked += 1


def test_loss_gradient_saturates():
    model = Classifier([Layer(np.array([[50.0], [-50.0]]), np.zeros(2))])
    g = model.loss_gradient(np.array([1.0]), 0)
    assert np.linalg.norm(g) < 1e-12


def test_save_load_round_trip(tmp_path, random_mlp):
    path = tmp_path / "model.json"
    save_model(random_mlp, path)
    loaded = load_model(path)
    rng = np.random.default_rng(4)
    for _ in range(10):
        x = rng.uniform(0, 1, 4)
        a, _ = random_mlp.forward(x)
        b, _ = loaded.forward(x)
        assert np.all(np.abs(a - b) <= 1e-12)


def test_load_missing_field(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text(
        '{"input_dim": 1, "num_classes": 2, "temperature": 1.0,'
        ' "layers": [{"rows": 2, "cols": 1, "weights": [1.0, 2.0],'
        ' "activation": "identity"}]}'
    )
    with pytest.raises(ParseError, match="bias"):
        load_model(path)


def test_load_dimension_chain_violation(tmp_path):
    path = tmp_path / "chain.json"
    path.write_text(
        '{"input_dim": 2, "num_classes": 4, "temperature": 1.0, "layers": ['
        '{"rows": 3, "cols": 2, "weights": [0,0,0,0,0,0], "bias": [0,0,0],'
        ' "activation": "relu"},'
        '{"rows": 4, "cols": 4, "weights": [0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0],'
        ' "bias": [0,0,0,0], "activation": "identity"}]}'
    )
    with pytest.raises(InvalidModel):
        load_model(path)


def test_load_rejects_garbage(tmp_path):
    path = tmp_path / "junk.json"
    path.write_text("not json at all")
    with pytest.raises(ParseError):
        load_model(path)


def test_train_toy_separable_blobs():
    samples = make_blobs(
        [np.array([0.25, 0.25]), np.array([0.75, 0.75])], 100, 0.06, seed=11
    )
    model = train_toy(samples, hidden_sizes=(), epochs=500, learning_rate=1.0, seed=0)
    assert accuracy(model, samples) >= 0.99


def test_train_toy_deterministic():
    samples = make_blobs([np.array([0.3, 0.3]), np.array([0.7, 0.7])], 20, 0.05, seed=5)
    a = train_toy(samples, hidden_sizes=(4,), epochs=50, learning_rate=0.5, seed=9)
    b = train_toy(samples, hidden_sizes=(4,), epochs=50, learning_rate=0.5, seed=9)
    for la, lb in zip(a.layers, b.layers):
        assert np.array_equal(la.weights, lb.weights)
        assert np.array_equal(la.bias, lb.bias)


def test_train_toy_zero_learning_rate():
    samples = make_blobs([np.array([0.3, 0.3]), np.array([0.7, 0.7])], 10, 0.05, seed=6)
    trained = train_toy(samples, epochs=100, learning_rate=0.0, seed=2)
    untrained = train_toy(samples, epochs=0, learning_rate=1.0, seed=2)
    for la, lb in zip(trained.layers, untrained.layers):
        assert np.array_equal(la.weights, lb.weights)


def test_train_toy_divergence():
    samples = make_blobs([np.array([0.3, 0.3]), np.array([0.7, 0.7])], 10, 0.05, seed=6)
    with pytest.raises(TrainingDiverged), np.errstate(invalid="ignore"):
        train_toy(samples, hidden_sizes=(4,), epochs=5,
                  learning_rate=float("inf"), seed=0)


def test_train_toy_empty():
    with pytest.raises(InvalidInput):
        train_toy([])


def test_sample_validation():
    with pytest.raises(InvalidInput):
        Sample(np.array([0.5, 1.2]), 0)
    with pytest.raises(InvalidInput):
        Sample(np.array([0.5, 0.5]), -1)


def test_classifier_validation():
    with pytest.raises(InvalidModel):
        Classifier([])
    with pytest.raises(InvalidModel):
        Classifier([Layer(np.eye(2), np.zeros(2))], temperature=0.0)
    with pytest.raises(InvalidModel):
        Classifier(
            [
                Layer(np.zeros((3, 2)), np.zeros(3)),
                Layer(np.zeros((4, 4)), np.zeros(4)),
            ]
        )
