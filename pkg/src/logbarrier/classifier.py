"""Dense softmax classifier with manual backpropagation.

The network is a stack of affine layers with relu or identity activations.
Probabilities are ``softmax(temperature * logits)``: the temperature acts as a
softmax gain, so large values saturate the output toward a one-hot vector and
shrink probability gradients (the gradient-obfuscation regime) while leaving
the decision boundary unchanged.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, InvalidModel, ParseError, TrainingDiverged

ACTIVATIONS = ("relu", "identity")


@dataclass
class Sample:
    """A flat pixel vector in [0,1]^M with its integer class label."""

    pixels: np.ndarray
    label: int

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=float)
        if self.pixels.ndim != 1:
            raise InvalidInput("sample pixels must be a flat vector")
        if self.pixels.size and (self.pixels.min() < 0.0 or self.pixels.max() > 1.0):
            raise InvalidInput("sample pixels must lie in [0, 1]")
        self.label = int(self.label)
        if self.label < 0:
            raise InvalidInput("sample label must be non-negative")


@dataclass
class Layer:
    weights: np.ndarray  # shape (n_out, n_in)
    bias: np.ndarray  # shape (n_out,)
    activation: str = "identity"

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.bias = np.asarray(self.bias, dtype=float)
        if self.weights.ndim != 2 or self.bias.ndim != 1:
            raise InvalidModel("layer weights must be 2-D and bias 1-D")
        if self.weights.shape[0] != self.bias.shape[0]:
            raise InvalidModel("bias length must match weight rows")
        if self.activation not in ACTIVATIONS:
            raise InvalidModel("unknown activation %r" % (self.activation,))


def softmax(z):
    z = np.asarray(z, dtype=float)
    e = np.exp(z - z.max())
    return e / e.sum()


def log_softmax(z):
    z = np.asarray(z, dtype=float)
    shifted = z - z.max()
    return shifted - np.log(np.exp(shifted).sum())


class Classifier:
    """Immutable dense network; all query methods are pure."""

    def __init__(self, layers, temperature=1.0):
        layers = list(layers)
        if not layers:
            raise InvalidModel("classifier needs at least one layer")
        for prev, nxt in zip(layers, layers[1:]):
            if nxt.weights.shape[1] != prev.weights.shape[0]:
                raise InvalidModel(
                    "layer dimensions do not chain: %d -> %d"
                    % (prev.weights.shape[0], nxt.weights.shape[1])
                )
        if not temperature > 0:
            raise InvalidModel("temperature must be positive")
        self.layers = layers
        self.temperature = float(temperature)

    @property
    def input_dim(self):
        return self.layers[0].weights.shape[1]

    @property
    def num_classes(self):
        return self.layers[-1].weights.shape[0]

    def _check_input(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.input_dim,):
            raise InvalidInput(
                "expected input of length %d, got shape %r" % (self.input_dim, x.shape)
            )
        return x

    def _forward_full(self, x):
        """Run the network, keeping per-layer inputs and pre-activations."""
        x = self._check_input(x)
        caches = []
        out = x
        for layer in self.layers:
            pre = layer.weights @ out + layer.bias
            caches.append((out, pre))
            out = np.maximum(pre, 0.0) if layer.activation == "relu" else pre
        return out, caches

    def _backprop_input(self, caches, dlogits):
        """Pull a gradient w.r.t. the logits back to the input pixels."""
        g = dlogits
        for layer, (_, pre) in zip(reversed(self.layers), reversed(caches)):
            if layer.activation == "relu":
                g = g * (pre > 0.0)  # subgradient 0 at the kink
            g = layer.weights.T @ g
        return g

    def forward(self, x):
        """Return (logits, probabilities) at x."""
        logits, _ = self._forward_full(x)
        return logits, softmax(self.temperature * logits)

    def predict(self, x):
        """Class index with the largest logit; ties go to the lowest index."""
        logits, _ = self._forward_full(x)
        return int(np.argmax(logits))

    def ranked_rivals(self, probs, c, k):
        """Indices of the k largest outputs excluding class c (ties by index)."""
        order = sorted(
            (i for i in range(len(probs)) if i != c), key=lambda i: (-probs[i], i)
        )
        return order[:k]

    def is_misclassified(self, x, c, k=1):
        """True iff class c is outside the top-k model outputs (strictly)."""
        if not 1 <= k < self.num_classes:
            raise InvalidInput("need 1 <= k < num_classes")
        logits, _ = self._forward_full(x)
        rivals = self.ranked_rivals(logits, c, k)
        # softmax is monotone, so the logit ranking equals the probability one
        return logits[rivals[-1]] - logits[c] > 0.0

    def gap_and_gradient(self, x, c, k=1):
        """Probability gaps f_(j) - f_c for the top-k rivals, with pixel gradients."""
        if not 1 <= k < self.num_classes:
            raise InvalidInput("need 1 <= k < num_classes")
        logits, caches = self._forward_full(x)
        p = softmax(self.temperature * logits)
        rivals = self.ranked_rivals(p, c, k)
        gaps = np.array([p[j] - p[c] for j in rivals])
        grads = []
        n = self.num_classes
        for j in rivals:
            # d(p_j - p_c)/dlogits through the tempered softmax
            ej = np.zeros(n)
            ej[j] = 1.0
            ec = np.zeros(n)
            ec[c] = 1.0
            dlogits = self.temperature * (p[j] * (ej - p) - p[c] * (ec - p))
            grads.append(self._backprop_input(caches, dlogits))
        return gaps, grads

    def cross_entropy(self, x, c):
        """-log p_c at x, computed through log-softmax."""
        logits, _ = self._forward_full(x)
        return float(-log_softmax(self.temperature * logits)[c])

    def loss_gradient(self, x, c):
        """Pixel gradient of the cross-entropy loss -log p_c."""
        logits, caches = self._forward_full(x)
        p = softmax(self.temperature * logits)
        dlogits = p.copy()
        dlogits[c] -= 1.0
        return self._backprop_input(caches, self.temperature * dlogits)

    def with_temperature(self, temperature):
        return Classifier(self.layers, temperature)


def save_model(model, path):
    """Serialize a classifier to a JSON document."""
    doc = {
        "input_dim": model.input_dim,
        "num_classes": model.num_classes,
        "temperature": model.temperature,
        "layers": [
            {
                "rows": layer.weights.shape[0],
                "cols": layer.weights.shape[1],
                "weights": [float(v) for v in layer.weights.ravel()],
                "bias": [float(v) for v in layer.bias],
                "activation": layer.activation,
            }
            for layer in model.layers
        ],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_model(path):
    """Load a classifier saved by save_model."""
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError("%s: %s" % (path, exc)) from exc
    for key in ("input_dim", "num_classes", "temperature", "layers"):
        if key not in doc:
            raise ParseError("%s: missing field %r" % (path, key))
    layers = []
    for idx, entry in enumerate(doc["layers"]):
        for key in ("rows", "cols", "weights", "bias", "activation"):
            if key not in entry:
                raise ParseError("%s: layer %d missing field %r" % (path, idx, key))
        rows, cols = int(entry["rows"]), int(entry["cols"])
        flat = np.asarray(entry["weights"], dtype=float)
        if flat.size != rows * cols:
            raise ParseError(
                "%s: layer %d has %d weights, expected %d"
                % (path, idx, flat.size, rows * cols)
            )
        bias = np.asarray(entry["bias"], dtype=float)
        if bias.size != rows:
            raise ParseError(
                "%s: layer %d has %d bias entries, expected %d"
                % (path, idx, bias.size, rows)
            )
        try:
            layers.append(Layer(flat.reshape(rows, cols), bias, entry["activation"]))
        except InvalidModel as exc:
            raise ParseError("%s: layer %d: %s" % (path, idx, exc)) from exc
    model = Classifier(layers, doc["temperature"])
    if model.input_dim != int(doc["input_dim"]):
        raise InvalidModel("declared input_dim does not match first layer")
    if model.num_classes != int(doc["num_classes"]):
        raise InvalidModel("declared num_classes does not match last layer")
    return model


def _init_layers(layer_sizes, rng):
    layers = []
    for i, (n_in, n_out) in enumerate(zip(layer_sizes, layer_sizes[1:])):
        w = rng.standard_normal((n_out, n_in)) * np.sqrt(2.0 / n_in)
        act = "relu" if i < len(layer_sizes) - 2 else "identity"
        layers.append(Layer(w, np.zeros(n_out), act))
    return layers


def train_toy(samples, hidden_sizes=(), epochs=500, learning_rate=1.0, seed=0):
    """Fit a fixture model with full-batch gradient descent on cross-entropy.

    Deterministic for a fixed seed; hidden_sizes=() gives a linear model.
    """
    if not samples:
        raise InvalidInput("training set is empty")
    x_mat = np.stack([s.pixels for s in samples])
    labels = np.array([s.label for s in samples])
    num_classes = int(labels.max()) + 1 if labels.size else 0
    num_classes = max(num_classes, 2)
    rng = np.random.default_rng(seed)
    sizes = [x_mat.shape[1]] + list(hidden_sizes) + [num_classes]
    layers = _init_layers(sizes, rng)
    n = len(samples)
    onehot = np.zeros((n, num_classes))
    onehot[np.arange(n), labels] = 1.0

    for _ in range(epochs):
        # forward, batched
        acts = [x_mat]
        pres = []
        out = x_mat
        for layer in layers:
            pre = out @ layer.weights.T + layer.bias
            pres.append(pre)
            out = np.maximum(pre, 0.0) if layer.activation == "relu" else pre
            acts.append(out)
        shifted = out - out.max(axis=1, keepdims=True)
        expz = np.exp(shifted)
        probs = expz / expz.sum(axis=1, keepdims=True)
        loss = -np.mean(
            shifted[np.arange(n), labels] - np.log(expz.sum(axis=1))
        )
        if not np.isfinite(loss):
            raise TrainingDiverged("loss became non-finite")
        grad = (probs - onehot) / n
        for i in range(len(layers) - 1, -1, -1):
            layer = layers[i]
            if layer.activation == "relu":
                grad = grad * (pres[i] > 0.0)
            gw = grad.T @ acts[i]
            gb = grad.sum(axis=0)
            grad = grad @ layer.weights
            layer.weights = layer.weights - learning_rate * gw
            layer.bias = layer.bias - learning_rate * gb

    return Classifier(layers)


def accuracy(model, samples):
    """Fraction of samples the model labels correctly."""
    if not samples:
        return 0.0
    hits = sum(1 for s in samples if model.predict(s.pixels) == s.label)
    return hits / len(samples)
