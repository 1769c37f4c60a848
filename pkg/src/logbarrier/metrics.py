"""Perturbation-size measures, exact reporting norms, and the box projection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput

SQUARED_L2 = "squared_l2"
SMOOTH_LINF = "smooth_linf"


@dataclass(frozen=True)
class PerturbationMeasure:
    """Differentiable size measure minimized by the attack.

    ``squared_l2`` is the plain squared Euclidean norm. ``smooth_linf`` is the
    exponentially weighted mean sum(|d_i| e^{a|d_i|}) / sum(e^{a|d_i|}), a
    smooth stand-in for the max-norm that sharpens toward it as alpha grows.
    """

    kind: str = SQUARED_L2
    alpha: float = 10.0

    def __post_init__(self):
        if self.kind not in (SQUARED_L2, SMOOTH_LINF):
            raise InvalidInput("unknown measure kind %r" % (self.kind,))
        if self.kind == SMOOTH_LINF and not self.alpha > 0:
            raise InvalidInput("smooth_linf needs alpha > 0")


def _stable_weights(absd, alpha):
    # factor e^{alpha * max|d|} out of numerator and denominator
    t = np.exp(alpha * (absd - absd.max()))
    return t / t.sum()


def measure(m, delta):
    """Evaluate the measure at a perturbation vector."""
    delta = np.asarray(delta, dtype=float)
    if m.kind == SQUARED_L2:
        return float(delta @ delta)
    if delta.size == 0:
        return 0.0
    absd = np.abs(delta)
    w = _stable_weights(absd, m.alpha)
    return float(absd @ w)


def measure_gradient(m, delta):
    """Analytic gradient of measure() at delta."""
    delta = np.asarray(delta, dtype=float)
    if m.kind == SQUARED_L2:
        return 2.0 * delta
    if delta.size == 0:
        return delta.copy()
    absd = np.abs(delta)
    w = _stable_weights(absd, m.alpha)
    value = absd @ w
    # quotient rule; sign(0) = 0 picks the zero subgradient at kinks
    return np.sign(delta) * w * (1.0 + m.alpha * (absd - value))


def exact_norm(delta, p):
    """Plain l2 or max norm, used only for reporting."""
    delta = np.asarray(delta, dtype=float)
    if p == 2:
        return float(np.linalg.norm(delta))
    if p in ("inf", np.inf):
        return float(np.abs(delta).max()) if delta.size else 0.0
    raise InvalidInput("norm must be 2 or inf")


def project_box(x):
    """Clamp each coordinate to [0, 1]."""
    return np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
