"""Minimum-norm attack via a logarithmic barrier on the misclassification gap.

The attack first finds any misclassified starting point by escalating random
noise, then follows the central path: for a shrinking penalty weight it runs
projected gradient descent on ``measure(u - x) - lambda * sum(log(gaps))``,
backtracking toward the previous iterate whenever a step loses feasibility.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasiblePoint, InitializationFailed, InvalidInput
from .metrics import (
    SMOOTH_LINF,
    SQUARED_L2,
    PerturbationMeasure,
    exact_norm,
    measure,
    measure_gradient,
    project_box,
)

BACKTRACK_CAP = 200

NOISE_NORMAL = "normal"
NOISE_BERNOULLI = "bernoulli"


@dataclass(frozen=True)
class AttackConfig:
    measure: PerturbationMeasure = PerturbationMeasure(SQUARED_L2)
    lambda0: float = 0.1
    beta: float = 0.75
    gamma: float = 0.5
    step_size: float = 5e-3
    epsilon_stop: float = 1e-6
    k_outer: int = 15
    j_inner: int = 200
    topk: int = 1
    init_step: float = 5e-4
    init_kmax: int = 1000
    init_noise: str = NOISE_NORMAL
    init_rho: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if not self.lambda0 >= 0:
            raise InvalidInput("lambda0 must be non-negative")
        for name in ("beta", "gamma"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise InvalidInput("%s must lie in (0, 1)" % name)
        if not self.step_size > 0 or not self.epsilon_stop > 0:
            raise InvalidInput("step_size and epsilon_stop must be positive")
        if self.k_outer < 1 or self.j_inner < 1:
            raise InvalidInput("loop bounds must be positive")
        if self.topk < 1:
            raise InvalidInput("topk must be >= 1")
        if not self.init_step > 0 or self.init_kmax < 0:
            raise InvalidInput("bad initialization settings")
        if self.init_noise not in (NOISE_NORMAL, NOISE_BERNOULLI):
            raise InvalidInput("init_noise must be normal or bernoulli")
        if self.init_noise == NOISE_BERNOULLI and not 0.0 < self.init_rho < 1.0:
            raise InvalidInput("bernoulli density must lie in (0, 1)")


def l2_config(**overrides):
    """Default configuration for attacks measured in l2."""
    base = dict(
        measure=PerturbationMeasure(SQUARED_L2),
        step_size=5e-3,
        k_outer=15,
        j_inner=200,
        init_noise=NOISE_NORMAL,
    )
    base.update(overrides)
    return AttackConfig(**base)


def linf_config(**overrides):
    """Default configuration for attacks measured in the max-norm."""
    base = dict(
        measure=PerturbationMeasure(SMOOTH_LINF, alpha=10.0),
        step_size=0.1,
        k_outer=25,
        j_inner=1000,
        init_noise=NOISE_BERNOULLI,
        init_rho=0.01,
    )
    base.update(overrides)
    return AttackConfig(**base)


def lambda_schedule(config, k):
    """Penalty weight for outer iteration k."""
    return config.lambda0 * config.beta**k


@dataclass
class AttackResult:
    adversarial: np.ndarray
    success: bool
    distance_l2: float
    distance_linf: float
    init_iterations: int = 0
    outer_completed: int = 0
    total_inner_steps: int = 0
    backtrack_count: int = 0
    best_trace: list = field(default_factory=list)


def barrier_value(model, u, c, topk, lam):
    """lam * sum of -log(gap_j) over the top-k rival gaps at u."""
    gaps, _ = model.gap_and_gradient(u, c, topk)
    if np.any(gaps <= 0.0):
        raise InfeasiblePoint("barrier evaluated at a non-misclassified point")
    return float(lam * np.sum(-np.log(gaps)))


def barrier_gradient(model, u, c, topk, lam):
    """Pixel gradient of barrier_value at a feasible point."""
    gaps, grads = model.gap_and_gradient(u, c, topk)
    if np.any(gaps <= 0.0):
        raise InfeasiblePoint("barrier evaluated at a non-misclassified point")
    out = np.zeros(model.input_dim)
    for gap, grad in zip(gaps, grads):
        out -= lam * grad / gap
    return out


def _draw_noise(config, dim, rng):
    if config.init_noise == NOISE_NORMAL:
        return rng.standard_normal(dim)
    mask = rng.random(dim) < config.init_rho
    signs = np.where(rng.random(dim) < 0.5, -1.0, 1.0)
    return mask * signs


def initialize_adversarial(model, sample, config, rng=None):
    """Find a misclassified starting point by escalating random noise.

    Each draw perturbs the original pixels afresh with step
    ``init_step * 1.01**k`` and projects back into the box; the first
    misclassified candidate wins. Already-misclassified samples are returned
    unchanged with zero iterations.
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    x = np.asarray(sample.pixels, dtype=float)
    if model.is_misclassified(x, sample.label, config.topk):
        return x.copy(), 0
    for k in range(config.init_kmax):
        b = _draw_noise(config, x.size, rng)
        candidate = project_box(x + config.init_step * 1.01**k * b)
        if model.is_misclassified(candidate, sample.label, config.topk):
            return candidate, k + 1
    raise InitializationFailed(
        "no misclassified point within %d noise draws" % config.init_kmax
    )


def backtrack_to_feasible(u_new, u_prev, model, c, topk, gamma, cap=BACKTRACK_CAP):
    """Shrink u_new toward the feasible u_prev until misclassification returns.

    Falls back to u_prev after ``cap`` contractions; u_prev is feasible by
    precondition, so the returned point always is.
    """
    u = np.asarray(u_new, dtype=float)
    steps = 0
    while not model.is_misclassified(u, c, topk):
        if steps >= cap:
            return np.asarray(u_prev, dtype=float).copy(), steps
        u = gamma * u + (1.0 - gamma) * u_prev
        steps += 1
    return u, steps


def _trace_distance(m, value):
    # value is the running best of measure(); report it on the norm's scale
    return float(np.sqrt(value)) if m.kind == SQUARED_L2 else float(value)


def run_logbarrier(model, sample, config, iterate_hook=None):
    """Run the full attack on one sample.

    Returns the feasible iterate with the smallest measure seen anywhere in
    the run. ``iterate_hook(u)`` is called on every retained iterate; tests
    use it to assert feasibility and box membership step by step.
    """
    x = np.asarray(sample.pixels, dtype=float)
    c = sample.label
    rng = np.random.default_rng(config.seed)
    try:
        u, init_iters = initialize_adversarial(model, sample, config, rng)
    except InitializationFailed:
        return AttackResult(
            adversarial=x.copy(),
            success=False,
            distance_l2=np.inf,
            distance_linf=np.inf,
            init_iterations=config.init_kmax,
        )

    m = config.measure
    best = u.copy()
    best_value = measure(m, u - x)
    total_inner = 0
    backtracks = 0
    trace = []
    if iterate_hook is not None:
        iterate_hook(u)

    for k in range(config.k_outer):
        lam = lambda_schedule(config, k)
        for _ in range(config.j_inner):
            grad = measure_gradient(m, u - x)
            if lam > 0.0:
                grad = grad + barrier_gradient(model, u, c, config.topk, lam)
            candidate = project_box(u - config.step_size * grad)
            candidate, steps = backtrack_to_feasible(
                candidate, u, model, c, config.topk, config.gamma
            )
            backtracks += steps
            total_inner += 1
            if iterate_hook is not None:
                iterate_hook(candidate)
            value = measure(m, candidate - x)
            if value < best_value:
                best_value = value
                best = candidate.copy()
            moved = float(np.linalg.norm(candidate - u))
            u = candidate
            if moved <= config.epsilon_stop:
                break
        trace.append((k, _trace_distance(m, best_value)))

    delta = best - x
    return AttackResult(
        adversarial=best,
        success=True,
        distance_l2=exact_norm(delta, 2),
        distance_linf=exact_norm(delta, "inf"),
        init_iterations=init_iters,
        outer_completed=config.k_outer,
        total_inner_steps=total_inner,
        backtrack_count=backtracks,
        best_trace=trace,
    )


def run_logbarrier_batch(model, samples, config):
    """Attack each sample independently with a per-index derived seed."""
    results = []
    for index, sample in enumerate(samples):
        cfg = dataclasses.replace(config, seed=config.seed + index)
        results.append(run_logbarrier(model, sample, cfg))
    return results
