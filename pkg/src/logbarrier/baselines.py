"""Loss-maximization baselines: iterative FGSM (max-norm) and l2 PGD."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .attack import AttackResult
from .errors import InvalidInput
from .metrics import exact_norm, project_box

IFGSM = "ifgsm"
PGD_L2 = "pgd_l2"


@dataclass(frozen=True)
class BaselineConfig:
    kind: str = IFGSM
    epsilon_ball: float = 0.1
    step_size: float = 0.01
    iterations: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.kind not in (IFGSM, PGD_L2):
            raise InvalidInput("kind must be ifgsm or pgd_l2")
        if not self.epsilon_ball >= 0:
            raise InvalidInput("epsilon_ball must be non-negative")
        if self.iterations < 1:
            raise InvalidInput("iterations must be >= 1")
        if not self.step_size > 0:
            raise InvalidInput("step_size must be positive")
        # sanity bound; a degenerate ball still admits a (no-op) run
        if self.epsilon_ball > 0 and self.step_size > 2 * self.epsilon_ball + 1e-12:
            raise InvalidInput("step_size must not exceed 2 * epsilon_ball")


def default_baseline(kind, epsilon_ball):
    """Standard settings: 20 iterations, step a tenth of the ball radius."""
    step = epsilon_ball / 10.0 if epsilon_ball > 0 else 1e-3
    return BaselineConfig(
        kind=kind, epsilon_ball=epsilon_ball, step_size=step, iterations=20,
    )


def _result(model, sample, u, iterations, skipped=0):
    x = np.asarray(sample.pixels, dtype=float)
    delta = u - x
    return AttackResult(
        adversarial=u,
        success=model.is_misclassified(u, sample.label, 1),
        distance_l2=exact_norm(delta, 2),
        distance_linf=exact_norm(delta, "inf"),
        outer_completed=1,
        total_inner_steps=iterations,
        backtrack_count=skipped,
    )


def run_ifgsm(model, sample, config):
    """Signed-gradient ascent on the loss, clipped to the max-norm ball."""
    x = np.asarray(sample.pixels, dtype=float)
    u = x.copy()
    eps = config.epsilon_ball
    for _ in range(config.iterations):
        g = model.loss_gradient(u, sample.label)
        u = u + config.step_size * np.sign(g)
        u = np.clip(u, x - eps, x + eps)
        u = project_box(u)
    return _result(model, sample, u, config.iterations)


def run_pgd_l2(model, sample, config):
    """Normalized gradient ascent on the loss, projected to the l2 ball.

    Steps with a zero gradient are skipped and counted in backtrack_count.
    """
    x = np.asarray(sample.pixels, dtype=float)
    u = x.copy()
    eps = config.epsilon_ball
    skipped = 0
    for _ in range(config.iterations):
        g = model.loss_gradient(u, sample.label)
        norm = np.linalg.norm(g)
        if norm == 0.0:
            skipped += 1
            continue
        u = u + config.step_size * g / norm
        delta = u - x
        dn = np.linalg.norm(delta)
        if dn > eps:
            delta *= eps / dn
        # clamping toward x never grows a coordinate's deviation, so the
        # ball constraint survives the box projection
        u = project_box(x + delta)
    return _result(model, sample, u, config.iterations, skipped)


def run_baseline(model, sample, config):
    if config.kind == IFGSM:
        return run_ifgsm(model, sample, config)
    return run_pgd_l2(model, sample, config)
