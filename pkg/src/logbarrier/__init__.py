"""Minimum-norm adversarial attack toolkit built on a logarithmic barrier."""

from .attack import (
    AttackConfig,
    AttackResult,
    backtrack_to_feasible,
    barrier_gradient,
    barrier_value,
    initialize_adversarial,
    l2_config,
    lambda_schedule,
    linf_config,
    run_logbarrier,
    run_logbarrier_batch,
)
from .baselines import BaselineConfig, default_baseline, run_ifgsm, run_pgd_l2
from .classifier import (
    Classifier,
    Layer,
    Sample,
    accuracy,
    load_model,
    save_model,
    train_toy,
)
from .harness import (
    EvaluationReport,
    evaluate,
    emit_curve,
    linear_oracle,
    load_dataset,
    nearest_rank_quantile,
    oracle_projection,
    save_dataset,
    write_report,
)
from .metrics import (
    PerturbationMeasure,
    exact_norm,
    measure,
    measure_gradient,
    project_box,
)

__all__ = [name for name in dir() if not name.startswith("_")]
