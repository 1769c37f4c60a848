"""Command-line front end: train fixtures, run attacks, compare, emit curves."""

from __future__ import annotations

import argparse
import dataclasses
import sys

from . import attack as attack_mod
from . import baselines, classifier, harness
from .errors import (
    InvalidInput,
    InvalidModel,
    ParseError,
    ToolkitError,
    UnsupportedModel,
    ValidationError,
)
from .metrics import SMOOTH_LINF, SQUARED_L2, PerturbationMeasure

USAGE_ERRORS = (InvalidInput, InvalidModel, ParseError, UnsupportedModel, ValidationError)


class _Parser(argparse.ArgumentParser):
    # argparse calls sys.exit(2); keep that behavior but make it catchable
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(2)


def _add_attack_flags(p):
    p.add_argument("--attack", choices=["logbarrier", "ifgsm", "pgd"],
                   default="logbarrier")
    p.add_argument("--norm", choices=["l2", "linf"], default="l2")
    p.add_argument("--topk", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alpha", type=float, default=10.0,
                   help="smooth max-norm sharpness")
    p.add_argument("--lambda0", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--step-size", type=float, default=None)
    p.add_argument("--epsilon-stop", type=float, default=None)
    p.add_argument("--k-outer", type=int, default=None)
    p.add_argument("--j-inner", type=int, default=None)
    p.add_argument("--init-step", type=float, default=None)
    p.add_argument("--init-kmax", type=int, default=None)
    p.add_argument("--init-noise", choices=["normal", "bernoulli"], default=None)
    p.add_argument("--rho", type=float, default=None,
                   help="bernoulli noise density")
    p.add_argument("--epsilon-ball", type=float, default=0.1,
                   help="baseline ball radius")
    p.add_argument("--iterations", type=int, default=20,
                   help="baseline iteration count")
    p.add_argument("--ball-step", type=float, default=None,
                   help="baseline step size (default: radius / 10)")


def build_attack_config(args):
    """AttackConfig from flags; unset flags take the norm's defaults."""
    factory = attack_mod.linf_config if args.norm == "linf" else attack_mod.l2_config
    overrides = {"topk": args.topk, "seed": args.seed}
    if args.norm == "linf":
        overrides["measure"] = PerturbationMeasure(SMOOTH_LINF, alpha=args.alpha)
    else:
        overrides["measure"] = PerturbationMeasure(SQUARED_L2)
    flag_map = {
        "lambda0": args.lambda0,
        "beta": args.beta,
        "gamma": args.gamma,
        "step_size": args.step_size,
        "epsilon_stop": args.epsilon_stop,
        "k_outer": args.k_outer,
        "j_inner": args.j_inner,
        "init_step": args.init_step,
        "init_kmax": args.init_kmax,
        "init_noise": args.init_noise,
        "init_rho": args.rho,
    }
    overrides.update({k: v for k, v in flag_map.items() if v is not None})
    return factory(**overrides)


def build_baseline_config(args, kind):
    step = args.ball_step
    if step is None:
        step = args.epsilon_ball / 10.0 if args.epsilon_ball > 0 else 1e-3
    return baselines.BaselineConfig(
        kind=kind,
        epsilon_ball=args.epsilon_ball,
        step_size=step,
        iterations=args.iterations,
        seed=args.seed,
    )


def _make_runner(name, args):
    if name == "logbarrier":
        config = build_attack_config(args)

        def runner(model, sample, index):
            cfg = dataclasses.replace(config, seed=config.seed + index)
            return attack_mod.run_logbarrier(model, sample, cfg)

        return runner
    kind = baselines.IFGSM if name == "ifgsm" else baselines.PGD_L2
    config = build_baseline_config(args, kind)

    def runner(model, sample, index):
        return baselines.run_baseline(model, sample, config)

    return runner


def build_parser():
    parser = _Parser(prog="logbarrier", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a fixture model")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--hidden", default="", help="comma-separated hidden sizes")
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--lr", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--temperature", type=float, default=1.0)

    p = sub.add_parser("attack", help="run one attack over a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", default=None, help="per-sample CSV path")
    _add_attack_flags(p)

    p = sub.add_parser("compare", help="evaluate several attacks")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--attacks", default="logbarrier,ifgsm")
    p.add_argument("--thresholds", default="", help="comma-separated distances")
    p.add_argument("--quantiles", default="0.9")
    p.add_argument("--out-prefix", required=True)
    _add_attack_flags(p)

    p = sub.add_parser("oracle", help="linear-model boundary distances")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--norm", choices=["l2", "linf"], default="l2")

    p = sub.add_parser("curve", help="emit a defense-curve CSV for one attack")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    _add_attack_flags(p)
    return parser


def _parse_floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _cmd_train(args):
    samples = harness.load_dataset(args.data)
    hidden = [int(v) for v in args.hidden.split(",") if v.strip()]
    model = classifier.train_toy(
        samples, hidden_sizes=hidden, epochs=args.epochs,
        learning_rate=args.lr, seed=args.seed,
    )
    if args.temperature != 1.0:
        model = model.with_temperature(args.temperature)
    classifier.save_model(model, args.out)
    print("train accuracy %.4f" % classifier.accuracy(model, samples))
    return 0


def _cmd_attack(args):
    model = classifier.load_model(args.model)
    samples = harness.load_dataset(args.data)
    runner = _make_runner(args.attack, args)
    norm = args.norm
    report = harness.evaluate(model, samples, [(args.attack, runner)], norm=norm)
    summary = report.summaries[args.attack]
    print(
        "%s: %d samples, %d failed, mean_%s %s"
        % (
            args.attack,
            summary.num_samples,
            summary.num_failed,
            norm,
            harness._fmt(summary.mean_distance[norm]),
        )
    )
    if args.out:
        harness.write_report(report, args.out, "csv")
    return 0


def _cmd_compare(args):
    model = classifier.load_model(args.model)
    samples = harness.load_dataset(args.data)
    names = [n.strip() for n in args.attacks.split(",") if n.strip()]
    attacks = [(name, _make_runner(name, args)) for name in names]
    thresholds = _parse_floats(args.thresholds)
    quantiles = _parse_floats(args.quantiles) or [0.9]
    report = harness.evaluate(
        model, samples, attacks, thresholds=thresholds,
        quantiles=quantiles, norm=args.norm,
    )
    harness.write_report(report, args.out_prefix + "_persample.csv", "csv")
    harness.write_report(report, args.out_prefix + "_summary.txt", "text")
    for name in names:
        harness.emit_curve(report, name, args.out_prefix + "_curve_%s.csv" % name)
    return 0


def _cmd_oracle(args):
    model = classifier.load_model(args.model)
    samples = harness.load_dataset(args.data)
    norm = "inf" if args.norm == "linf" else 2
    for idx, sample in enumerate(samples):
        print("%d %s" % (idx, harness._fmt(harness.linear_oracle(model, sample, norm))))
    return 0


def _cmd_curve(args):
    model = classifier.load_model(args.model)
    samples = harness.load_dataset(args.data)
    runner = _make_runner(args.attack, args)
    report = harness.evaluate(model, samples, [(args.attack, runner)], norm=args.norm)
    harness.emit_curve(report, args.attack, args.out)
    return 0


COMMANDS = {
    "train": _cmd_train,
    "attack": _cmd_attack,
    "compare": _cmd_compare,
    "oracle": _cmd_oracle,
    "curve": _cmd_curve,
}


def cli_main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except USAGE_ERRORS as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except ToolkitError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    except OSError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2


def main():
    sys.exit(cli_main(argv=None))


if __name__ == "__main__":
    main()
