"""Command-line entry points: train / eval / oracle / sample.

Every subcommand that takes a config accepts ``--config file.json`` plus
any number of ``--<dotted.key> value`` overrides, e.g.::

    otlab train --config exp.json --train.kt 40 --seed 7 --out runs/a
    otlab eval --checkpoint runs/a/model.ckpt.json --eval.repeats 20
    otlab oracle cloud_a.csv cloud_b.csv --method sinkhorn
    otlab sample --dataset.family grid --dataset.dim 2 --role target \
        --count 1000 --out grid.csv

Exit codes: 0 success, 2 invalid config/arguments, 3 training diverged
(partial history is still flushed).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import datasets as dsets
from . import metrics
from .checkpoint import load_checkpoint, save_checkpoint
from .config import (
    FORMAT_VERSION,
    build_experiment,
    canonical_json,
    load_config_file,
    resolve,
)
from .errors import ConfigError, ContractError, OtlabError, TrainingDiverged
from .io import read_point_cloud, write_history_csv, write_point_cloud
from .oracle import w2sq_assignment, w2sq_bruteforce, w2sq_sinkhorn
from .trainer import TrainHistory, train

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3


def main(argv=None):
    parser = argparse.ArgumentParser(prog="otlab", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run an experiment; writes checkpoint, history, metrics")
    p_train.add_argument("--config", help="JSON config file (flat dotted keys)")
    p_train.add_argument("--out", help="output directory")

    p_eval = sub.add_parser("eval", help="recompute metrics for a checkpoint")
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--config", help="JSON config file overriding the checkpoint echo")
    p_eval.add_argument("--out", help="output directory (default: checkpoint directory)")

    p_oracle = sub.add_parser("oracle", help="squared W2 between two point-cloud CSVs")
    p_oracle.add_argument("csv_a")
    p_oracle.add_argument("csv_b")
    p_oracle.add_argument("--method", default="assignment",
                          choices=("assignment", "sinkhorn", "bruteforce"))
    p_oracle.add_argument("--epsilon", type=float, default=1e-3,
                          help="sinkhorn regularization")

    p_sample = sub.add_parser("sample", help="dump a dataset sample as CSV")
    p_sample.add_argument("--config", help="JSON config file (flat dotted keys)")
    p_sample.add_argument("--role", required=True, choices=("source", "target"))
    p_sample.add_argument("--count", required=True, type=int)
    p_sample.add_argument("--out", required=True, help="destination CSV file")

    args, extra = parser.parse_known_args(argv)
    try:
        overrides = _parse_overrides(extra)
        if args.command == "train":
            return _cmd_train(args, overrides)
        if args.command == "eval":
            return _cmd_eval(args, overrides)
        if args.command == "oracle":
            if overrides:
                raise ConfigError(f"oracle takes no config overrides: {sorted(overrides)}")
            return _cmd_oracle(args)
        if args.command == "sample":
            return _cmd_sample(args, overrides)
        raise ConfigError(f"unknown command {args.command!r}")
    except (ConfigError, ContractError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TrainingDiverged:
        raise  # handled inside _cmd_train; reaching here is a bug
    except OtlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def _parse_overrides(tokens):
    """Turn leftover ['--a.b', '1', '--c.d=x'] tokens into a dict."""
    out = {}
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if not tok.startswith("--"):
            raise ConfigError(f"unexpected argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, value = key.split("=", 1)
        else:
            i += 1
            if i >= len(tokens):
                raise ConfigError(f"missing value for override --{key}")
            value = tokens[i]
        out[key] = value
        i += 1
    return out


def _resolved_from(args, overrides):
    file_values = load_config_file(args.config) if args.config else None
    return resolve(file_values, overrides)


def _cmd_train(args, overrides):
    resolved = _resolved_from(args, overrides)
    exp = build_experiment(resolved)
    out_dir = args.out or exp.out_dir
    os.makedirs(out_dir, exist_ok=True)
    config_line = f"format_version={FORMAT_VERSION} config={canonical_json(resolved)}"

    history = TrainHistory()
    try:
        model, history = train(exp.trainer, exp.source, exp.target, exp.seed)
    except TrainingDiverged as exc:
        write_history_csv(os.path.join(out_dir, "history.csv"), exc.history, config_line)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED

    write_history_csv(os.path.join(out_dir, "history.csv"), history, config_line)
    save_checkpoint(os.path.join(out_dir, "model.ckpt.json"), model, resolved)
    report = _evaluate(exp, model)
    _write_metrics(os.path.join(out_dir, "metrics.json"), resolved, report)
    print(canonical_json(report.to_dict()))
    return EXIT_OK


def _cmd_eval(args, overrides):
    model, embedded = load_checkpoint(args.checkpoint)
    file_values = load_config_file(args.config) if args.config else None
    merged = dict(embedded)
    for source in (file_values, overrides):
        if source:
            merged.update(source)
    resolved = resolve(None, merged)
    exp = build_experiment(resolved)
    if exp.source.dim != model.dim:
        raise ConfigError(
            f"checkpoint dim {model.dim} does not match config dim {exp.source.dim}"
        )
    report = _evaluate(exp, model)
    out_dir = args.out or (os.path.dirname(os.path.abspath(args.checkpoint)))
    os.makedirs(out_dir, exist_ok=True)
    _write_metrics(os.path.join(out_dir, "metrics.eval.json"), resolved, report)
    print(canonical_json(report.to_dict()))
    return EXIT_OK


def _evaluate(exp, model):
    rng = np.random.default_rng(np.random.SeedSequence([exp.seed, 1]))
    return metrics.evaluate(
        model, exp.source, exp.target, rng,
        n=exp.eval_n, repeats=exp.eval_repeats, eps_eval=exp.eval_eps,
        oracle_fallback=exp.oracle_fallback,
    )


def _write_metrics(path, resolved, report):
    payload = {
        "format_version": FORMAT_VERSION,
        "config": dict(resolved),
        "seed": resolved["seed"],
        "metrics": report.to_dict(),
    }
    with open(path, "w", newline="\n") as fh:
        fh.write(canonical_json(payload))
        fh.write("\n")


def _cmd_oracle(args):
    X = read_point_cloud(args.csv_a)
    Y = read_point_cloud(args.csv_b)
    if X.shape != Y.shape:
        raise ContractError(
            f"clouds must have equal shape, got {X.shape} vs {Y.shape}"
        )
    if args.method == "assignment":
        value = w2sq_assignment(X, Y)
    elif args.method == "bruteforce":
        value = w2sq_bruteforce(X, Y)
    else:
        value = w2sq_sinkhorn(X, Y, epsilon_reg=args.epsilon)
    print(f"w2sq={value!r}")
    return EXIT_OK


def _cmd_sample(args, overrides):
    resolved = _resolved_from(args, overrides)
    exp = build_experiment(resolved)
    if args.count < 1:
        raise ConfigError(f"--count must be >= 1, got {args.count}")
    ds = exp.source if args.role == "source" else exp.target
    rng = np.random.default_rng(np.random.SeedSequence([exp.seed, 2]))
    points = dsets.sample(ds, args.count, rng)
    write_point_cloud(args.out, points)
    return EXIT_OK


def console_main():
    sys.exit(main())


if __name__ == "__main__":
    console_main()
