"""Experiment configuration: one canonical resolver.

Configuration is a flat map of dotted keys. Values come from, in
increasing precedence: built-in defaults, a JSON config file (flat dotted
keys), and command-line overrides (``--train.kt 40``). The resolved map
is validated field by field and embedded verbatim in every output
artifact.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

from .datasets import BLOCK_FAMILIES, make_pair
from .errors import ConfigError
from .smoothing import NoiseSchedule
from .trainer import GENERATOR_KINDS, POTENTIAL_KINDS, TrainerConfig

FORMAT_VERSION = 1
OUT_ROOT_ENV = "OTLAB_OUT_ROOT"

_EVAL_EPS_AUTO = -1.0  # sentinel: use schedule.sigma_min


def _positive(v):
    return v > 0


def _nonnegative(v):
    return v >= 0


def _unit_interval(v):
    return 0.0 <= v < 1.0


@dataclass(frozen=True)
class _Field:
    type: type
    default: object
    check: object = None       # predicate or tuple of choices
    help: str = ""


SCHEMA = {
    "dataset.family": _Field(str, "perpendicular", BLOCK_FAMILIES,
                             "synthetic family (block families only)"),
    "dataset.dim": _Field(int, 2, lambda v: v >= 2 and v % 2 == 0,
                          "even data dimension"),
    "train.alpha": _Field(float, 1.0, _positive, "cost scale in alpha*||x-y||^2"),
    "train.lambda_r1": _Field(float, 0.0, _nonnegative,
                              "gradient-penalty weight on the potential"),
    "train.kt": _Field(int, 20, _positive, "map updates per potential update"),
    "train.iters": _Field(int, 20000, _nonnegative, "outer iterations"),
    "train.batch": _Field(int, 128, _positive, "batch size"),
    "train.lr": _Field(float, 1e-4, _positive, "Adam learning rate"),
    "train.beta1": _Field(float, 0.0, _unit_interval, "Adam beta1"),
    "train.beta2": _Field(float, 0.9, _unit_interval, "Adam beta2"),
    "train.generator": _Field(str, "deterministic", GENERATOR_KINDS,
                              "map input: plain or noise-concatenated"),
    "train.noise_dim": _Field(int, 0, _nonnegative,
                              "concat-noise width (0: data dim)"),
    "train.potential": _Field(str, "mlp", POTENTIAL_KINDS, "potential family"),
    "train.hidden": _Field(int, 0, _nonnegative,
                           "hidden width (0: 256 for d<=4, else 1024)"),
    "train.log_every": _Field(int, 100, _positive, "history cadence"),
    "schedule.kind": _Field(str, "gaussian_conv",
                            ("gaussian_conv", "variance_preserving", "constant"),
                            "smoothing convolution and decay family"),
    "schedule.sigma_max": _Field(float, 0.2, _nonnegative, "initial level"),
    "schedule.sigma_min": _Field(float, 0.05, _nonnegative, "terminal level"),
    "schedule.period": _Field(int, 2000, _positive, "steps between level drops"),
    "eval.n": _Field(int, 1024, lambda v: v >= 2, "points per metric batch"),
    "eval.repeats": _Field(int, 10, _positive, "independent metric repeats"),
    "eval.eps": _Field(float, _EVAL_EPS_AUTO,
                       lambda v: v >= 0 or v == _EVAL_EPS_AUTO,
                       "evaluation noise level (-1: schedule.sigma_min)"),
    "eval.oracle_fallback": _Field(bool, True, None,
                                   "estimate the reference cost when no analytic value exists"),
    "seed": _Field(int, 0, None, "master seed"),
    "out.dir": _Field(str, "", None, "output directory (CLI --out overrides)"),
}


def default_config():
    return {k: f.default for k, f in SCHEMA.items()}


def load_config_file(path):
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a JSON object of dotted keys")
    return raw


def resolve(file_values=None, overrides=None):
    """Merge defaults <- file <- overrides, coerce and validate every field."""
    merged = default_config()
    for source, values in (("config file", file_values), ("override", overrides)):
        if not values:
            continue
        for key, value in values.items():
            if key not in SCHEMA:
                raise ConfigError(f"{source}: unknown key {key!r}")
            merged[key] = _coerce(key, value, source)
    for key, value in merged.items():
        _validate(key, value)
    return merged


def _coerce(key, value, source):
    want = SCHEMA[key].type
    if isinstance(value, bool) and want is not bool:
        raise ConfigError(f"{source}: {key}: expected {want.__name__}, got bool")
    if isinstance(value, want):
        return value
    if want is float and isinstance(value, int):
        return float(value)
    if isinstance(value, str):
        try:
            if want is bool:
                if value.lower() in ("true", "1", "yes"):
                    return True
                if value.lower() in ("false", "0", "no"):
                    return False
                raise ValueError(value)
            return want(value)
        except ValueError:
            raise ConfigError(
                f"{source}: {key}: cannot parse {value!r} as {want.__name__}"
            ) from None
    raise ConfigError(
        f"{source}: {key}: expected {want.__name__}, got {type(value).__name__}"
    )


def _validate(key, value):
    check = SCHEMA[key].check
    if check is None:
        return
    if isinstance(check, tuple):
        if value not in check:
            raise ConfigError(f"{key}: must be one of {check}, got {value!r}")
    elif not check(value):
        raise ConfigError(f"{key}: invalid value {value!r} ({SCHEMA[key].help})")


# ---------------------------------------------------------------------------
# materialized experiment
# ---------------------------------------------------------------------------


@dataclass
class Experiment:
    resolved: dict
    source: object
    target: object
    trainer: TrainerConfig
    seed: int
    eval_n: int
    eval_repeats: int
    eval_eps: float
    oracle_fallback: bool
    out_dir: str


def build_experiment(resolved):
    """Turn a validated flat config into live objects.

    Cross-field constraints (schedule total == iters, VP levels < 1) are
    enforced by the underlying constructors and re-reported as field-level
    messages.
    """
    c = dict(resolved)
    source, target = make_pair(c["dataset.family"], c["dataset.dim"])
    schedule = NoiseSchedule(
        kind=c["schedule.kind"],
        sigma_max=c["schedule.sigma_max"],
        sigma_min=c["schedule.sigma_min"],
        period=c["schedule.period"],
        total=c["train.iters"],
    )
    trainer = TrainerConfig(
        cost_alpha=c["train.alpha"],
        lambda_r1=c["train.lambda_r1"],
        k_t=c["train.kt"],
        iters=c["train.iters"],
        batch=c["train.batch"],
        lr=c["train.lr"],
        beta1=c["train.beta1"],
        beta2=c["train.beta2"],
        generator=c["train.generator"],
        noise_dim=c["train.noise_dim"],
        potential=c["train.potential"],
        hidden=c["train.hidden"],
        schedule=schedule,
        log_every=c["train.log_every"],
    )
    eval_eps = c["eval.eps"]
    if eval_eps == _EVAL_EPS_AUTO:
        eval_eps = schedule.sigma_min
    out_dir = c["out.dir"] or os.environ.get(OUT_ROOT_ENV, "runs")
    return Experiment(
        resolved=c,
        source=source,
        target=target,
        trainer=trainer,
        seed=c["seed"],
        eval_n=c["eval.n"],
        eval_repeats=c["eval.repeats"],
        eval_eps=eval_eps,
        oracle_fallback=c["eval.oracle_fallback"],
        out_dir=out_dir,
    )


def canonical_json(obj):
    """Stable byte representation used by every artifact."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))
