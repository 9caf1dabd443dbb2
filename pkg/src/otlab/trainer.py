"""Alternating max-min training of the potential / transport-map pair.

One trainer covers the whole model family. Per outer iteration k it draws
fresh batches, smooths the source batch at the scheduled level, applies a
single potential update (ascent) and then ``k_t`` map updates (descent).
The plain max-min baseline is this trainer with the constant-zero
schedule and a deterministic generator; the stochastic-generator variant
concatenates fresh standard-normal noise onto the map input. Nothing else
changes between the three, so baseline comparisons are apples to apples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from . import datasets as dsets
from . import nn
from .autodiff import Tensor
from .errors import ConfigError, ContractError, TrainingDiverged
from .smoothing import NoiseSchedule, constant_schedule, level_at, perturb, perturb_level

GENERATOR_KINDS = ("deterministic", "noise_concat")
POTENTIAL_KINDS = ("mlp", "icnn")

DIVERGENCE_LIMIT = 1e8


@dataclass(frozen=True)
class TrainerConfig:
    cost_alpha: float = 1.0
    lambda_r1: float = 0.0
    k_t: int = 20
    iters: int = 20000
    batch: int = 128
    lr: float = 1e-4
    beta1: float = 0.0
    beta2: float = 0.9
    generator: str = "deterministic"
    noise_dim: int = 0            # 0 -> data dim (noise_concat only)
    potential: str = "mlp"
    hidden: int = 0               # 0 -> 256 for d <= 4, 1024 above
    schedule: NoiseSchedule = field(
        default_factory=lambda: NoiseSchedule("gaussian_conv", 0.2, 0.05, 2000, 20000)
    )
    log_every: int = 100

    def __post_init__(self):
        if self.k_t < 1:
            raise ConfigError(f"k_t must be >= 1, got {self.k_t}")
        if self.batch < 1:
            raise ConfigError(f"batch must be >= 1, got {self.batch}")
        if self.cost_alpha <= 0:
            raise ConfigError(f"cost_alpha must be positive, got {self.cost_alpha}")
        if self.lambda_r1 < 0:
            raise ConfigError(f"lambda_r1 must be >= 0, got {self.lambda_r1}")
        if self.iters < 0:
            raise ConfigError(f"iters must be >= 0, got {self.iters}")
        if self.generator not in GENERATOR_KINDS:
            raise ConfigError(f"unknown generator kind {self.generator!r}")
        if self.potential not in POTENTIAL_KINDS:
            raise ConfigError(f"unknown potential kind {self.potential!r}")
        if self.schedule.total != self.iters:
            raise ConfigError(
                f"schedule total ({self.schedule.total}) must equal iters ({self.iters})"
            )

    def hidden_for(self, dim):
        if self.hidden > 0:
            return self.hidden
        return 256 if dim <= 4 else 1024

    def noise_dim_for(self, dim):
        if self.generator != "noise_concat":
            return 0
        return self.noise_dim if self.noise_dim > 0 else dim


def synthetic_config(dim, iters=20000, **overrides):
    """Lab defaults: one hidden layer, batch 128, lr 1e-4, betas (0, 0.9),
    20 map updates per potential update, linear-stepped smoothing from 0.2
    to 0.05 every 2000 steps. At d=256 the cost scale drops to 0.01 and the
    gradient penalty turns on."""
    base = dict(
        cost_alpha=0.01 if dim >= 256 else 1.0,
        lambda_r1=1.0 if dim >= 256 else 0.0,
        iters=iters,
        schedule=NoiseSchedule("gaussian_conv", 0.2, 0.05, 2000, iters),
    )
    base.update(overrides)
    return TrainerConfig(**base)


def otp_config(dim, iters=20000, **overrides):
    """Smoothed trainer with the decreasing schedule (the main method)."""
    return synthetic_config(dim, iters=iters, **overrides)


def otm_config(dim, iters=20000, **overrides):
    """Plain max-min baseline: no smoothing, deterministic generator."""
    overrides.setdefault("schedule", constant_schedule(0.0, total=iters))
    overrides.setdefault("generator", "deterministic")
    return synthetic_config(dim, iters=iters, **overrides)


def otm_s_config(dim, iters=20000, **overrides):
    """Stochastic-generator baseline: no smoothing, noise concatenation."""
    overrides.setdefault("generator", "noise_concat")
    return otm_config(dim, iters=iters, **overrides)


def constant_noise_config(dim, level=0.05, iters=20000, **overrides):
    """Ablation: train at the terminal noise level from the start."""
    overrides.setdefault("schedule", constant_schedule(level, total=iters))
    return synthetic_config(dim, iters=iters, **overrides)


# ---------------------------------------------------------------------------
# model pair
# ---------------------------------------------------------------------------


@dataclass
class ModelPair:
    T: nn.MlpParams
    V: object  # MlpParams or IcnnParams
    adam_T: nn.AdamState
    adam_V: nn.AdamState
    dim: int
    noise_dim: int      # 0 for the deterministic generator
    conv_kind: str      # which perturbation rule evaluation composes with


def build_model(cfg, dim, rng):
    hidden = cfg.hidden_for(dim)
    noise_dim = cfg.noise_dim_for(dim)
    T = nn.MlpParams.create((dim + noise_dim, hidden, dim), rng)
    if cfg.potential == "icnn":
        V = nn.IcnnParams.create((dim, hidden, 1), cfg.cost_alpha, rng)
    else:
        V = nn.MlpParams.create((dim, hidden, 1), rng)
    adam_T = nn.AdamState.create(T, cfg.lr, cfg.beta1, cfg.beta2)
    adam_V = nn.AdamState.create(V, cfg.lr, cfg.beta1, cfg.beta2)
    return ModelPair(T=T, V=V, adam_T=adam_T, adam_V=adam_V, dim=dim,
                     noise_dim=noise_dim, conv_kind=cfg.schedule.convolution_kind())


# ---------------------------------------------------------------------------
# losses
# ---------------------------------------------------------------------------


def potential_loss(V, T, x_tilde, y, lambda_r1, gen_noise=None):
    """Ascent objective for the potential: mean[-V(T(x~))] + mean[V(y)]
    minus the gradient penalty lambda * mean ||grad_y V(y)||^2.

    The map is held constant (its output is evaluated off-graph), so
    backprop through the returned scalar touches only potential
    parameters. The trainer minimizes the negation.
    """
    x_tilde = np.asarray(x_tilde, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x_tilde.shape[0] == 0 or y.shape[0] == 0:
        raise ContractError("batches must be nonempty")
    if x_tilde.shape[1] != y.shape[1]:
        raise ContractError(
            f"batch widths differ: {x_tilde.shape[1]} vs {y.shape[1]}"
        )
    with ad.stop_recording():
        t_out = nn.mlp_forward(nn.detached(T), _gen_input(x_tilde, gen_noise))
    loss = ad.sub(ad.tmean(nn.potential_value(V, y)),
                  ad.tmean(nn.potential_value(V, t_out)))
    if lambda_r1 > 0.0:
        y_leaf = Tensor(y, name="penalty_input")
        v_at_y = nn.potential_value(V, y_leaf)
        (gy,) = ad.grad(ad.tsum(v_at_y), [y_leaf], create_graph=True)
        penalty = ad.mul(ad.tmean(ad.tsum(ad.square(gy), axis=1)), lambda_r1)
        loss = ad.sub(loss, penalty)
    return loss


def map_loss(V, T, x_tilde, alpha, gen_noise=None):
    """Descent objective for the map: mean[alpha*||x~ - T(x~)||^2 - V(T(x~))].

    The potential's mean over target samples is constant in the map
    parameters and is omitted; gradients are identical. The potential is
    applied as a constant (frozen) function of the map output.
    """
    x_tilde = np.asarray(x_tilde, dtype=np.float64)
    if x_tilde.shape[0] == 0:
        raise ContractError("batch must be nonempty")
    t_out = nn.mlp_forward(T, _gen_input(x_tilde, gen_noise))
    cost = ad.mul(ad.tmean(ad.tsum(ad.square(ad.sub(x_tilde, t_out)), axis=1)), alpha)
    v_out = ad.tmean(nn.potential_value(nn.detached(V), t_out))
    return ad.sub(cost, v_out)


def _gen_input(x_tilde, gen_noise):
    if gen_noise is None:
        return x_tilde
    return np.concatenate([x_tilde, np.asarray(gen_noise, dtype=np.float64)], axis=1)


# ---------------------------------------------------------------------------
# training loop
# ---------------------------------------------------------------------------


@dataclass
class HistoryRow:
    iteration: int
    level: float
    loss_phi: float
    loss_theta: float
    d_cost: float = math.nan
    d_target: float = math.nan


@dataclass
class TrainHistory:
    rows: list = field(default_factory=list)

    def add(self, row):
        if self.rows and row.iteration <= self.rows[-1].iteration:
            raise ContractError("history iterations must be strictly increasing")
        self.rows.append(row)


def train(cfg, source, target, seed, eval_hook=None, eval_every=0, model=None):
    """Run the full alternating loop; returns (ModelPair, TrainHistory).

    Deterministic given (cfg, source, target, seed). ``eval_hook(k, model)``
    may return a dict with d_cost / d_target to attach to the history row
    logged at iteration k (requires eval_every > 0). Passing ``model``
    resumes from existing parameters instead of a fresh initialization.
    """
    if source.dim != target.dim:
        raise ConfigError(f"source dim {source.dim} != target dim {target.dim}")
    rng = np.random.default_rng(seed)
    if model is None:
        model = build_model(cfg, source.dim, rng)
    elif model.dim != source.dim:
        raise ConfigError(f"model dim {model.dim} != data dim {source.dim}")
    history = TrainHistory()

    phi_tensors = model.V.tensors()
    theta_tensors = model.T.tensors()
    phi_leaves = [t for _, t in phi_tensors]
    theta_leaves = [t for _, t in theta_tensors]

    for k in range(cfg.iters):
        level = level_at(cfg.schedule, k)

        x = dsets.sample(source, cfg.batch, rng)
        y = dsets.sample(target, cfg.batch, rng)
        x_tilde = perturb(x, cfg.schedule, k, rng)
        zg = _draw_gen_noise(model, cfg.batch, rng)
        lphi = potential_loss(model.V, model.T, x_tilde, y, cfg.lambda_r1, gen_noise=zg)
        phi_val = float(ad.value_of(lphi))
        _guard(phi_val, k, history, "potential")
        gphi = ad.grad(ad.neg(lphi), phi_leaves)
        nn.adam_step(model.adam_V, model.V,
                     {name: ad.value_of(g) for (name, _), g in zip(phi_tensors, gphi)})

        theta_val = math.nan
        for _ in range(cfg.k_t):
            x = dsets.sample(source, cfg.batch, rng)
            x_tilde = perturb(x, cfg.schedule, k, rng)
            zg = _draw_gen_noise(model, cfg.batch, rng)
            ltheta = map_loss(model.V, model.T, x_tilde, cfg.cost_alpha, gen_noise=zg)
            theta_val = float(ad.value_of(ltheta))
            _guard(theta_val, k, history, "map")
            gtheta = ad.grad(ltheta, theta_leaves)
            nn.adam_step(model.adam_T, model.T,
                         {name: ad.value_of(g) for (name, _), g in zip(theta_tensors, gtheta)})

        log_now = (k % cfg.log_every == 0) or (k == cfg.iters - 1)
        eval_now = eval_every > 0 and eval_hook is not None and (
            k % eval_every == 0 or k == cfg.iters - 1
        )
        if log_now or eval_now:
            row = HistoryRow(iteration=k, level=level, loss_phi=phi_val,
                             loss_theta=theta_val)
            if eval_now:
                extra = eval_hook(k, model)
                row.d_cost = extra.get("d_cost", math.nan)
                row.d_target = extra.get("d_target", math.nan)
            history.add(row)
    return model, history


def _draw_gen_noise(model, batch, rng):
    if model.noise_dim == 0:
        return None
    return rng.standard_normal((batch, model.noise_dim))


def _guard(value, k, history, which):
    if not math.isfinite(value):
        raise TrainingDiverged(f"non-finite {which} loss at iteration {k}", k, history)
    if abs(value) > DIVERGENCE_LIMIT:
        raise TrainingDiverged(
            f"{which} loss magnitude {value:.3e} exceeded {DIVERGENCE_LIMIT:.0e} "
            f"at iteration {k}", k, history)


# ---------------------------------------------------------------------------
# evaluation-time transport
# ---------------------------------------------------------------------------


def transport(model, x, rng, eps_eval):
    """Compose smoothing at eps_eval with the trained map.

    Draws fresh generator noise when the model has a stochastic input, so
    repeated calls on the same x give a sample from the learned plan.
    """
    if eps_eval < 0:
        raise ContractError(f"eps_eval must be >= 0, got {eps_eval}")
    x = np.asarray(x, dtype=np.float64)
    with ad.stop_recording():
        x_tilde = perturb_level(x, model.conv_kind, eps_eval, rng)
        zg = _draw_gen_noise(model, x.shape[0], rng)
        return nn.mlp_forward(nn.detached(model.T), _gen_input(x_tilde, zg))
