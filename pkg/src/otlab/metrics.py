"""Transport-cost error and target-distribution error for a trained pair.

d_cost compares the model's mean squared displacement (measured from the
clean source point, with the evaluation-time smoothing composed in front
of the map) against the true squared-W2 value; d_target is the empirical
squared-W2 between the pushforward and a fresh target batch, solved
exactly by the assignment oracle. Both average over independent repeats.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import datasets as dsets
from .errors import ReferenceUnavailable
from .oracle import w2sq_assignment
from .trainer import transport

ORACLE_FALLBACK_M = 4096


@dataclass
class MetricReport:
    d_cost: float
    d_target: float
    n_samples: int
    repeats: int
    d_cost_std: float
    d_target_std: float
    eps_eval: float
    reference: str  # "analytic" or "oracle(m=...)"
    w2sq_reference: float

    def to_dict(self):
        return {
            "d_cost": self.d_cost,
            "d_target": self.d_target,
            "n_samples": self.n_samples,
            "repeats": self.repeats,
            "d_cost_std": self.d_cost_std,
            "d_target_std": self.d_target_std,
            "eps_eval": self.eps_eval,
            "reference": self.reference,
            "w2sq_reference": self.w2sq_reference,
        }


def reference_cost(source, target, rng, oracle_fallback=True, oracle_m=ORACLE_FALLBACK_M):
    """True squared W2 of the pair: analytic when known, else estimated
    once by the assignment oracle on a large fresh sample."""
    try:
        return dsets.reference_w2sq(source, target), "analytic"
    except ReferenceUnavailable:
        if not oracle_fallback:
            raise
    xs = dsets.sample(source, oracle_m, rng)
    ys = dsets.sample(target, oracle_m, rng)
    return w2sq_assignment(xs, ys), f"oracle(m={oracle_m})"


def d_cost(model, source, target, n, repeats, rng, eps_eval,
           oracle_fallback=True):
    """|W2^2(mu, nu) - mean ||transport(x) - x||^2|, averaged over repeats."""
    ref, _ = reference_cost(source, target, rng, oracle_fallback)
    vals = _d_cost_samples(model, source, n, repeats, rng, eps_eval, ref)
    return float(np.mean(vals))


def _d_cost_samples(model, source, n, repeats, rng, eps_eval, ref):
    vals = []
    for _ in range(repeats):
        x = dsets.sample(source, n, rng)
        tx = transport(model, x, rng, eps_eval)
        cost = float(((tx - x) ** 2).sum(axis=1).mean())
        vals.append(abs(ref - cost))
    return np.array(vals)


def d_target(model, source, target, n, repeats, rng, eps_eval):
    """Mean over repeats of w2sq_assignment(pushforward batch, target batch)."""
    vals = _d_target_samples(model, source, target, n, repeats, rng, eps_eval)
    return float(np.mean(vals))


def _d_target_samples(model, source, target, n, repeats, rng, eps_eval):
    vals = []
    for _ in range(repeats):
        x = dsets.sample(source, n, rng)
        y = dsets.sample(target, n, rng)
        tx = transport(model, x, rng, eps_eval)
        vals.append(w2sq_assignment(tx, y))
    return np.array(vals)


def evaluate(model, source, target, rng, n=1024, repeats=10, eps_eval=0.0,
             oracle_fallback=True):
    """Full metric report with per-repeat spread."""
    ref, ref_kind = reference_cost(source, target, rng, oracle_fallback)
    cost_vals = _d_cost_samples(model, source, n, repeats, rng, eps_eval, ref)
    target_vals = _d_target_samples(model, source, target, n, repeats, rng, eps_eval)
    return MetricReport(
        d_cost=float(cost_vals.mean()),
        d_target=float(target_vals.mean()),
        n_samples=n,
        repeats=repeats,
        d_cost_std=float(cost_vals.std(ddof=1)) if repeats > 1 else 0.0,
        d_target_std=float(target_vals.std(ddof=1)) if repeats > 1 else 0.0,
        eps_eval=eps_eval,
        reference=ref_kind,
        w2sq_reference=float(ref),
    )


def target_sampling_floor(target, n, repeats, rng):
    """Empirical squared-W2 between two independent target batches: the
    finite-sample floor that d_target cannot beat at this n."""
    vals = []
    for _ in range(repeats):
        a = dsets.sample(target, n, rng)
        b = dsets.sample(target, n, rng)
        vals.append(w2sq_assignment(a, b))
    return float(np.mean(vals))
