"""Dev-only: full-scale training runs to validate acceptance thresholds.

Not part of the package or test suite; writes a JSON summary to /tmp.
"""
import json
import time

import numpy as np

from otlab import datasets as dsets, metrics
from otlab.trainer import (
    constant_noise_config,
    otm_config,
    otm_s_config,
    otp_config,
    train,
    transport,
)

OUT = "/tmp/validate_summary.json"
results = {}


def log(name, **kw):
    results[name] = kw
    with open(OUT, "w") as fh:
        json.dump(results, fh, indent=2)
    print(name, kw, flush=True)


def atom_coverage(model, src, eps, seed):
    rng = np.random.default_rng(seed)
    x = dsets.sample(src, 4096, rng)
    tx = transport(model, x, rng, eps)
    n = src.dim // 2
    up = float((tx[:, n] > 0).mean())
    return up, 1.0 - up


def run(name, cfg, family, dim, seed=0, eps=None):
    src, tgt = dsets.make_pair(family, dim)
    t0 = time.perf_counter()
    model, hist = train(cfg, src, tgt, seed=seed)
    mins = (time.perf_counter() - t0) / 60
    eps = cfg.schedule.sigma_min if eps is None else eps
    rng = np.random.default_rng(1234)
    rep = metrics.evaluate(model, src, tgt, rng, n=1024, repeats=10, eps_eval=eps)
    entry = dict(minutes=round(mins, 1), d_cost=rep.d_cost, d_target=rep.d_target,
                 d_cost_std=rep.d_cost_std, d_target_std=rep.d_target_std)
    if family == "one_to_many":
        up, down = atom_coverage(model, src, eps, seed=4321)
        entry.update(up=up, down=down)
    log(name, **entry)
    return model


if __name__ == "__main__":
    run("otp_d16_o2m", otp_config(16), "one_to_many", 16)
    run("otm_d16_o2m", otm_config(16), "one_to_many", 16)
    run("const_d16_o2m", constant_noise_config(16, level=0.05), "one_to_many", 16)
    run("otp_d2_perp", otp_config(2), "perpendicular", 2)
    run("icnn_d2_perp", otp_config(2, potential="icnn"), "perpendicular", 2)
    run("otp_nc_d2_o2m", otp_config(2, generator="noise_concat"), "one_to_many", 2)
    run("otp_d2_parallel", otp_config(2), "parallel", 2)
    print("ALL DONE")
