"""Dev-only: OTM d=16 seed/init study for criterion-4 calibration."""
import json
import time

import numpy as np

from otlab import autodiff as ad
from otlab import datasets as dsets, metrics
from otlab.trainer import build_model, otm_config, otp_config, train

OUT = "/tmp/otm_study.json"
results = {}


def log(name, **kw):
    results[name] = kw
    with open(OUT, "w") as fh:
        json.dump(results, fh, indent=2)
    print(name, kw, flush=True)


def torch_style_init(model, seed):
    # U(-1/sqrt(fan_in), 1/sqrt(fan_in)) on weights AND biases
    r = np.random.default_rng(seed + 777)
    for net in (model.T, model.V):
        for layer in net.layers:
            fan_in = layer.W.data.shape[1]
            bound = 1.0 / np.sqrt(fan_in)
            layer.W.data[:] = r.uniform(-bound, bound, layer.W.data.shape)
            layer.b.data[:] = r.uniform(-bound, bound, layer.b.data.shape)
    return model


def study(name, seed, init="default", cfg=None):
    src, tgt = dsets.make_pair("one_to_many", 16)
    if cfg is None:
        cfg = otm_config(16)
    model = None
    if init == "torch":
        model = torch_style_init(build_model(cfg, 16, np.random.default_rng(seed)), seed)
    track = []
    erng = np.random.default_rng(31337)

    def hook(k, m):
        d_t = metrics.d_target(m, src, tgt, n=1024, repeats=2, rng=erng, eps_eval=0.0)
        track.append((k, round(d_t, 3)))
        return {"d_target": d_t}

    eps = cfg.schedule.sigma_min
    t0 = time.perf_counter()
    model, _ = train(cfg, src, tgt, seed=seed, eval_hook=hook, eval_every=2000, model=model)
    rng = np.random.default_rng(1234)
    rep = metrics.evaluate(model, src, tgt, rng, n=1024, repeats=10, eps_eval=eps)
    x = dsets.sample(src, 4096, rng)
    from otlab.trainer import transport
    tx = transport(model, x, rng, eps)
    up = float((tx[:, 8] > 0).mean())
    vmax = max(float(np.abs(ad.value_of(t)).max()) for _, t in model.V.tensors())
    log(name, minutes=round((time.perf_counter() - t0) / 60, 1),
        d_target=rep.d_target, d_cost=rep.d_cost, up=up, v_max=vmax, track=track)


if __name__ == "__main__":
    from otlab.trainer import constant_noise_config
    for seed in (1, 2, 3):
        study(f"otm_seed{seed}", seed)
    study("otm_torchinit_seed0", 0, init="torch")
    study("otm_torchinit_seed1", 1, init="torch")
    for seed in (1, 2):
        study(f"const_seed{seed}", seed, cfg=constant_noise_config(16, level=0.05))
    print("STUDY DONE")
