"""Dev-only: criterion-5 margin probes; runs after the OTM study."""
import json
import os
import time

import numpy as np

from otlab import datasets as dsets, metrics
from otlab.trainer import otp_config, train

OUT = "/tmp/margin_probes.json"
results = {}

# wait until the OTM study finishes before grabbing the core
while not os.path.exists("/tmp/otm_study.json") or \
        "STUDY DONE" not in open("/tmp/otm_study.log").read():
    time.sleep(60)

for seed in (1, 2):
    src, tgt = dsets.make_pair("perpendicular", 2)
    model, _ = train(otp_config(2), src, tgt, seed=seed)
    rng = np.random.default_rng(1234)
    rep = metrics.evaluate(model, src, tgt, rng, n=1024, repeats=10, eps_eval=0.05)
    results[f"otp_d2_perp_seed{seed}"] = dict(d_cost=rep.d_cost, d_target=rep.d_target)
    with open(OUT, "w") as fh:
        json.dump(results, fh, indent=2)
    print(seed, rep.d_cost, rep.d_target, flush=True)
print("PROBES DONE")
