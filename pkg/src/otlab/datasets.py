"""Seeded samplers for the synthetic source/target families.

The four lab families live in even dimension d with a block split
n = d/2: a point is (first block, second block) with each block in R^n
and e1 = (1, 0, ..., 0) in R^n.

    perpendicular   source (U[-1,1]^n, 0)        target (0, U[-1,1]^n)
    parallel        source (U[-1,1]^n, 0)        target (U[-1,1]^n, e1)
    one_to_many     source (U[-1,1]^n, 0)        target (U[-1,1]^n, +/-e1 w.p. 1/2)
    grid            source (U[-1,1]^n, G)        target (G, U[-1,1]^n)

where G puts mass 1/4 on each of {-3/4, -1/4, 1/4, 3/4} * e1. Gaussian
and Gaussian-mixture families are included on top for cross-checking the
empirical solvers against the closed form.

Analytic squared-W2 references use unit cost ||x - y||^2 throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ReferenceUnavailable

BLOCK_FAMILIES = ("perpendicular", "parallel", "one_to_many", "grid")
FAMILIES = BLOCK_FAMILIES + ("gaussian", "gaussian_mixture")

_GRID_ATOMS = (-0.75, -0.25, 0.25, 0.75)


@dataclass(frozen=True)
class SyntheticDataset:
    family: str
    dim: int
    role: str  # "source" | "target"
    mean: object = None        # gaussian only
    cov: object = None         # gaussian only
    components: tuple = ()     # gaussian_mixture: ((weight, mean, cov), ...)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown dataset family {self.family!r}")
        if self.role not in ("source", "target"):
            raise ConfigError(f"role must be source or target, got {self.role!r}")
        if self.family in BLOCK_FAMILIES:
            if self.dim < 2 or self.dim % 2 != 0:
                raise ConfigError(
                    f"{self.family} requires an even dimension >= 2, got {self.dim}"
                )
        if self.family == "gaussian":
            mean = np.asarray(self.mean, dtype=np.float64)
            cov = np.asarray(self.cov, dtype=np.float64)
            if mean.shape != (self.dim,) or cov.shape != (self.dim, self.dim):
                raise ConfigError("gaussian mean/cov shapes do not match dim")

    @property
    def block(self):
        return self.dim // 2


def make_pair(family, dim, **kwargs):
    """Source and target datasets for a named family."""
    src = SyntheticDataset(family=family, dim=dim, role="source", **kwargs)
    tgt = SyntheticDataset(family=family, dim=dim, role="target", **kwargs)
    return src, tgt


def gaussian_dataset(dim, mean, cov, role="source"):
    return SyntheticDataset(
        family="gaussian", dim=dim, role=role,
        mean=np.asarray(mean, dtype=np.float64),
        cov=np.asarray(cov, dtype=np.float64),
    )


def sample(ds, count, rng):
    """Draw count i.i.d. points, shape [count, dim]."""
    if count < 1:
        raise ConfigError(f"count must be >= 1, got {count}")
    if ds.family in BLOCK_FAMILIES:
        return _sample_block_family(ds, count, rng)
    if ds.family == "gaussian":
        mean = np.asarray(ds.mean, dtype=np.float64)
        cov = np.asarray(ds.cov, dtype=np.float64)
        return rng.multivariate_normal(mean, cov, size=count, method="cholesky")
    # gaussian_mixture
    weights = np.array([c[0] for c in ds.components], dtype=np.float64)
    weights = weights / weights.sum()
    idx = rng.choice(len(ds.components), size=count, p=weights)
    out = np.empty((count, ds.dim))
    for j, (_, mean, cov) in enumerate(ds.components):
        mask = idx == j
        k = int(mask.sum())
        if k:
            out[mask] = rng.multivariate_normal(
                np.asarray(mean, dtype=np.float64),
                np.asarray(cov, dtype=np.float64),
                size=k, method="cholesky",
            )
    return out


def _sample_block_family(ds, count, rng):
    n = ds.block
    out = np.zeros((count, ds.dim))
    uniform = rng.uniform(-1.0, 1.0, size=(count, n))
    if ds.family == "perpendicular":
        if ds.role == "source":
            out[:, :n] = uniform
        else:
            out[:, n:] = uniform
        return out
    if ds.family == "parallel":
        out[:, :n] = uniform
        if ds.role == "target":
            out[:, n] = 1.0
        return out
    if ds.family == "one_to_many":
        out[:, :n] = uniform
        if ds.role == "target":
            out[:, n] = rng.choice([1.0, -1.0], size=count)
        return out
    # grid: one block uniform, the other a four-atom bar on the e1 axis
    atoms = rng.choice(_GRID_ATOMS, size=count)
    if ds.role == "source":
        out[:, :n] = uniform
        out[:, n] = atoms
    else:
        out[:, 0] = atoms
        out[:, n:] = uniform
    return out


# ---------------------------------------------------------------------------
# analytic references (unit cost ||x - y||^2)
# ---------------------------------------------------------------------------


def reference_w2sq(source, target):
    """Exact squared W2 for supported pairs; raises ReferenceUnavailable else.

    perpendicular: supports are orthogonal, so the cross term vanishes and
    every coupling costs E||x||^2 + E||y||^2 = 2n/3.
    parallel / one_to_many: the second block always moves by exactly a unit
    vector while the first block can ride along for free, so the value is 1.
    """
    _check_pair(source, target)
    n = source.dim // 2 if source.family in BLOCK_FAMILIES else None
    if source.family == "perpendicular":
        return 2.0 * n / 3.0
    if source.family in ("parallel", "one_to_many"):
        return 1.0
    if source.family == "gaussian":
        from .oracle import w2sq_gaussian

        return w2sq_gaussian(source.mean, source.cov, target.mean, target.cov)
    raise ReferenceUnavailable(
        f"no analytic squared-W2 reference for family {source.family!r}"
    )


def reference_conditional(source, target, x, rng):
    """One draw from the known optimal conditional plan at source point x.

    parallel: deterministic lift of the second block onto e1.
    one_to_many: the same lift onto +e1 or -e1 with probability 1/2 each.
    Other families (perpendicular included: its plan is not unique) raise.
    """
    _check_pair(source, target)
    x = np.asarray(x, dtype=np.float64)
    n = source.dim // 2
    if source.family == "parallel":
        y = x.copy()
        y[n] = 1.0
        return y
    if source.family == "one_to_many":
        y = x.copy()
        y[n] = 1.0 if rng.uniform() < 0.5 else -1.0
        return y
    raise ReferenceUnavailable(
        f"no closed-form optimal plan for family {source.family!r}"
    )


def _check_pair(source, target):
    if source.family != target.family or source.dim != target.dim:
        raise ConfigError(
            f"mismatched pair: {source.family}/{source.dim} vs {target.family}/{target.dim}"
        )
    if source.role != "source" or target.role != "target":
        raise ConfigError("reference expects (source, target) in that order")
