"""Ground-truth machinery for empirical optimal transport.

All solvers take two equal-size point clouds with uniform weights and
report the squared-W2 value per point (mean squared displacement under
the optimal coupling), so the numbers are directly comparable across
solvers and sample sizes.

``w2sq_assignment`` is the workhorse referee and delegates the exact
m x m assignment to scipy's Jonker-Volgenant implementation; the brute
force enumerator, the log-domain Sinkhorn, and the Gaussian closed form
are independent routes used to cross-check it and each other.
"""

from __future__ import annotations

from itertools import permutations

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ContractError, ShapeError, SinkhornError

BRUTEFORCE_MAX = 8
ASSIGNMENT_MAX = 8192


def pairwise_sq_dists(X, Y):
    """Squared euclidean distance matrix, clamped at 0 against roundoff."""
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.ndim != 2 or Y.ndim != 2 or X.shape[1] != Y.shape[1]:
        raise ShapeError(f"point clouds must be [m, d] with equal d, got {X.shape} and {Y.shape}")
    sq = (X * X).sum(axis=1)[:, None] + (Y * Y).sum(axis=1)[None, :] - 2.0 * (X @ Y.T)
    np.maximum(sq, 0.0, out=sq)
    return sq


def _check_equal_sizes(X, Y):
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.shape != Y.shape:
        raise ContractError(f"equal-size clouds required, got {X.shape} vs {Y.shape}")
    return X, Y


def w2sq_bruteforce(X, Y):
    """Exact value by enumerating all m! pairings; refuses m > 8.

    Distances come from explicit differencing (not the dot-product trick),
    so identical clouds report exactly zero.
    """
    X, Y = _check_equal_sizes(X, Y)
    m = X.shape[0]
    if m > BRUTEFORCE_MAX:
        raise ContractError(f"brute force capped at m={BRUTEFORCE_MAX}, got {m}")
    diff = X[:, None, :] - Y[None, :, :]
    C = (diff * diff).sum(axis=2)
    perms = np.array(list(permutations(range(m))))
    costs = C[np.arange(m)[None, :], perms].sum(axis=1)
    return float(costs.min()) / m


def w2sq_assignment(X, Y):
    """Exact value via the linear assignment problem (O(m^3) family)."""
    X, Y = _check_equal_sizes(X, Y)
    m = X.shape[0]
    if m > ASSIGNMENT_MAX:
        raise ContractError(f"assignment solver capped at m={ASSIGNMENT_MAX}, got {m}")
    C = pairwise_sq_dists(X, Y)
    rows, cols = linear_sum_assignment(C)
    return float(C[rows, cols].sum()) / m


def w2sq_sinkhorn(X, Y, epsilon_reg=1e-3, max_iter=5000, tol=1e-3):
    """Entropic OT cost from converged log-domain Sinkhorn scalings.

    Runs with epsilon annealing (halving warm starts down to the target)
    so that epsilon_reg = 1e-3 stays stable at f64. ``tol`` bounds the
    total L1 violation of the unmatched marginal; mass misplaced this
    late sits on near-tied entries, so the cost is far more accurate
    than the raw bound suggests. The reported value is the transport
    cost of the entropic plan, without debiasing, hence upper-biased by
    O(epsilon * log m) relative to the exact value.
    """
    X, Y = _check_equal_sizes(X, Y)
    if epsilon_reg <= 0:
        raise ContractError(f"epsilon_reg must be positive, got {epsilon_reg}")
    m = X.shape[0]
    C = pairwise_sq_dists(X, Y)
    log_w = -np.log(m)  # uniform weights

    f = np.zeros(m)
    g = np.zeros(m)

    eps_path = []
    eps = max(float(C.max()), epsilon_reg)
    while eps > epsilon_reg * 1.0001:
        eps_path.append(eps)
        eps /= 2.0
    eps_path.append(epsilon_reg)

    iters_left = max_iter
    violation = np.inf
    for stage, eps in enumerate(eps_path):
        final = stage == len(eps_path) - 1
        stage_tol = tol if final else max(tol, 1e-3)
        budget = iters_left if final else min(iters_left, 200)
        used = 0
        while used < budget:
            f = -eps * _logsumexp((g[None, :] - C) / eps + log_w, axis=1)
            g = -eps * _logsumexp((f[:, None] - C) / eps + log_w, axis=0)
            used += 1
            # columns are exact right after the g-update; rows measure progress
            log_plan = (f[:, None] + g[None, :] - C) / eps + 2.0 * log_w
            row = np.exp(_logsumexp(log_plan, axis=1))
            violation = float(np.abs(row - 1.0 / m).sum())
            if violation < stage_tol:
                break
        iters_left -= used
        if final and violation >= tol:
            raise SinkhornError(
                f"sinkhorn did not converge (L1 marginal violation {violation:.3e} "
                f"after {max_iter} iterations)",
                violation,
            )
    plan = np.exp((f[:, None] + g[None, :] - C) / epsilon_reg + 2.0 * log_w)
    return float((plan * C).sum())


def _logsumexp(A, axis):
    hi = A.max(axis=axis, keepdims=True)
    out = np.log(np.exp(A - hi).sum(axis=axis, keepdims=True)) + hi
    return np.squeeze(out, axis=axis)


# ---------------------------------------------------------------------------
# Gaussian closed form
# ---------------------------------------------------------------------------


def w2sq_gaussian(mean1, cov1, mean2, cov2):
    """||m1-m2||^2 + tr(C1 + C2 - 2 (C2^1/2 C1 C2^1/2)^1/2)."""
    m1 = np.asarray(mean1, dtype=np.float64).ravel()
    m2 = np.asarray(mean2, dtype=np.float64).ravel()
    C1 = _check_psd(cov1, "cov1")
    C2 = _check_psd(cov2, "cov2")
    if m1.shape != m2.shape or C1.shape != (m1.size, m1.size) or C2.shape != C1.shape:
        raise ShapeError("gaussian moments have inconsistent shapes")
    s2 = _sqrtm_psd(C2)
    cross = _sqrtm_psd(s2 @ C1 @ s2)
    val = float(((m1 - m2) ** 2).sum() + np.trace(C1) + np.trace(C2) - 2.0 * np.trace(cross))
    return max(val, 0.0)


def _check_psd(C, name, tol=1e-9):
    C = np.asarray(C, dtype=np.float64)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise ShapeError(f"{name} must be a square matrix, got shape {C.shape}")
    if not np.allclose(C, C.T, atol=tol):
        raise ContractError(f"{name} is not symmetric")
    w = np.linalg.eigvalsh(C)
    if w.min() < -tol * max(1.0, w.max()):
        raise ContractError(f"{name} is not positive semidefinite (min eig {w.min():.3e})")
    return C


def _sqrtm_psd(C):
    """Symmetric PSD square root via eigendecomposition, eigenvalues clamped at 0."""
    w, V = np.linalg.eigh((C + C.T) / 2.0)
    w = np.clip(w, 0.0, None)
    return (V * np.sqrt(w)) @ V.T
