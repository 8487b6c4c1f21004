"""Soft dynamic time warping: smoothed alignment cost, gradients and losses.

The soft variant replaces the hard minimum of classic DTW with a
log-sum-exp smoothed minimum controlled by gamma > 0, which makes the
alignment cost differentiable in the cost matrix. The hard recursion is
kept alongside as the gamma -> 0 oracle and for extracting discrete
alignment maps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Large-but-finite stand-in for +inf on the DP boundary. Used inside
# max-subtracted log-sum-exp so no actual infinities propagate.
BIG = 1e30


def _as_matrix(seq) -> np.ndarray:
    """Pose sequences become (N, dim) float arrays; Pose objects flatten."""
    if hasattr(seq, "as_array"):
        return seq.as_array()
    seq = list(seq) if not isinstance(seq, np.ndarray) else seq
    if len(seq) and hasattr(seq[0], "as_vector"):
        return np.stack([p.as_vector() for p in seq])
    return np.atleast_2d(np.asarray(seq, dtype=float))


@dataclass(frozen=True, eq=False)
class CostMatrix:
    """Pairwise squared Euclidean distances, keys along rows."""

    values: np.ndarray

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.values, dtype=float))
        if (v < 0).any():
            raise ValueError("cost entries must be non-negative")
        object.__setattr__(self, "values", v)

    @property
    def n_keys(self) -> int:
        return self.values.shape[0]

    @property
    def n_frames(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True, eq=False)
class SoftDtwResult:
    cumulative: np.ndarray  # (K+1, L+1) with the boundary row/column
    value: float
    gamma: float


@dataclass(frozen=True, eq=False)
class AlignmentMap:
    """tau[i] is the motion frame index aligned with key i (0-based)."""

    tau: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.tau, dtype=int)
        if (np.diff(t) < 0).any():
            raise ValueError("alignment map must be non-decreasing")
        object.__setattr__(self, "tau", t)

    def __getitem__(self, i: int) -> int:
        return int(self.tau[i])

    def __len__(self) -> int:
        return len(self.tau)


def cost_matrix(keys, motion) -> CostMatrix:
    """Squared Euclidean distances between key poses and motion poses."""
    k = _as_matrix(keys)
    m = _as_matrix(motion)
    if k.shape[1] != m.shape[1]:
        raise ValueError("key and motion pose dimensions differ")
    diff = k[:, None, :] - m[None, :, :]
    return CostMatrix(np.einsum("klm,klm->kl", diff, diff))


def _softmin3(a: float, b: float, c: float, gamma: float) -> float:
    lo = min(a, b, c)
    s = (
        np.exp(-(a - lo) / gamma)
        + np.exp(-(b - lo) / gamma)
        + np.exp(-(c - lo) / gamma)
    )
    return lo - gamma * float(np.log(s))


def soft_dtw(d: CostMatrix | np.ndarray, gamma: float) -> SoftDtwResult:
    """Smoothed alignment cost via the soft-min recursion.

    Boundary: R[0,0] = 0 and the first row/column are +inf, forcing both
    endpoints to align. Each cell adds its cost to the soft minimum of the
    three predecessors, evaluated in max-subtracted log-sum-exp form.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive; use hard_dtw for the exact minimum")
    dd = d.values if isinstance(d, CostMatrix) else np.atleast_2d(np.asarray(d, dtype=float))
    n_k, n_l = dd.shape
    r = np.full((n_k + 1, n_l + 1), BIG)
    r[0, 0] = 0.0
    for i in range(1, n_k + 1):
        for j in range(1, n_l + 1):
            r[i, j] = dd[i - 1, j - 1] + _softmin3(
                r[i - 1, j], r[i, j - 1], r[i - 1, j - 1], gamma
            )
    return SoftDtwResult(r, float(r[n_k, n_l]), gamma)


def soft_dtw_grad(d: CostMatrix | np.ndarray, gamma: float) -> np.ndarray:
    """d(soft alignment cost)/dD as a (K, L) occupancy matrix, entries >= 0."""
    dd = d.values if isinstance(d, CostMatrix) else np.atleast_2d(np.asarray(d, dtype=float))
    n_k, n_l = dd.shape
    r = soft_dtw(dd, gamma).cumulative

    # padded copies for the backward recursion
    rp = np.full((n_k + 2, n_l + 2), -BIG)
    rp[: n_k + 1, : n_l + 1] = r
    rp[0, 1:] = -BIG
    rp[1:, 0] = -BIG
    rp[0, 0] = 0.0
    rp[n_k + 1, n_l + 1] = r[n_k, n_l]
    dp = np.zeros((n_k + 2, n_l + 2))
    dp[1 : n_k + 1, 1 : n_l + 1] = dd

    e = np.zeros((n_k + 2, n_l + 2))
    e[n_k + 1, n_l + 1] = 1.0
    for i in range(n_k, 0, -1):
        for j in range(n_l, 0, -1):
            # exponents are <= 0 by the forward recursion, so no overflow
            a = np.exp((rp[i + 1, j] - rp[i, j] - dp[i + 1, j]) / gamma)
            b = np.exp((rp[i, j + 1] - rp[i, j] - dp[i, j + 1]) / gamma)
            c = np.exp((rp[i + 1, j + 1] - rp[i, j] - dp[i + 1, j + 1]) / gamma)
            e[i, j] = a * e[i + 1, j] + b * e[i, j + 1] + c * e[i + 1, j + 1]
    return e[1 : n_k + 1, 1 : n_l + 1]


def hard_dtw(d: CostMatrix | np.ndarray) -> tuple[float, list[tuple[int, int]]]:
    """Classic min-cost alignment with backtrace.

    Returns (value, path) with the path as 0-based (key, frame) pairs,
    monotone from (0, 0) to (K-1, L-1). Backtrace ties prefer the diagonal,
    then the key advance, then the frame advance.
    """
    dd = d.values if isinstance(d, CostMatrix) else np.atleast_2d(np.asarray(d, dtype=float))
    n_k, n_l = dd.shape
    r = np.full((n_k + 1, n_l + 1), BIG)
    r[0, 0] = 0.0
    for i in range(1, n_k + 1):
        for j in range(1, n_l + 1):
            r[i, j] = dd[i - 1, j - 1] + min(r[i - 1, j], r[i, j - 1], r[i - 1, j - 1])

    path = []
    i, j = n_k, n_l
    while i >= 1 and j >= 1:
        path.append((i - 1, j - 1))
        if i == 1 and j == 1:
            break
        options = (
            (r[i - 1, j - 1], i - 1, j - 1),
            (r[i - 1, j], i - 1, j),
            (r[i, j - 1], i, j - 1),
        )
        _, i, j = min(options, key=lambda o: o[0])
    path.reverse()
    return float(r[n_k, n_l]), path


def alignment_map(d: CostMatrix | np.ndarray) -> AlignmentMap:
    """Assign each key pose a motion frame from the hard-DTW backtrace.

    When a key aligns to several frames, the frame with the smallest cost
    wins (ties break toward the earliest frame).
    """
    dd = d.values if isinstance(d, CostMatrix) else np.atleast_2d(np.asarray(d, dtype=float))
    n_k, n_l = dd.shape
    if n_k > n_l:
        raise ValueError("alignment extraction needs at least as many frames as keys")
    _, path = hard_dtw(dd)
    tau = np.zeros(n_k, dtype=int)
    for i in range(n_k):
        frames = [j for (k, j) in path if k == i]
        costs = dd[i, frames]
        tau[i] = frames[int(np.argmin(costs))]
    return AlignmentMap(tau)


def recon_loss(keys, motion, tau: AlignmentMap) -> float:
    """Mean squared pose error between keys and their aligned frames."""
    k = _as_matrix(keys)
    m = _as_matrix(motion)
    diff = k - m[tau.tau]
    return float(np.mean(np.sum(diff * diff, axis=1)) if k.shape[0] else 0.0)


def combined_loss(
    keys,
    motion,
    gamma: float,
    lam: float,
    tau: AlignmentMap | None = None,
) -> tuple[float, np.ndarray]:
    """Aligned reconstruction error plus lam * soft alignment cost.

    Returns (loss, gradient w.r.t. the motion frames, shape (L, dim)). The
    alignment map is treated as a constant inside one evaluation; callers
    running an optimizer should refresh it between steps (pass tau=None to
    recompute here).
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if lam < 0:
        raise ValueError("lam must be non-negative")
    k = _as_matrix(keys)
    m = _as_matrix(motion)
    d = cost_matrix(k, m)
    if tau is None:
        tau = alignment_map(d)

    sdtw = soft_dtw(d, gamma)
    occupancy = soft_dtw_grad(d, gamma)
    rec = recon_loss(k, m, tau)
    loss = rec + lam * sdtw.value

    grad = np.zeros_like(m)
    # chain rule: dD[i,j]/dm[j] = 2 (m[j] - k[i])
    col_mass = occupancy.sum(axis=0)
    grad += lam * 2.0 * (m * col_mass[:, None] - occupancy.T @ k)
    n_k = k.shape[0]
    for i in range(n_k):
        grad[tau[i]] += (2.0 / n_k) * (m[tau[i]] - k[i])
    return float(loss), grad
