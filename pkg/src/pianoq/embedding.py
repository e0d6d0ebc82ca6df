"""2-D projections of ERB band vectors: PCA and exact t-SNE.

Both methods are deterministic (PCA by a fixed sign convention, t-SNE by
seeded initialization) and never mutate their input.  t-SNE is the exact
O(N^2) formulation: Gaussian input affinities with per-point bandwidths
found by binary search, Student-t output kernel, early exaggeration, and
momentum gradient descent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInput

_EE_FACTOR = 12.0
_EE_ITERS = 250
_LEARNING_RATE = 200.0
_MOMENTUM_EARLY = 0.5
_MOMENTUM_LATE = 0.8
_ENTROPY_TOL = 1e-5
_P_FLOOR = 1e-12


@dataclass
class Embedding2D:
    """Projected points with the settings that produced them."""

    points: np.ndarray  # (N, 2)
    labels: list | None
    method: str  # "pca" or "tsne"
    meta: dict


def _validated(points: np.ndarray, min_rows: int) -> np.ndarray:
    x = np.asarray(points, dtype=np.float64)
    if x.ndim != 2:
        raise DegenerateInput(f"expected a 2-D point matrix, got shape {x.shape}")
    if x.shape[0] < min_rows:
        raise DegenerateInput(f"need at least {min_rows} points, got {x.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise DegenerateInput("input contains non-finite entries")
    return x


def pca_2d(points: np.ndarray, labels=None) -> Embedding2D:
    """Project onto the top-2 eigenvectors of the sample covariance.

    Data are mean-centered first.  Each component's sign is fixed so its
    largest-magnitude loading is positive.  meta carries the explained
    variance share of the two components.
    """
    x = _validated(points, 3)
    centered = x - x.mean(axis=0)
    cov = np.cov(centered, rowvar=False, ddof=1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    eigvals = eigvals[order]
    eigvecs = eigvecs[:, order]

    components = eigvecs[:, :2]
    for k in range(2):
        lead = np.argmax(np.abs(components[:, k]))
        if components[lead, k] < 0:
            components[:, k] = -components[:, k]

    total = eigvals.sum()
    shares = (eigvals[:2] / total) if total > 0 else np.zeros(2)
    return Embedding2D(
        points=centered @ components,
        labels=list(labels) if labels is not None else None,
        method="pca",
        meta={"explained_variance": (float(shares[0]), float(shares[1]))},
    )


def _conditional_affinities(x: np.ndarray, perplexity: float) -> np.ndarray:
    """Row-stochastic Gaussian affinities matched to the entropy target.

    For each point the precision beta = 1/(2 sigma^2) is bisected until the
    row entropy is within 1e-5 of ln(perplexity).
    """
    n = x.shape[0]
    sq = np.sum(x * x, axis=1)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * (x @ x.T), 0.0)
    target = np.log(perplexity)
    p = np.zeros((n, n))

    for i in range(n):
        di = np.delete(d2[i], i)
        beta, beta_lo, beta_hi = 1.0, 0.0, np.inf
        for _ in range(100):
            w = np.exp(-di * beta)
            total = w.sum()
            if total <= 0:
                entropy, row = 0.0, w
            else:
                row = w / total
                # H = sum(beta*d*p) + ln(total), the stable entropy form
                entropy = beta * np.dot(di, row) + np.log(total)
            diff = entropy - target
            if abs(diff) < _ENTROPY_TOL:
                break
            if diff > 0:  # entropy too high -> tighten the kernel
                beta_lo = beta
                beta = beta * 2.0 if beta_hi == np.inf else (beta + beta_hi) / 2.0
            else:
                beta_hi = beta
                beta = beta / 2.0 if beta_lo == 0.0 else (beta + beta_lo) / 2.0
        p[i, np.arange(n) != i] = row
    return p


def tsne_2d(
    points: np.ndarray,
    perplexity: float = 30.0,
    iterations: int = 1000,
    seed: int = 0,
    labels=None,
) -> Embedding2D:
    """Exact t-SNE to 2-D.

    Affinities are symmetrized conditionals; the embedding starts from
    seeded 1e-4-scale Gaussian noise and follows gradient descent with
    early exaggeration x12 for 250 iterations, learning rate 200, and
    momentum 0.5 switching to 0.8 at iteration 250.  The per-iteration
    KL divergence is recorded in meta["kl_history"].
    """
    x = _validated(points, 4)
    n = x.shape[0]
    if n < 3 * perplexity:
        perplexity = max(1.0, (n - 1) // 3)

    cond = _conditional_affinities(x, perplexity)
    p = (cond + cond.T) / (2.0 * n)
    p = np.maximum(p, _P_FLOOR)

    rng = np.random.default_rng(seed)
    y = rng.standard_normal((n, 2)) * 1e-4
    velocity = np.zeros_like(y)
    kl_history = np.empty(iterations)
    off_diag = ~np.eye(n, dtype=bool)

    for it in range(iterations):
        p_eff = p * _EE_FACTOR if it < _EE_ITERS else p
        momentum = _MOMENTUM_EARLY if it < _EE_ITERS else _MOMENTUM_LATE

        sq = np.sum(y * y, axis=1)
        num = 1.0 / (1.0 + sq[:, None] + sq[None, :] - 2.0 * (y @ y.T))
        np.fill_diagonal(num, 0.0)
        q = np.maximum(num / num.sum(), _P_FLOOR)

        pq = (p_eff - q) * num
        grad = 4.0 * (np.diag(pq.sum(axis=1)) - pq) @ y

        velocity = momentum * velocity - _LEARNING_RATE * grad
        y = y + velocity
        y = y - y.mean(axis=0)

        kl_history[it] = np.sum(p[off_diag] * np.log(p[off_diag] / q[off_diag]))

    return Embedding2D(
        points=y,
        labels=list(labels) if labels is not None else None,
        method="tsne",
        meta={
            "perplexity": float(perplexity),
            "iterations": int(iterations),
            "seed": int(seed),
            "kl_history": kl_history,
        },
    )
