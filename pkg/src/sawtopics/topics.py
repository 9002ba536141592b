"""Topic recovery: represent each word's co-occurrence profile as a convex
combination of the anchor rows by per-row KL minimization on the simplex,
then convert the word-to-topic posteriors into the word-topic matrix by a
Bayes step.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .anchors import AnchorSet
from .cooccur import CooccurrenceStats

log = logging.getLogger(__name__)

LOG_FLOOR = 1e-12  # floor inside logs so disjoint supports stay finite


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, worst_row: int):
        super().__init__(message)
        self.worst_row = worst_row


@dataclass(frozen=True, eq=False)
class TopicModel:
    """Row-stochastic theta (word -> topic posterior, anchor rows pinned to
    indicators), the column-stochastic word-topic matrix A (None until the
    Bayes step runs), and the per-row KL residuals of the fit."""

    theta: np.ndarray
    A: np.ndarray | None
    anchors: AnchorSet
    residuals: np.ndarray

    @property
    def k(self) -> int:
        return self.theta.shape[1]


def kl_divergence(p, q, floor: float = LOG_FLOOR) -> float:
    """KL(p || q) with 0 log 0 = 0 and q floored at ``floor`` inside the log."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {q.shape}")
    mask = p > 0
    return float(np.sum(p[mask] * (np.log(p[mask]) - np.log(np.maximum(q[mask], floor)))))


@dataclass(frozen=True, eq=False)
class RowFit:
    theta: np.ndarray
    objective: float
    iterations: int
    converged: bool
    trace: np.ndarray  # objective value at the start and after each accepted step


def minimize_row_kl(
    p_row: np.ndarray,
    B: np.ndarray,
    tol: float = 1e-10,
    max_iter: int = 1000,
    step0: float = 1.0,
    floor: float = LOG_FLOOR,
) -> RowFit:
    """Minimize KL(p_row || theta @ B) over the simplex by exponentiated
    gradient with a halving line search, so the objective never increases.

    Stops when the relative objective drop falls below ``tol`` or when no
    step length yields a decrease (numerical optimum). Hitting ``max_iter``
    without either leaves ``converged`` False for the caller to handle.
    """
    p = np.asarray(p_row, dtype=float)
    B = np.asarray(B, dtype=float)
    k = B.shape[0]
    mask = p > 0
    p_pos = p[mask]
    plogp = float(np.sum(p_pos * np.log(p_pos))) if p_pos.size else 0.0
    Bm = B[:, mask]

    def objective(th: np.ndarray) -> float:
        mix = th @ Bm
        return plogp - float(np.sum(p_pos * np.log(np.maximum(mix, floor))))

    theta = np.full(k, 1.0 / k)
    f = objective(theta)
    trace = [f]
    step = step0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        mix = theta @ Bm
        g = -(Bm @ (p_pos / np.maximum(mix, floor)))
        s = step
        accepted = False
        halved = False
        for _ in range(60):
            w = theta * np.exp(-s * (g - g.min()))
            tot = w.sum()
            if np.isfinite(tot) and tot > 0:
                cand = w / tot
                fc = objective(cand)
                if np.isfinite(fc) and fc <= f:
                    accepted = True
                    break
            s *= 0.5
            halved = True
        if not accepted:
            converged = True  # no descent direction at machine precision
            break
        drop = f - fc
        theta, f = cand, fc
        trace.append(f)
        step = s if halved else min(s * 1.5, 1e12)
        if drop <= tol * max(abs(f), 1e-10) or f <= 1e-15:
            converged = True
            break
    return RowFit(theta, f, it, converged, np.array(trace))


def recover_topics_unsupervised(
    stats: CooccurrenceStats,
    anchors: AnchorSet,
    tol: float = 1e-10,
    max_iter: int = 4000,
    step0: float = 1.0,
) -> TopicModel:
    """Solve every non-anchor row independently; anchor rows are pinned to
    indicator vectors. Raises ConvergenceError (with the worst offending
    row) if any row exhausts its iteration budget."""
    d = stats.Qbar.shape[0]
    aidx = np.asarray(anchors.indices, dtype=int)
    if aidx.size and (aidx.min() < 0 or aidx.max() >= d):
        raise ValueError("anchor indices out of range for these stats")
    k = aidx.size
    B = stats.Qbar[aidx]
    theta = np.zeros((d, k))
    theta[aidx, np.arange(k)] = 1.0
    residuals = np.zeros(d)
    anchor_mask = np.zeros(d, dtype=bool)
    anchor_mask[aidx] = True
    failed: list[tuple[int, float]] = []
    for w in range(d):
        if anchor_mask[w]:
            continue
        fit = minimize_row_kl(stats.Qbar[w], B, tol=tol, max_iter=max_iter, step0=step0)
        theta[w] = fit.theta
        residuals[w] = fit.objective
        if not fit.converged:
            failed.append((w, fit.objective))
    if failed:
        worst = max(failed, key=lambda t: t[1])[0]
        raise ConvergenceError(
            f"{len(failed)} row(s) failed to converge within {max_iter} iterations; "
            f"worst row {worst}",
            worst_row=worst,
        )
    return TopicModel(theta, None, anchors, residuals)


def kl_residuals(theta: np.ndarray, stats: CooccurrenceStats, anchors: AnchorSet,
                 floor: float = LOG_FLOOR) -> np.ndarray:
    """Per-row KL(Qbar_w || theta_w @ B); exact zeros on anchor rows."""
    aidx = np.asarray(anchors.indices, dtype=int)
    B = stats.Qbar[aidx]
    d = stats.Qbar.shape[0]
    out = np.zeros(d)
    for w in range(d):
        out[w] = kl_divergence(stats.Qbar[w], theta[w] @ B, floor=floor)
    out[aidx] = 0.0
    return out


def recover_word_topic_matrix(theta: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Bayes step: A[w, g] proportional to theta[w, g] * p[w], columns
    normalized to sum to 1."""
    theta = np.asarray(theta, dtype=float)
    p = np.asarray(p, dtype=float)
    unnorm = theta * p[:, None]
    mass = unnorm.sum(axis=0)
    dead = np.flatnonzero(mass <= 0)
    if dead.size:
        raise ValueError(f"topic(s) with zero word mass: {dead.tolist()}")
    return unnorm / mass


def bayes_topic_posterior(A: np.ndarray, topic_weights: np.ndarray | None = None) -> np.ndarray:
    """Invert the Bayes step: posterior theta from a word-topic matrix and
    topic weights (uniform when omitted)."""
    A = np.asarray(A, dtype=float)
    k = A.shape[1]
    wgt = np.full(k, 1.0 / k) if topic_weights is None else np.asarray(topic_weights, dtype=float)
    joint = A * wgt[None, :]
    row = joint.sum(axis=1)
    if np.any(row <= 0):
        raise ValueError("word with zero probability under every topic")
    return joint / row[:, None]


def doc_topic_features(theta: np.ndarray, Xbar) -> np.ndarray:
    """Per-document topic proportions: row i is (Xbar column i)^T theta."""
    theta = np.asarray(theta, dtype=float)
    if Xbar.shape[0] != theta.shape[0]:
        raise ValueError(
            f"dimension mismatch: Xbar has {Xbar.shape[0]} rows, theta has {theta.shape[0]}"
        )
    return np.asarray(Xbar.T @ theta)


def representability(
    stats: CooccurrenceStats,
    anchors: AnchorSet,
    threshold: float,
    **solver_kwargs,
) -> tuple[np.ndarray, np.ndarray]:
    """Residual KL per word plus the indices whose residual exceeds the
    threshold (words the chosen anchors cannot express)."""
    model = recover_topics_unsupervised(stats, anchors, **solver_kwargs)
    flagged = np.flatnonzero(model.residuals > threshold)
    return model.residuals, flagged


def topic_report(model: TopicModel, words: tuple[str, ...], top_n: int = 10,
                 beta: np.ndarray | None = None) -> str:
    """Per topic: its anchor word, optional coefficient, and the top words
    by within-topic probability."""
    if model.A is None:
        raise ValueError("word-topic matrix not recovered yet")
    lines = []
    for g, a in enumerate(model.anchors.indices):
        head = f"topic {g}: anchor={words[a]}"
        if beta is not None:
            head += f" beta={beta[g]:+.4g}"
        lines.append(head)
        top = np.argsort(-model.A[:, g], kind="stable")[:top_n]
        for w in top:
            lines.append(f"    {words[w]}\t{model.A[w, g]:.6f}")
    return "\n".join(lines) + "\n"
