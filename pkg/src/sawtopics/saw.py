"""Joint topic-survival fitting by alternating minimization.

The objective is block convex: the KL representation cost of the topic side
plus the elastic-net regularized Cox partial likelihood on the per-document
topic proportions. Anchors are found once up front; the alternation then
switches between an elastic-net Cox fit (warm-started, so it can only lower
the objective) and a monotone exponentiated-gradient pass over all free
theta rows, which the Cox term couples together.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .anchors import AnchorSet, default_candidates, stable_anchors
from .cooccur import CooccurrenceStats, build_cooccurrence
from .corpus import (Corpus, SurvivalLabels, Vocabulary, document_frequencies,
                     normalize_columns, vocabulary_hash)
from .seeding import derive_seed
from .survival import (CoxModel, RiskSets, breslow_baseline, elastic_net_penalty,
                       fit_elastic_net_cox, predict_median)
from .topics import (LOG_FLOOR, TopicModel, doc_topic_features, kl_residuals,
                     recover_topics_unsupervised, recover_word_topic_matrix)

log = logging.getLogger(__name__)

OBJECTIVE_SLACK = 1e-9  # relative tolerance for "non-increasing" checks


@dataclass(frozen=True)
class SawConfig:
    k: int = 5
    lam: float = 0.1
    alpha: float = 0.5
    outer_tol: float = 1e-6
    max_outer_iters: int = 50
    theta_step: float = 1.0
    theta_iters: int = 100
    recover_tol: float = 1e-10
    recover_iters: int = 4000  # multiplicative updates crawl near simplex faces
    beta_tol: float = 1e-9
    beta_iters: int = 10000
    anchor_runs: int = 10
    projection_dim: int | None = None  # None: min(d, 1000)
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.lam <= 0:
            raise ValueError("lam must be > 0")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must be in [0, 1]")
        for name in ("outer_tol", "recover_tol", "beta_tol", "theta_step"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if self.max_outer_iters < 0 or self.anchor_runs < 1:
            raise ValueError("max_outer_iters must be >= 0 and anchor_runs >= 1")


@dataclass(frozen=True)
class FitTrace:
    """Joint objective after each half-step (beta or theta), starting from
    the initialization value."""

    objective_values: tuple[float, ...]
    converged: bool
    iterations: int


@dataclass(frozen=True, eq=False)
class SawModel:
    topic_model: TopicModel
    cox: CoxModel
    config: SawConfig
    trace: FitTrace
    vocab: Vocabulary | None
    vocab_hash: str
    method: str = "saw"

    def __post_init__(self):
        if self.topic_model.theta.shape[1] != self.cox.beta.size:
            raise ValueError("topic model and Cox coefficients disagree on k")


@dataclass(frozen=True, eq=False)
class Predictions:
    patient_ids: tuple[str, ...]
    risk: np.ndarray
    median: np.ndarray
    saturated: np.ndarray


def _check_feasible(theta: np.ndarray, anchors: AnchorSet) -> None:
    sums = theta.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > 1e-6) or np.any(theta < -1e-9):
        raise ValueError("theta rows must lie on the simplex")
    for g, a in enumerate(anchors.indices):
        expect = np.zeros(theta.shape[1])
        expect[g] = 1.0
        if not np.array_equal(theta[a], expect):
            raise ValueError(f"anchor row {a} is not the indicator of topic {g}")


def _kl_total(theta: np.ndarray, stats: CooccurrenceStats, anchors: AnchorSet,
              floor: float = LOG_FLOOR) -> float:
    aidx = np.asarray(anchors.indices, dtype=int)
    free = np.ones(stats.Qbar.shape[0], dtype=bool)
    free[aidx] = False
    P = stats.Qbar[free]
    mix = theta[free] @ stats.Qbar[aidx]
    mask = P > 0
    safe_p = np.where(mask, P, 1.0)
    terms = np.where(mask, P * (np.log(safe_p) - np.log(np.maximum(mix, floor))), 0.0)
    return float(terms.sum())


def joint_objective(
    theta: np.ndarray,
    beta: np.ndarray,
    stats: CooccurrenceStats,
    Xbar,
    labels: SurvivalLabels,
    anchors: AnchorSet,
    lam: float,
    alpha: float,
    risk_sets: RiskSets | None = None,
) -> float:
    """KL representation cost over non-anchor words + Cox partial
    likelihood on topic features + elastic-net penalty."""
    theta = np.asarray(theta, dtype=float)
    beta = np.asarray(beta, dtype=float)
    _check_feasible(theta, anchors)
    rs = risk_sets if risk_sets is not None else RiskSets(labels)
    eta = doc_topic_features(theta, Xbar) @ beta
    return _kl_total(theta, stats, anchors) + rs.nll(eta) + elastic_net_penalty(beta, lam, alpha)


def update_theta(
    theta: np.ndarray,
    beta: np.ndarray,
    stats: CooccurrenceStats,
    Xbar,
    labels: SurvivalLabels,
    anchors: AnchorSet,
    step: float = 1.0,
    max_iters: int = 100,
    inner_tol: float = 1e-12,
    risk_sets: RiskSets | None = None,
    floor: float = LOG_FLOOR,
) -> tuple[np.ndarray, bool]:
    """One budgeted pass of the theta subproblem at fixed beta.

    Exponentiated gradient on all free rows jointly (the Cox term couples
    them through the document features) with a halving line search on the
    full subproblem objective, so it never increases. Returns the updated
    theta and a stall flag set when no step length made progress.
    """
    theta = np.array(theta, dtype=float)
    beta = np.asarray(beta, dtype=float)
    aidx = np.asarray(anchors.indices, dtype=int)
    d = stats.Qbar.shape[0]
    free = np.ones(d, dtype=bool)
    free[aidx] = False
    if not free.any():  # every word is an anchor; nothing to optimize
        return theta, True
    B = stats.Qbar[aidx]
    P = stats.Qbar[free]
    mask = P > 0
    plogp = float((P[mask] * np.log(P[mask])).sum()) if mask.any() else 0.0
    rs = risk_sets if risk_sets is not None else RiskSets(labels)

    Xb = Xbar.tocsr() if hasattr(Xbar, "tocsr") else np.asarray(Xbar, dtype=float)
    Xf = Xb[np.flatnonzero(free)]
    Xa = Xb[aidx]
    eta_const = np.asarray(Xa.T @ (theta[aidx] @ beta)).ravel()

    def kl_part(mix):
        return plogp - float((np.where(mask, P, 0.0) * np.log(np.maximum(mix, floor))).sum())

    def eta_of(th_free):
        return np.asarray(Xf.T @ (th_free @ beta)).ravel() + eta_const

    th = theta[free].copy()
    mix = th @ B
    eta = eta_of(th)
    f_val = kl_part(mix) + rs.nll(eta)
    s = step
    any_accept = False
    for _ in range(max_iters):
        ratio = np.where(mask, P / np.maximum(mix, floor), 0.0)
        Gkl = -(ratio @ B.T)
        dLde = rs.eta_gradient(eta)
        Gcox = np.outer(np.asarray(Xf @ dLde).ravel(), beta)
        G = Gkl + Gcox
        shifted = G - G.min(axis=1, keepdims=True)
        s_try = s
        accepted = False
        halved = False
        for _ in range(60):
            W = th * np.exp(-s_try * shifted)
            tot = W.sum(axis=1, keepdims=True)
            if np.isfinite(tot).all() and (tot > 0).all():
                cand = W / tot
                mix_c = cand @ B
                eta_c = eta_of(cand)
                f_c = kl_part(mix_c) + rs.nll(eta_c)
                if np.isfinite(f_c) and f_c <= f_val:
                    accepted = True
                    break
            s_try *= 0.5
            halved = True
        if not accepted:
            break
        any_accept = True
        drop = f_val - f_c
        th, mix, eta, f_val = cand, mix_c, eta_c, f_c
        s = s_try if halved else min(s_try * 1.5, 1e12)
        if drop <= inner_tol * max(abs(f_val), 1e-10):
            break
    out = theta
    out[free] = th
    return out, (not any_accept)


def _prepare(corpus: Corpus, config: SawConfig):
    if corpus.n_docs < 2:
        raise ValueError("need at least 2 documents")
    if corpus.labels.n_events < 1:
        raise ValueError("need at least 1 observed event to fit a survival model")
    stats = build_cooccurrence(corpus)
    cand = default_candidates(document_frequencies(corpus), corpus.n_docs)
    r = config.projection_dim if config.projection_dim is not None else min(stats.n_words, 1000)
    anchors = stable_anchors(
        stats, config.k, T=config.anchor_runs, r=r,
        seed=derive_seed(config.seed, "anchors"), candidates=cand,
    )
    tm = recover_topics_unsupervised(
        stats, anchors, tol=config.recover_tol,
        max_iter=config.recover_iters, step0=config.theta_step,
    )
    Xbar = normalize_columns(corpus)
    rs = RiskSets(corpus.labels)
    return stats, anchors, tm, Xbar, rs


def _finish(corpus, config, stats, anchors, theta, beta, baseline, obj, converged,
            iterations, method) -> SawModel:
    residuals = kl_residuals(theta, stats, anchors)
    A = recover_word_topic_matrix(theta, stats.p)
    tm = TopicModel(theta, A, anchors, residuals)
    cox = CoxModel(beta, baseline, config.lam, config.alpha)
    trace = FitTrace(tuple(float(v) for v in obj), converged, iterations)
    return SawModel(tm, cox, config, trace, corpus.vocab,
                    vocabulary_hash(corpus.vocab), method=method)


def fit_saw(corpus: Corpus, config: SawConfig) -> SawModel:
    """Full pipeline: co-occurrence stats, stabilized anchors, unsupervised
    initialization, then alternate a warm-started elastic-net Cox fit with a
    monotone theta pass until the joint objective stops improving.

    With ``max_outer_iters == 0`` the unsupervised initialization itself is
    returned (beta zero, no baseline hazard).
    """
    stats, anchors, tm, Xbar, rs = _prepare(corpus, config)
    labels = corpus.labels
    theta = tm.theta
    beta = np.zeros(config.k)
    obj = [joint_objective(theta, beta, stats, Xbar, labels, anchors,
                           config.lam, config.alpha, risk_sets=rs)]
    if config.max_outer_iters == 0:
        return _finish(corpus, config, stats, anchors, theta, beta, None,
                       obj, False, 0, "saw")
    converged = False
    outer_done = 0
    for _ in range(config.max_outer_iters):
        prev = obj[-1]
        Z = doc_topic_features(theta, Xbar)
        cox = fit_elastic_net_cox(
            Z, labels, config.lam, config.alpha, tol=config.beta_tol,
            beta0=beta, max_iter=config.beta_iters, fit_baseline=False,
        )
        beta = cox.beta
        obj.append(joint_objective(theta, beta, stats, Xbar, labels, anchors,
                                   config.lam, config.alpha, risk_sets=rs))
        theta, stalled = update_theta(
            theta, beta, stats, Xbar, labels, anchors,
            step=config.theta_step, max_iters=config.theta_iters, risk_sets=rs,
        )
        obj.append(joint_objective(theta, beta, stats, Xbar, labels, anchors,
                                   config.lam, config.alpha, risk_sets=rs))
        outer_done += 1
        dec = prev - obj[-1]
        if dec < -OBJECTIVE_SLACK * max(abs(prev), 1.0):
            raise RuntimeError(
                f"joint objective increased across outer iteration {outer_done}: "
                f"{prev} -> {obj[-1]}"
            )
        if dec <= config.outer_tol * max(abs(prev), 1e-12):
            converged = True
            if stalled:
                log.debug("theta step stalled at outer iteration %d", outer_done)
            break
    baseline = breslow_baseline(beta, doc_topic_features(theta, Xbar), labels)
    return _finish(corpus, config, stats, anchors, theta, beta, baseline,
                   obj, converged, outer_done, "saw")


def fit_usaw(corpus: Corpus, config: SawConfig) -> SawModel:
    """Two-stage baseline: unsupervised topics, then a single elastic-net
    Cox fit on the resulting features. No alternation."""
    stats, anchors, tm, Xbar, rs = _prepare(corpus, config)
    labels = corpus.labels
    theta = tm.theta
    beta0 = np.zeros(config.k)
    obj = [joint_objective(theta, beta0, stats, Xbar, labels, anchors,
                           config.lam, config.alpha, risk_sets=rs)]
    Z = doc_topic_features(theta, Xbar)
    cox = fit_elastic_net_cox(
        Z, labels, config.lam, config.alpha, tol=config.beta_tol,
        max_iter=config.beta_iters, fit_baseline=True,
    )
    obj.append(joint_objective(theta, cox.beta, stats, Xbar, labels, anchors,
                               config.lam, config.alpha, risk_sets=rs))
    return _finish(corpus, config, stats, anchors, theta, cox.beta, cox.baseline,
                   obj, True, 1, "usaw")


def predict(model: SawModel, new_corpus: Corpus) -> Predictions:
    """Risk scores and median survival predictions for a new corpus built
    on the same vocabulary as the training data."""
    if vocabulary_hash(new_corpus.vocab) != model.vocab_hash:
        raise ValueError("vocabulary mismatch between model and corpus")
    Xbar = normalize_columns(new_corpus)
    Z = doc_topic_features(model.topic_model.theta, Xbar)
    risk = Z @ model.cox.beta
    n = new_corpus.n_docs
    median = np.empty(n)
    saturated = np.empty(n, dtype=bool)
    for i in range(n):
        median[i], saturated[i] = predict_median(model.cox, Z[i])
    return Predictions(new_corpus.patient_ids, risk, median, saturated)
