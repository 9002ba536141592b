"""Accuracy metrics and cross-validated hyperparameter selection.

RMSE and MAE compare predicted medians to the true duration over uncensored
patients only; comparing a median to a censoring lower bound is ill-defined,
so censored patients are excluded and ``n_evaluated`` reports how many
remain. The c-index is Harrell's concordance over comparable pairs.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from .corpus import Corpus, SurvivalLabels, subset
from .saw import SawConfig, SawModel, fit_saw, predict
from .seeding import derive_seed

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Metrics:
    rmse: float
    mae: float
    c_index: float | None
    n_evaluated: int
    n_saturated: int


@dataclass(frozen=True, eq=False)
class CvResult:
    grid: tuple[tuple[int, float, float], ...]
    fold_scores: np.ndarray  # cells x folds, NaN where a cell failed
    best: tuple[int, float, float]
    fold_assignment: np.ndarray


def rmse_mae(predicted, labels: SurvivalLabels) -> tuple[float, float]:
    pred = np.asarray(predicted, dtype=float)
    if pred.shape != labels.times.shape:
        raise ValueError("predictions and labels must be aligned")
    mask = labels.observed
    if not mask.any():
        raise ValueError("no uncensored patients to evaluate")
    err = pred[mask] - labels.times[mask]
    return float(np.sqrt(np.mean(err ** 2))), float(np.mean(np.abs(err)))


def c_index(risk, labels: SurvivalLabels) -> float:
    """Harrell's concordance: a pair (i, j) is comparable when Y_i < Y_j and
    patient i's event was observed; it is concordant when risk_i > risk_j,
    risk ties counting one half."""
    risk = np.asarray(risk, dtype=float)
    if risk.shape != labels.times.shape:
        raise ValueError("risk scores and labels must be aligned")
    if np.isnan(risk).any():
        raise ValueError("risk scores contain NaN")
    y = labels.times
    comparable = (y[:, None] < y[None, :]) & labels.observed[:, None]
    n_comp = int(comparable.sum())
    if n_comp == 0:
        raise ValueError("no comparable pairs")
    higher = risk[:, None] > risk[None, :]
    tied = risk[:, None] == risk[None, :]
    num = (comparable & higher).sum() + 0.5 * (comparable & tied).sum()
    return float(num / n_comp)


def compute_metrics(median, risk, saturated, labels: SurvivalLabels) -> Metrics:
    """Bundle the standard report row; c-index is None when every risk score
    is NaN (e.g. the Kaplan-Meier baseline has no risk ordering)."""
    rmse, mae = rmse_mae(median, labels)
    risk = np.asarray(risk, dtype=float)
    ci = None if np.isnan(risk).all() else c_index(risk, labels)
    return Metrics(
        rmse=rmse,
        mae=mae,
        c_index=ci,
        n_evaluated=int(labels.observed.sum()),
        n_saturated=int(np.asarray(saturated, dtype=bool).sum()),
    )


def format_metrics(name: str, m: Metrics) -> str:
    ci = "nan" if m.c_index is None else repr(m.c_index)
    return f"{name},{m.rmse!r},{m.mae!r},{ci},{m.n_evaluated},{m.n_saturated}"


METRICS_HEADER = "method,rmse,mae,c_index,n_evaluated,n_saturated"


def cross_validate(
    train: Corpus,
    grid,
    folds: int,
    seed: int,
    base_config: SawConfig | None = None,
    fitter=None,
) -> tuple[CvResult, SawModel]:
    """Seeded K-fold selection of (k, lam, alpha) minimizing held-out RMSE
    of the predicted median, then a refit on the full training corpus.

    Cells that fail on any fold (e.g. k larger than the usable vocabulary)
    are excluded from selection and the run continues. Ties on mean RMSE go
    to the lexicographically smallest cell.
    """
    if folds < 2:
        raise ValueError("folds must be >= 2")
    cells = [(int(k), float(lam), float(alpha)) for k, lam, alpha in grid]
    if not cells:
        raise ValueError("empty hyperparameter grid")
    base = base_config if base_config is not None else SawConfig()
    fit = fitter if fitter is not None else fit_saw
    n = train.n_docs
    perm = np.random.default_rng(derive_seed(seed, "cv-folds")).permutation(n)
    fold_of = np.empty(n, dtype=int)
    for f, chunk in enumerate(np.array_split(perm, folds)):
        fold_of[chunk] = f
    for f in range(folds):
        if not train.labels.observed[fold_of == f].any():
            raise ValueError(f"fold {f} has no observed events; use fewer folds")

    scores = np.full((len(cells), folds), np.nan)
    for ci, (k, lam, alpha) in enumerate(cells):
        for f in range(folds):
            tr = np.flatnonzero(fold_of != f)
            va = np.flatnonzero(fold_of == f)
            cfg = replace(base, k=k, lam=lam, alpha=alpha,
                          seed=derive_seed(seed, f"cv-cell{ci}-fold{f}"))
            try:
                model = fit(subset(train, tr), cfg)
                preds = predict(model, subset(train, va))
                r, _ = rmse_mae(preds.median, train.labels.subset(va))
            except Exception as exc:
                log.warning("cv cell %s failed on fold %d: %s", cells[ci], f, exc)
                scores[ci, :] = np.nan
                break
            scores[ci, f] = r

    valid = ~np.isnan(scores).any(axis=1)
    if not valid.any():
        raise RuntimeError("every grid cell failed during cross-validation")
    means = scores.mean(axis=1)
    ranked = sorted(
        (i for i in range(len(cells)) if valid[i]),
        key=lambda i: (means[i], cells[i]),
    )
    best = cells[ranked[0]]
    final_cfg = replace(base, k=best[0], lam=best[1], alpha=best[2],
                        seed=derive_seed(seed, "cv-refit"))
    final = fit(train, final_cfg)
    result = CvResult(tuple(cells), scores, best, fold_of)
    return result, final
