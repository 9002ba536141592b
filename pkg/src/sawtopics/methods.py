"""Training-method registry and model file I/O.

Four methods share one versioned model file format and one predictions
format: the joint fit (saw), the two-stage baseline (usaw), elastic-net Cox
directly on normalized word frequencies (encox), and Kaplan-Meier (km).
The km baseline predicts the same median for everyone and has no risk
ordering, so its risk scores are NaN.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .anchors import AnchorSet
from .corpus import Corpus, Vocabulary, normalize_columns, vocabulary_hash
from .saw import FitTrace, Predictions, SawConfig, SawModel, fit_saw, fit_usaw, predict
from .survival import (BaselineHazard, CoxModel, SurvivalCurve, fit_elastic_net_cox,
                       kaplan_meier, predict_median)
from .topics import TopicModel

MODEL_FORMAT = "sawtopics-model"
MODEL_VERSION = 1


@dataclass(frozen=True, eq=False)
class EncoxModel:
    """Elastic-net Cox on the column-normalized word counts themselves."""

    cox: CoxModel
    vocab: Vocabulary | None
    vocab_hash: str
    method: str = "encox"


@dataclass(frozen=True, eq=False)
class KmModel:
    curve: SurvivalCurve
    median: float
    saturated: bool
    vocab_hash: str
    method: str = "km"


def fit_encox(corpus: Corpus, lam: float, alpha: float, tol: float = 1e-9,
              max_iter: int = 10000) -> EncoxModel:
    Z = np.asarray(normalize_columns(corpus).T.todense())
    cox = fit_elastic_net_cox(Z, corpus.labels, lam, alpha, tol=tol, max_iter=max_iter)
    return EncoxModel(cox, corpus.vocab, vocabulary_hash(corpus.vocab))


def fit_km(corpus: Corpus) -> KmModel:
    curve, median, saturated = kaplan_meier(corpus.labels)
    return KmModel(curve, median, saturated, vocabulary_hash(corpus.vocab))


def predict_encox(model: EncoxModel, corpus: Corpus) -> Predictions:
    if vocabulary_hash(corpus.vocab) != model.vocab_hash:
        raise ValueError("vocabulary mismatch between model and corpus")
    Z = np.asarray(normalize_columns(corpus).T.todense())
    risk = Z @ model.cox.beta
    n = corpus.n_docs
    median = np.empty(n)
    saturated = np.empty(n, dtype=bool)
    for i in range(n):
        median[i], saturated[i] = predict_median(model.cox, Z[i])
    return Predictions(corpus.patient_ids, risk, median, saturated)


def predict_km(model: KmModel, corpus: Corpus) -> Predictions:
    n = corpus.n_docs
    return Predictions(
        corpus.patient_ids,
        np.full(n, np.nan),
        np.full(n, model.median),
        np.full(n, model.saturated, dtype=bool),
    )


def fit_method(corpus: Corpus, method: str, config: SawConfig):
    if method == "saw":
        return fit_saw(corpus, config)
    if method == "usaw":
        return fit_usaw(corpus, config)
    if method == "encox":
        return fit_encox(corpus, config.lam, config.alpha, tol=config.beta_tol,
                         max_iter=config.beta_iters)
    if method == "km":
        return fit_km(corpus)
    raise ValueError(f"unknown method {method!r}")


def predict_model(model, corpus: Corpus) -> Predictions:
    if isinstance(model, SawModel):
        return predict(model, corpus)
    if isinstance(model, EncoxModel):
        return predict_encox(model, corpus)
    if isinstance(model, KmModel):
        return predict_km(model, corpus)
    raise TypeError(f"cannot predict with {type(model).__name__}")


def _encode_matrix(M: np.ndarray):
    M = np.asarray(M, dtype=float)
    nnz = int(np.count_nonzero(M))
    if nnz * 2 < M.size:  # sparse encoding once more than half the entries are zero
        rows, cols = np.nonzero(M)
        return {
            "shape": [int(M.shape[0]), int(M.shape[1])],
            "triplets": [[int(r), int(c), float(M[r, c])] for r, c in zip(rows, cols)],
        }
    return {"dense": [[float(x) for x in row] for row in M]}


def _decode_matrix(obj) -> np.ndarray:
    if "dense" in obj:
        return np.array(obj["dense"], dtype=float)
    M = np.zeros(obj["shape"])
    for r, c, v in obj["triplets"]:
        M[r, c] = v
    return M


def _encode_baseline(base: BaselineHazard | None):
    if base is None:
        return None
    return {"times": [float(t) for t in base.times],
            "cum_hazard": [float(h) for h in base.cum_hazard]}


def _decode_baseline(obj) -> BaselineHazard | None:
    if obj is None:
        return None
    return BaselineHazard(np.array(obj["times"], dtype=float),
                          np.array(obj["cum_hazard"], dtype=float))


def save_model(model, path) -> None:
    if isinstance(model, SawModel):
        cfg = model.config
        body = {
            "config": {
                "k": cfg.k, "lam": cfg.lam, "alpha": cfg.alpha,
                "outer_tol": cfg.outer_tol, "max_outer_iters": cfg.max_outer_iters,
                "theta_step": cfg.theta_step, "theta_iters": cfg.theta_iters,
                "recover_tol": cfg.recover_tol, "recover_iters": cfg.recover_iters,
                "beta_tol": cfg.beta_tol, "beta_iters": cfg.beta_iters,
                "anchor_runs": cfg.anchor_runs, "projection_dim": cfg.projection_dim,
                "seed": cfg.seed,
            },
            "words": list(model.vocab.words) if model.vocab is not None else None,
            "anchors": {
                "indices": list(model.topic_model.anchors.indices),
                "stability": {str(w): c for w, c in model.topic_model.anchors.stability.items()},
                "runs": model.topic_model.anchors.runs,
                "projection_dim": model.topic_model.anchors.projection_dim,
            },
            "theta": _encode_matrix(model.topic_model.theta),
            "A": None if model.topic_model.A is None else _encode_matrix(model.topic_model.A),
            "residuals": [float(x) for x in model.topic_model.residuals],
            "beta": [float(x) for x in model.cox.beta],
            "baseline": _encode_baseline(model.cox.baseline),
            "trace": {
                "objective_values": [float(v) for v in model.trace.objective_values],
                "converged": model.trace.converged,
                "iterations": model.trace.iterations,
            },
        }
        payload = {"format": MODEL_FORMAT, "version": MODEL_VERSION,
                   "method": model.method, "vocab_hash": model.vocab_hash, **body}
    elif isinstance(model, EncoxModel):
        payload = {
            "format": MODEL_FORMAT, "version": MODEL_VERSION, "method": "encox",
            "vocab_hash": model.vocab_hash,
            "words": list(model.vocab.words) if model.vocab is not None else None,
            "beta": [float(x) for x in model.cox.beta],
            "lam": model.cox.lam, "alpha": model.cox.alpha,
            "baseline": _encode_baseline(model.cox.baseline),
        }
    elif isinstance(model, KmModel):
        payload = {
            "format": MODEL_FORMAT, "version": MODEL_VERSION, "method": "km",
            "vocab_hash": model.vocab_hash,
            "times": [float(t) for t in model.curve.times],
            "survival": [float(s) for s in model.curve.survival],
            "median": float(model.median), "saturated": bool(model.saturated),
        }
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_model(path):
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != MODEL_FORMAT:
        raise ValueError(f"not a model file: {path}")
    if payload.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported model version {payload.get('version')}")
    method = payload["method"]
    if method in ("saw", "usaw"):
        cfg = SawConfig(**payload["config"])
        anchors = AnchorSet(
            indices=tuple(payload["anchors"]["indices"]),
            stability={int(w): int(c) for w, c in payload["anchors"]["stability"].items()},
            runs=payload["anchors"]["runs"],
            projection_dim=payload["anchors"]["projection_dim"],
        )
        tm = TopicModel(
            theta=_decode_matrix(payload["theta"]),
            A=None if payload["A"] is None else _decode_matrix(payload["A"]),
            anchors=anchors,
            residuals=np.array(payload["residuals"], dtype=float),
        )
        cox = CoxModel(np.array(payload["beta"], dtype=float),
                       _decode_baseline(payload["baseline"]), cfg.lam, cfg.alpha)
        trace = FitTrace(tuple(payload["trace"]["objective_values"]),
                         payload["trace"]["converged"], payload["trace"]["iterations"])
        vocab = None if payload["words"] is None else Vocabulary(tuple(payload["words"]))
        return SawModel(tm, cox, cfg, trace, vocab, payload["vocab_hash"], method=method)
    if method == "encox":
        cox = CoxModel(np.array(payload["beta"], dtype=float),
                       _decode_baseline(payload["baseline"]),
                       payload["lam"], payload["alpha"])
        vocab = None if payload["words"] is None else Vocabulary(tuple(payload["words"]))
        return EncoxModel(cox, vocab, payload["vocab_hash"])
    if method == "km":
        curve = SurvivalCurve(np.array(payload["times"], dtype=float),
                              np.array(payload["survival"], dtype=float))
        return KmModel(curve, payload["median"], payload["saturated"], payload["vocab_hash"])
    raise ValueError(f"unknown method {method!r} in model file")
