"""Supervised anchor-word topic modeling with an elastic-net Cox layer.

The pipeline: build a word co-occurrence matrix from patient event counts,
find anchor words by a stabilized randomized greedy search, represent every
word as a convex combination of the anchors (a topic model), and couple the
resulting per-patient topic proportions to survival labels through an
elastic-net regularized Cox model, alternating between the two convex
subproblems.
"""

from .anchors import AnchorSet, default_candidates, greedy_anchors, project_rows, stable_anchors
from .cooccur import CooccurrenceStats, build_cooccurrence, row_normalize
from .corpus import (Corpus, EventRecord, IngestConfig, SurvivalLabels, Vocabulary,
                     build_corpus, ingest_events, load_corpus, normalize_columns,
                     save_corpus, split, subset, vocabulary_hash)
from .evaluation import CvResult, Metrics, c_index, compute_metrics, cross_validate, rmse_mae
from .methods import (EncoxModel, KmModel, fit_encox, fit_km, fit_method,
                      load_model, predict_model, save_model)
from .saw import (FitTrace, Predictions, SawConfig, SawModel, fit_saw, fit_usaw,
                  joint_objective, predict, update_theta)
from .survival import (BaselineHazard, CoxModel, SurvivalCurve, breslow_baseline,
                       cox_gradient, cox_nll, fit_elastic_net_cox, kaplan_meier,
                       predict_median)
from .synthgen import (GroundTruth, generate_corpus, generate_dataset,
                       generate_survival, generate_topic_model)
from .topics import (TopicModel, bayes_topic_posterior, doc_topic_features,
                     kl_divergence, recover_topics_unsupervised,
                     recover_word_topic_matrix, representability)

__version__ = "0.1.0"

__all__ = [
    "AnchorSet", "BaselineHazard", "CooccurrenceStats", "Corpus", "CoxModel",
    "CvResult", "EncoxModel", "EventRecord", "FitTrace", "GroundTruth",
    "IngestConfig", "KmModel", "Metrics", "Predictions", "SawConfig", "SawModel",
    "SurvivalCurve", "SurvivalLabels", "TopicModel", "Vocabulary",
    "bayes_topic_posterior", "breslow_baseline", "build_cooccurrence",
    "build_corpus", "c_index", "compute_metrics", "cox_gradient", "cox_nll",
    "cross_validate", "default_candidates", "doc_topic_features", "fit_encox",
    "fit_elastic_net_cox", "fit_km", "fit_method", "fit_saw", "fit_usaw",
    "generate_corpus", "generate_dataset", "generate_survival",
    "generate_topic_model", "greedy_anchors", "ingest_events", "joint_objective",
    "kaplan_meier", "kl_divergence", "load_corpus", "load_model",
    "normalize_columns", "predict", "predict_median", "predict_model",
    "project_rows", "recover_topics_unsupervised", "recover_word_topic_matrix",
    "representability", "rmse_mae", "row_normalize", "save_corpus", "save_model",
    "split", "stable_anchors", "subset", "update_theta", "vocabulary_hash",
]
