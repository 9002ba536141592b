"""Command-line front end.

Subcommands: ingest, synth, train, predict, evaluate, cv, report. Every
command writes the fully resolved configuration (defaults included) next to
its primary output as sorted key=value lines; rerunning with only
``--config <that file>`` reproduces the outputs byte for byte. Flags
override config-file values, which override defaults. All randomness flows
from the single --seed value, fanned out per stage by seeding.derive_seed.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import evaluation, methods, synthgen
from .anchors import anchor_report
from .corpus import (IngestConfig, build_corpus, load_corpus, load_events,
                     load_labels, save_corpus)
from .saw import SawConfig, SawModel
from .seeding import derive_seed
from .topics import topic_report

log = logging.getLogger(__name__)

METHODS = ("saw", "usaw", "encox", "km")


def _parse_optional_float(s: str):
    return None if s == "" else float(s)


def _parse_optional_int(s: str):
    return None if s == "" else int(s)


def _parse_floats(s: str):
    return tuple(float(x) for x in s.split(",") if x.strip() != "")


def _parse_ints(s: str):
    return tuple(int(x) for x in s.split(",") if x.strip() != "")


# command -> {key: (default, parser)}; the parser converts config-file strings
_SCHEMAS = {
    "ingest": {
        "events": (None, str), "labels": (None, str), "out": (None, str),
        "bins": (5, int), "min_doc_freq": (3, int),
        "cutoff": (None, _parse_optional_float),
        "min_variance": (None, _parse_optional_float),
    },
    "synth": {
        "d": (60, int), "k": (5, int), "n": (1000, int), "doc_length": (300, int),
        "a0": (0.1, float), "anchor_mass": (0.3, float),
        "beta": (None, _parse_floats), "base_rate": (0.1, float),
        "censor_fraction": (0.2, float), "seed": (0, int),
        "out": (None, str), "truth_out": (None, str),
    },
    "train": {
        "corpus": (None, str), "method": ("saw", str), "out": (None, str),
        "k": (5, int), "lam": (0.1, float), "alpha": (0.5, float),
        "seed": (0, int), "outer_tol": (1e-6, float), "max_outer_iters": (50, int),
        "anchor_runs": (10, int), "projection_dim": (None, _parse_optional_int),
        "threads": (1, int),
    },
    "predict": {
        "model": (None, str), "corpus": (None, str), "out": (None, str),
    },
    "evaluate": {
        "predictions": (None, str), "corpus": (None, str), "out": (None, str),
        "method": ("model", str),
    },
    "cv": {
        "corpus": (None, str), "out_dir": (None, str),
        "ks": ((2, 5, 8), _parse_ints),
        "lams": ((0.01, 0.1, 1.0, 10.0), _parse_floats),
        "alphas": ((0.5, 1.0), _parse_floats),
        "folds": (3, int), "seed": (0, int), "method": ("saw", str),
        "threads": (1, int),
    },
    "report": {
        "model": (None, str), "out": (None, str), "top_n": (10, int),
    },
}


def _format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (tuple, list)):
        return ",".join(repr(x) if isinstance(x, float) else str(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_config(path: Path, values: dict) -> None:
    lines = [f"{k}={_format_value(v)}" for k, v in sorted(values.items())]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_config(path: Path) -> dict[str, str]:
    out = {}
    for raw in path.read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"bad config line (want key=value): {line!r}")
        key, _, val = line.partition("=")
        out[key.strip()] = val.strip()
    return out


def _resolve(command: str, args: argparse.Namespace) -> dict:
    schema = _SCHEMAS[command]
    resolved = {k: default for k, (default, _) in schema.items()}
    if getattr(args, "config", None):
        for k, v in read_config(Path(args.config)).items():
            if k not in schema:
                raise ValueError(f"unknown config key {k!r} for {command}")
            resolved[k] = schema[k][1](v) if v != "" else None
    for k in schema:
        v = getattr(args, k, None)
        if v is not None:
            resolved[k] = v
    return resolved


def _require(resolved: dict, *keys: str) -> None:
    missing = [k for k in keys if resolved.get(k) is None]
    if missing:
        raise ValueError("missing required option(s): " + ", ".join(f"--{k.replace('_', '-')}" for k in missing))


def _saw_config(resolved: dict) -> SawConfig:
    return SawConfig(
        k=resolved["k"], lam=resolved["lam"], alpha=resolved["alpha"],
        outer_tol=resolved["outer_tol"], max_outer_iters=resolved["max_outer_iters"],
        anchor_runs=resolved["anchor_runs"], projection_dim=resolved["projection_dim"],
        seed=derive_seed(resolved["seed"], "train"),
    )


def _write_predictions(path: Path, preds) -> None:
    lines = ["patient_id,risk_score,predicted_median_days,saturated"]
    for pid, r, m, s in zip(preds.patient_ids, preds.risk, preds.median, preds.saturated):
        lines.append(f"{pid},{float(r)!r},{float(m)!r},{int(s)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _read_predictions(path: Path):
    rows = path.read_text(encoding="utf-8").splitlines()
    if not rows or rows[0] != "patient_id,risk_score,predicted_median_days,saturated":
        raise ValueError(f"not a predictions file: {path}")
    pids, risk, median, saturated = [], [], [], []
    for line in rows[1:]:
        if not line.strip():
            continue
        pid, r, m, s = line.split(",")
        pids.append(pid)
        risk.append(float(r))
        median.append(float(m))
        saturated.append(bool(int(s)))
    return pids, np.array(risk), np.array(median), np.array(saturated, dtype=bool)


def _cmd_ingest(resolved: dict) -> None:
    _require(resolved, "events", "labels", "out")
    events = load_events(resolved["events"])
    labels = load_labels(resolved["labels"])
    cfg = IngestConfig(
        bins=resolved["bins"], min_doc_freq=resolved["min_doc_freq"],
        cutoff=resolved["cutoff"], min_variance=resolved["min_variance"],
    )
    corpus = build_corpus(events, labels, cfg)
    out = Path(resolved["out"])
    save_corpus(corpus, out)
    write_config(out.with_name(out.name + ".config"), resolved)
    print(f"wrote corpus with {corpus.n_words} words x {corpus.n_docs} patients to {out}")


def _cmd_synth(resolved: dict) -> None:
    _require(resolved, "out")
    k = resolved["k"]
    beta = resolved["beta"]
    if beta is None:
        beta = tuple([3.0, -3.0] + [0.0] * (k - 2))[:k]
    if len(beta) != k:
        raise ValueError(f"--beta needs {k} comma-separated values")
    corpus, truth = synthgen.generate_dataset(
        d=resolved["d"], k=k, n=resolved["n"], doc_length=resolved["doc_length"],
        dirichlet_concentration=resolved["a0"], anchor_mass=resolved["anchor_mass"],
        beta_true=np.array(beta), base_rate=resolved["base_rate"],
        censor_fraction=resolved["censor_fraction"],
        seed=derive_seed(resolved["seed"], "synth"),
    )
    out = Path(resolved["out"])
    save_corpus(corpus, out)
    resolved["beta"] = tuple(beta)
    write_config(out.with_name(out.name + ".config"), resolved)
    if resolved["truth_out"]:
        synthgen.save_ground_truth(truth, Path(resolved["truth_out"]))
    print(f"wrote synthetic corpus ({corpus.n_words} words x {corpus.n_docs} docs) to {out}")


def _cmd_train(resolved: dict) -> None:
    _require(resolved, "corpus", "out")
    if resolved["method"] not in METHODS:
        raise ValueError(f"unknown method {resolved['method']!r}; choose from {METHODS}")
    if resolved["threads"] != 1:
        log.info("threads=%s requested; running single-threaded", resolved["threads"])
    corpus = load_corpus(resolved["corpus"])
    model = methods.fit_method(corpus, resolved["method"], _saw_config(resolved))
    out = Path(resolved["out"])
    methods.save_model(model, out)
    write_config(out.with_name(out.name + ".config"), resolved)
    print(f"trained {resolved['method']} model on {corpus.n_docs} patients -> {out}")


def _cmd_predict(resolved: dict) -> None:
    _require(resolved, "model", "corpus", "out")
    model = methods.load_model(resolved["model"])
    corpus = load_corpus(resolved["corpus"])
    preds = methods.predict_model(model, corpus)
    out = Path(resolved["out"])
    _write_predictions(out, preds)
    write_config(out.with_name(out.name + ".config"), resolved)
    print(f"wrote predictions for {corpus.n_docs} patients to {out}")


def _cmd_evaluate(resolved: dict) -> None:
    _require(resolved, "predictions", "corpus", "out")
    pids, risk, median, saturated = _read_predictions(Path(resolved["predictions"]))
    corpus = load_corpus(resolved["corpus"])
    by_id = {p: i for i, p in enumerate(corpus.patient_ids)}
    missing = [p for p in pids if p not in by_id]
    if missing:
        raise ValueError("predictions for unknown patients: " + ", ".join(missing[:10]))
    idx = np.array([by_id[p] for p in pids], dtype=int)
    labels = corpus.labels.subset(idx)
    m = evaluation.compute_metrics(median, risk, saturated, labels)
    out = Path(resolved["out"])
    text = evaluation.METRICS_HEADER + "\n" + evaluation.format_metrics(resolved["method"], m) + "\n"
    out.write_text(text, encoding="utf-8")
    write_config(out.with_name(out.name + ".config"), resolved)
    print(text, end="")


def _cmd_cv(resolved: dict) -> None:
    _require(resolved, "corpus", "out_dir")
    corpus = load_corpus(resolved["corpus"])
    grid = [(k, lam, a) for k in resolved["ks"] for lam in resolved["lams"]
            for a in resolved["alphas"]]
    from .saw import fit_saw, fit_usaw

    fitter = {"saw": fit_saw, "usaw": fit_usaw}.get(resolved["method"])
    if fitter is None:
        raise ValueError("cv supports methods saw and usaw")
    result, model = evaluation.cross_validate(
        corpus, grid, folds=resolved["folds"], seed=derive_seed(resolved["seed"], "cv"),
        fitter=fitter,
    )
    out_dir = Path(resolved["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    methods.save_model(model, out_dir / "model.json")
    rows = ["k,lam,alpha," + ",".join(f"fold{f}_rmse" for f in range(resolved["folds"]))]
    for cell, scores in zip(result.grid, result.fold_scores):
        rows.append(",".join([str(cell[0]), repr(cell[1]), repr(cell[2])]
                             + [repr(float(s)) for s in scores]))
    rows.append(f"best,{result.best[0]},{repr(result.best[1])},{repr(result.best[2])}")
    (out_dir / "cv_result.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")
    write_config(out_dir / "cv.config", resolved)
    print(f"best cell (k, lam, alpha) = {result.best}; refit model -> {out_dir / 'model.json'}")


def _cmd_report(resolved: dict) -> None:
    _require(resolved, "model", "out")
    model = methods.load_model(resolved["model"])
    if not isinstance(model, SawModel):
        raise ValueError("report requires a saw or usaw model")
    if model.vocab is None:
        raise ValueError("model file lacks vocabulary words")
    text = topic_report(model.topic_model, model.vocab.words,
                        top_n=resolved["top_n"], beta=model.cox.beta)
    text += "\n" + anchor_report(model.topic_model.anchors, model.vocab)
    out = Path(resolved["out"])
    out.write_text(text, encoding="utf-8")
    write_config(out.with_name(out.name + ".config"), resolved)
    print(text, end="")


_HANDLERS = {
    "ingest": _cmd_ingest, "synth": _cmd_synth, "train": _cmd_train,
    "predict": _cmd_predict, "evaluate": _cmd_evaluate, "cv": _cmd_cv,
    "report": _cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sawtopics",
        description="Supervised anchor-word topic modeling for survival prediction",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="key=value config file; flags override it")
        return p

    p = add("ingest", "build a corpus file from 4-column events + labels")
    p.add_argument("--events")
    p.add_argument("--labels")
    p.add_argument("--out")
    p.add_argument("--bins", type=int)
    p.add_argument("--min-doc-freq", dest="min_doc_freq", type=int)
    p.add_argument("--cutoff", type=float)
    p.add_argument("--min-variance", dest="min_variance", type=float)

    p = add("synth", "generate a synthetic corpus with planted ground truth")
    for flag, typ in [("--d", int), ("--k", int), ("--n", int),
                      ("--doc-length", int), ("--a0", float), ("--anchor-mass", float),
                      ("--base-rate", float), ("--censor-fraction", float), ("--seed", int)]:
        p.add_argument(flag, dest=flag.lstrip("-").replace("-", "_"), type=typ)
    p.add_argument("--beta", type=_parse_floats)
    p.add_argument("--out")
    p.add_argument("--truth-out", dest="truth_out")

    p = add("train", "fit a model (saw | usaw | encox | km) on a corpus file")
    p.add_argument("--corpus")
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--out")
    p.add_argument("--k", type=int)
    p.add_argument("--lam", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--outer-tol", dest="outer_tol", type=float)
    p.add_argument("--max-outer-iters", dest="max_outer_iters", type=int)
    p.add_argument("--anchor-runs", dest="anchor_runs", type=int)
    p.add_argument("--projection-dim", dest="projection_dim", type=int)
    p.add_argument("--threads", type=int)

    p = add("predict", "score a corpus with a trained model")
    p.add_argument("--model")
    p.add_argument("--corpus")
    p.add_argument("--out")

    p = add("evaluate", "compute rmse/mae/c-index from a predictions file")
    p.add_argument("--predictions")
    p.add_argument("--corpus")
    p.add_argument("--out")
    p.add_argument("--method")

    p = add("cv", "grid search (k, lam, alpha) by K-fold RMSE, then refit")
    p.add_argument("--corpus")
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--ks", type=_parse_ints)
    p.add_argument("--lams", type=_parse_floats)
    p.add_argument("--alphas", type=_parse_floats)
    p.add_argument("--folds", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--method", choices=("saw", "usaw"))
    p.add_argument("--threads", type=int)

    p = add("report", "write the topic/anchor report for a trained model")
    p.add_argument("--model")
    p.add_argument("--out")
    p.add_argument("--top-n", dest="top_n", type=int)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        resolved = _resolve(args.command, args)
        _HANDLERS[args.command](resolved)
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
