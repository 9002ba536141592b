"""End-to-end protocol on clinical-style raw files: ingest 4-column events,
split patients, train every method, score the held-out set, and compare.
Two planted cohorts (fast vs slow discharge) carry the signal through both
a continuous vital and a categorical treatment word."""

import numpy as np
import pytest

from sawtopics.cli import main as cli_main
from sawtopics.corpus import load_corpus, save_corpus, split
from sawtopics.evaluation import c_index, rmse_mae


@pytest.fixture(scope="module")
def raw_files(tmp_path_factory):
    d = tmp_path_factory.mktemp("pipeline")
    rng = np.random.default_rng(99)
    ev_lines = ["patient_id,time,event,event_value"]
    lab_lines = ["patient_id,Y,R"]
    for i in range(160):
        pid = f"pt{i:03d}"
        sick = i % 2 == 0
        n_ev = int(rng.integers(6, 14))
        for _ in range(n_ev):
            t = rng.uniform(0, 48)
            if rng.uniform() < 0.5:
                hr = rng.normal(115 if sick else 75, 8)
                ev_lines.append(f"{pid},{t:.2f},hr,{hr:.1f}")
            else:
                drug = "pressor" if (sick and rng.uniform() < 0.8) else "saline"
                ev_lines.append(f"{pid},{t:.2f},drug,{drug}")
        # discharge hazard is lower for the sick cohort: longer stays
        stay = rng.exponential(12.0 if sick else 3.0) + 0.5
        censored = rng.uniform() < 0.15
        y = stay * (rng.uniform(0.3, 0.9) if censored else 1.0)
        lab_lines.append(f"{pid},{y:.3f},{0 if censored else 1}")
    events = d / "events.csv"
    labels = d / "labels.csv"
    events.write_text("\n".join(ev_lines) + "\n")
    labels.write_text("\n".join(lab_lines) + "\n")
    return d, events, labels


def test_full_protocol(raw_files, tmp_path):
    d, events, labels = raw_files
    corpus_path = tmp_path / "corpus.json"
    assert cli_main(["ingest", "--events", str(events), "--labels", str(labels),
                     "--bins", "4", "--min-doc-freq", "3",
                     "--out", str(corpus_path)]) == 0
    corpus = load_corpus(corpus_path)
    assert corpus.n_docs > 140
    assert any(w.startswith("hr:bin") for w in corpus.vocab.words)
    assert "drug=pressor" in corpus.vocab.words

    train, test = split(corpus, 0.75, seed=13)
    train_path = tmp_path / "train.json"
    test_path = tmp_path / "test.json"
    save_corpus(train, train_path)
    save_corpus(test, test_path)

    scores = {}
    for method in ("saw", "usaw", "encox", "km"):
        model = tmp_path / f"{method}.json"
        preds = tmp_path / f"{method}.preds.csv"
        metrics = tmp_path / f"{method}.metrics.csv"
        assert cli_main(["train", "--corpus", str(train_path), "--method", method,
                         "--k", "2", "--lam", "0.1", "--alpha", "0.5",
                         "--seed", "13", "--out", str(model)]) == 0
        assert cli_main(["predict", "--model", str(model), "--corpus", str(test_path),
                         "--out", str(preds)]) == 0
        assert cli_main(["evaluate", "--predictions", str(preds), "--corpus",
                         str(test_path), "--method", method,
                         "--out", str(metrics)]) == 0
        row = metrics.read_text().splitlines()[1].split(",")
        scores[method] = dict(rmse=float(row[1]), mae=float(row[2]),
                              c=row[3], n=int(row[4]))

    # the planted cohort split is strong: topic methods must rank it well
    assert float(scores["saw"]["c"]) > 0.6
    assert float(scores["encox"]["c"]) > 0.6
    assert scores["km"]["c"] == "nan"
    for m in scores.values():
        assert m["rmse"] >= m["mae"] >= 0.0
        assert m["n"] == int(test.labels.observed.sum())

    report = tmp_path / "report.txt"
    assert cli_main(["report", "--model", str(tmp_path / "saw.json"),
                     "--out", str(report)]) == 0
    text = report.read_text()
    assert "topic 0" in text and "anchor=" in text


def test_cv_protocol_selects_and_refits(raw_files, tmp_path):
    d, events, labels = raw_files
    corpus_path = tmp_path / "corpus.json"
    cli_main(["ingest", "--events", str(events), "--labels", str(labels),
              "--bins", "4", "--min-doc-freq", "3", "--out", str(corpus_path)])
    corpus = load_corpus(corpus_path)
    train, test = split(corpus, 0.75, seed=29)
    train_path = tmp_path / "train.json"
    save_corpus(train, train_path)
    out = tmp_path / "cv"
    assert cli_main(["cv", "--corpus", str(train_path), "--ks", "2,3",
                     "--lams", "0.1", "--alphas", "0.5", "--folds", "3",
                     "--seed", "29", "--out-dir", str(out)]) == 0
    table = (out / "cv_result.csv").read_text().splitlines()
    assert len(table) == 1 + 2 + 1
    best_row = table[-1].split(",")
    assert best_row[0] == "best" and int(best_row[1]) in (2, 3)
    # the refit model scores the untouched test split
    test_path = tmp_path / "test.json"
    save_corpus(test, test_path)
    preds = tmp_path / "preds.csv"
    assert cli_main(["predict", "--model", str(out / "model.json"),
                     "--corpus", str(test_path), "--out", str(preds)]) == 0
    rows = preds.read_text().splitlines()[1:]
    risk = np.array([float(r.split(",")[1]) for r in rows])
    med = np.array([float(r.split(",")[2]) for r in rows])
    assert c_index(risk, test.labels) > 0.6
    rmse, mae = rmse_mae(med, test.labels)
    assert rmse >= mae > 0.0
