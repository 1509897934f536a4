"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see per-criterion
lines.  Criterion 7 needs the published capture dataset and is skipped
unless RADIOFP_DATASET points at a feature CSV derived from it.
"""

import dataclasses
import math
import os
import time

import numpy as np
import pytest

from radiofp import stats
from radiofp.classify import (
    ForestParams,
    derive_seed,
    evaluate,
    train_forest,
    train_tree,
)
from radiofp.cli import DEFAULT_PROFILES, main
from radiofp.dataset import FeatureStats, LabeledFeatureSet
from radiofp.errors import FeatureError
from radiofp.explain import ExplainConfig, explain_instance
from radiofp.features import FEATURE_NAMES, extract_features
from radiofp.pipeline import (
    run_capture_pipeline,
    simulate_device,
    transnoise_etalon,
)

from oracles import oracle_features, oracle_p_value


def _report(criterion, detail):
    print(f"ACCEPTANCE {criterion}: PASS ({detail})")


# --- criterion 1: feature oracle suite --------------------------------------


def test_criterion_1_feature_oracle_suite():
    rng = np.random.default_rng(2024)
    started = time.time()
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(64, 4097))
        if rng.random() < 0.5:
            y = rng.normal(size=n)
        else:
            y = rng.uniform(-1.0, 1.0, size=n)
        got = extract_features(y).as_array()
        want = oracle_features(y)
        for name, value in zip(FEATURE_NAMES, got):
            ref = want[name]
            assert value == pytest.approx(ref, rel=1e-9, abs=1e-12), (
                f"{name}: {value} vs oracle {ref}"
            )
            worst = max(worst, abs(value - ref) / max(abs(ref), 1e-12))
    elapsed = time.time() - started
    assert elapsed < 30.0
    _report(1, f"1000 sequences, worst rel err {worst:.2e}, {elapsed:.1f}s")


# --- criterion 2: sinusoid recovery ------------------------------------------


def test_criterion_2_sinusoid_recovery():
    rng = np.random.default_rng(2025)
    started = time.time()
    worst_p9 = worst_p10 = 0.0
    for _ in range(50):
        omega = float(rng.uniform(0.01, 1.0))
        # long record: the re-centering shift of interpolated roots scales
        # as 1/(omega*N)^2, so this N keeps it well below the 1e-6 budget
        n = int(math.ceil(6000.0 / omega))
        while True:
            delta = float(rng.uniform(0, 2 * math.pi / omega))
            k = math.ceil(omega * delta / math.pi)
            first_root = k * math.pi / omega - delta
            if first_root < 0:
                first_root += math.pi / omega
            if first_root >= 2.5:
                break
        # shift stays before the first crossing so no root enters or leaves
        s = int(rng.integers(1, max(2, int(first_root - 0.5))))
        y = np.sin(omega * (np.arange(n) + delta))
        fy = extract_features(y)
        fz = extract_features(y[s:])
        worst_p9 = max(worst_p9, abs(fy.p9 - omega) / omega)
        expected = (fy.p10 - omega * s) % math.pi
        d = (fz.p10 - expected) % math.pi
        d = min(d, math.pi - d)
        worst_p10 = max(worst_p10, d)
        assert abs(fy.p9 - omega) / omega < 1e-3
        assert d < 1e-6
    elapsed = time.time() - started
    assert elapsed < 5.0
    _report(2, f"50 pairs, worst P9 rel {worst_p9:.1e}, "
               f"worst P10 shift {worst_p10:.1e}, {elapsed:.1f}s")


# --- criterion 3: invariance suite -------------------------------------------


def test_criterion_3_invariance_suite():
    from radiofp.features import (
        p2_range,
        p4_cumulative_range,
        p8_normalized_integral_range,
    )

    rng = np.random.default_rng(33)

    for _ in range(200):  # positive-affine invariance of p5, p8, p9, p10
        y = rng.normal(size=int(rng.integers(64, 512)))
        c = float(rng.uniform(1e-3, 1e3))
        d = float(rng.normal(0.0, 50.0))
        z = c * y + d
        fy, fz = extract_features(y), extract_features(z)
        assert fz.p5 == pytest.approx(fy.p5, rel=1e-9)
        assert fz.p8 == pytest.approx(fy.p8, rel=1e-9)
        assert fz.p9 == pytest.approx(fy.p9, rel=1e-9)
        assert fz.p10 == pytest.approx(fy.p10, rel=1e-9, abs=1e-9)

    for _ in range(200):  # p8 == p4 / p2 exactly
        y = rng.normal(size=int(rng.integers(8, 600)))
        assert p8_normalized_integral_range(y) == pytest.approx(
            p4_cumulative_range(y) / p2_range(y), rel=1e-12
        )

    for _ in range(200):  # point-biserial == pearson with 0/1 labels
        n = int(rng.integers(4, 300))
        labels = rng.integers(0, 2, size=n)
        if labels.min() == labels.max():
            labels[0] = 1 - labels[0]
        x = rng.normal(size=n)
        assert stats.point_biserial(x, labels) == pytest.approx(
            stats.pearson(x, labels.astype(float)), abs=1e-12
        )

    for _ in range(200):  # histogram conservation
        x = rng.normal(size=int(rng.integers(1, 400)))
        _, counts = stats.histogram(x, int(rng.integers(1, 80)))
        assert counts.sum() == x.size

    for case in range(200):  # importances sum to 1
        feats = rng.normal(size=(40, 5))
        labels = (feats[:, case % 5] > 0).astype(int)
        ds = LabeledFeatureSet.from_rows(labels, feats)
        model = train_forest(ds, ForestParams(n_trees=3, max_depth=3),
                             seed=case)
        assert model.importances is not None
        assert model.importances.sum() == pytest.approx(1.0, abs=1e-9)
        assert np.all(model.importances >= 0)

    _report(3, "5 invariants x 200 random cases")


# --- criterion 4: statistics oracle ------------------------------------------


def test_criterion_4_statistics_oracle():
    p = stats.p_value_two_sided(0.5, 27)
    assert p == pytest.approx(0.0079, abs=1e-3)
    assert p == pytest.approx(oracle_p_value(0.5, 27), abs=1e-8)
    for n in (3, 5, 30, 1000, 30000):
        assert stats.p_value_two_sided(0.0, n) == 1.0

    rs = np.linspace(0.01, 0.6, 20)
    ns = np.unique(np.logspace(np.log10(4), np.log10(1200), 20).astype(int))
    grid = [[stats.p_value_two_sided(float(r), int(n)) for r in rs]
            for n in ns]
    for row in grid:  # decreasing in |r| at fixed n
        assert all(a > b for a, b in zip(row, row[1:]))
    for col in range(len(rs)):  # decreasing in n at fixed r
        column = [grid[i][col] for i in range(len(ns))]
        assert all(a > b for a, b in zip(column, column[1:]))
    _report(4, f"p(0.5,27)={p:.6f} vs oracle, monotone on "
               f"{len(ns)}x{len(rs)} lattice")


# --- criteria 5 and 6: synthetic end-to-end experiment -----------------------


@pytest.fixture(scope="module")
def synthetic_experiment():
    """2 devices x 2000 frames at 20 dB SNR, L=1024 trans-noise etalon."""
    started = time.time()
    etalon = transnoise_etalon(1024)
    profiles = [dataclasses.replace(p, snr_db=20.0) for p in DEFAULT_PROFILES]
    labels, rows = [], []
    skipped = 0
    for dev, profile in enumerate(profiles):
        frames = [simulate_device(etalon, profile, derive_seed(0, dev, m))
                  for m in range(2000)]
        capture = run_capture_pipeline(np.concatenate(frames), etalon)
        skipped += len(capture.skipped)
        for seq in capture.sequences:
            try:
                rows.append(extract_features(seq).as_array())
                labels.append(str(dev))
            except FeatureError:
                skipped += 1
    dataset = LabeledFeatureSet.from_rows(labels, np.array(rows))
    return dataset, skipped, time.time() - started


def test_criterion_5_end_to_end_synthetic(synthetic_experiment):
    dataset, skipped, build_seconds = synthetic_experiment
    started = time.time()
    assert dataset.n + skipped == 4000

    forest = evaluate(dataset, lambda d, s: train_forest(d, ForestParams(), s),
                      k=4, seed=0)
    tree = evaluate(dataset, lambda d, s: train_tree(d, seed=s), k=4, seed=0)
    majority = float(dataset.class_counts().max()) / dataset.n

    assert forest.mean_accuracy >= 0.95
    assert forest.mean_accuracy >= tree.mean_accuracy >= majority
    elapsed = build_seconds + (time.time() - started)
    assert elapsed < 300.0
    _report(5, f"forest {forest.mean_accuracy:.4f} >= tree "
               f"{tree.mean_accuracy:.4f} >= majority {majority:.2f}, "
               f"{elapsed:.0f}s total")


def test_criterion_6_feature_subset(synthetic_experiment):
    dataset, _, _ = synthetic_experiment
    report = stats.significance_report(dataset)
    top3 = [row.feature for row in report.rows[:3] if row.pbcc is not None]
    assert len(top3) == 3
    columns = [dataset.feature_names.index(name) for name in top3]

    full = evaluate(dataset, lambda d, s: train_forest(d, ForestParams(), s),
                    k=4, seed=0)
    reduced = evaluate(dataset.select_features(columns),
                       lambda d, s: train_forest(d, ForestParams(), s),
                       k=4, seed=0)
    assert full.mean_accuracy - reduced.mean_accuracy <= 0.03
    _report(6, f"top-3 by |PBCC| {top3}: {reduced.mean_accuracy:.4f} vs "
               f"all-10 {full.mean_accuracy:.4f}")


# --- criterion 7: published dataset (optional) --------------------------------


@pytest.mark.skipif(
    "RADIOFP_DATASET" not in os.environ,
    reason="published capture dataset not available; set RADIOFP_DATASET to "
           "a feature CSV converted from it",
)
def test_criterion_7_published_dataset():
    from radiofp.dataio import read_feature_csv

    dataset = read_feature_csv(os.environ["RADIOFP_DATASET"])
    report = stats.significance_report(dataset)
    top3 = {row.feature for row in report.rows[:3]}
    assert top3 == {"P8", "P9", "P2"}
    assert set(report.insignificant_features()) == {"P4", "P3", "P10"}
    result = evaluate(dataset, lambda d, s: train_forest(d, ForestParams(), s),
                      k=4, seed=0)
    assert result.mean_accuracy >= 0.98
    _report(7, f"published dataset: RF {result.mean_accuracy:.4f}")


# --- criterion 8: explainer sanity --------------------------------------------


class _LocallyLinearModel:
    """Class-1 probability is an affine function of standardized features."""

    def __init__(self, stats_, coeffs, intercept=0.5):
        self.stats = stats_
        self.coeffs = coeffs
        self.intercept = intercept

    def predict(self, rows):
        return np.ones(np.atleast_2d(rows).shape[0], dtype=int)

    def predict_proba(self, rows):
        z = self.stats.standardize(np.atleast_2d(rows))
        v = z @ self.coeffs + self.intercept
        return np.column_stack([1.0 - v, v])


def test_criterion_8_explainer_sanity():
    rng = np.random.default_rng(88)
    started = time.time()
    feats = rng.normal(2.0, 1.5, size=(400, 10))
    fstats = FeatureStats.from_features(feats)
    coeffs = np.array([0.05, 0.02, 0.6, 0.04, 0.01,
                       0.03, 0.02, 0.05, 0.01, 0.03])
    model = _LocallyLinearModel(fstats, coeffs)
    config = ExplainConfig(n_perturbations=1000)

    hits = 0
    fidelities = []
    for seed in range(100):
        exp = explain_instance(model, feats[seed % 400], config, fstats,
                               seed=seed)
        fidelities.append(exp.local_fidelity)
        assert exp.local_fidelity >= 0.99
        if int(np.argmax(np.abs(exp.weights))) == 2:
            hits += 1
    elapsed = time.time() - started
    assert hits >= 95
    assert elapsed < 60.0
    _report(8, f"dominant feature {hits}/100, min fidelity "
               f"{min(fidelities):.4f}, {elapsed:.1f}s")


# --- criterion 9: reproducibility ---------------------------------------------


def test_criterion_9_reproducibility(tmp_path):
    def run(base):
        raw = base / "raw"
        assert main(["gen-dataset", "--out-dir", str(raw), "--devices", "2",
                     "--frames-per-device", "15", "--frame-len", "256",
                     "--seed", "21", "--no-timestamp"]) == 0
        features = base / "features.csv"
        assert main(["extract", "--input", str(raw / "manifest.csv"),
                     "--etalon", str(raw / "etalon.iq"),
                     "--out", str(features), "--no-timestamp"]) == 0
        assert main(["stats", "--input", str(features),
                     "--out-dir", str(base / "stats"), "--no-timestamp"]) == 0
        assert main(["train-eval", "--input", str(features),
                     "--out-dir", str(base / "ml"), "--trees", "8",
                     "--seed", "4", "--no-timestamp"]) == 0
        assert main(["explain", "--model", str(base / "ml" / "model.txt"),
                     "--input", str(features), "--row", "2", "--seed", "6",
                     "--n-perturbations", "300",
                     "--out", str(base / "explanation.csv"),
                     "--no-timestamp"]) == 0
        return {p.relative_to(base): p.read_bytes()
                for p in sorted(base.rglob("*")) if p.is_file()}

    first = run(tmp_path / "a")
    second = run(tmp_path / "b")
    assert first.keys() == second.keys()
    for name, blob in first.items():
        assert second[name] == blob, f"{name} differs between runs"
    _report(9, f"{len(first)} files byte-identical across two runs")
