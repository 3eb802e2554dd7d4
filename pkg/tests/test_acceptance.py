"""Acceptance run: one test per criterion, each tagged with ``criterion(n, title)``.

The terminal summary prints one PASS/FAIL line per criterion. Runtime bounds
are asserted inside each test, measured with ``time.perf_counter``.
"""

import dataclasses
import itertools
import math
import time

import numpy as np
import pytest

from oracles import grid_posteriors, naive_feature, oracle_majority, oracle_product, oracle_sum
from wavemyo.classifier import gradient_check, init_model, save_model
from wavemyo.features import ALL_KINDS, FeatureKind, FeatureParams, compute_feature, conventional_feature, iasd, iatd, ieav
from wavemyo.fusion import fuse_bayesian, fuse_majority, fuse_sum
from wavemyo.pipeline import (
    ExperimentConfig,
    bench_latency,
    emit_report,
    feature_condition_sweep,
    fit_model,
    load_data,
    run_experiment,
)
from wavemyo.signal_io import EmgRecording, split_by_trial
from wavemyo.wavelet import decompose, reconstruct

pytestmark = pytest.mark.slow

CFG = ExperimentConfig()


@pytest.fixture(scope="module")
def recordings():
    return load_data(CFG)


@pytest.fixture(scope="module")
def full_run(recordings):
    t0 = time.perf_counter()
    report = run_experiment(CFG, recordings=recordings)
    return report, time.perf_counter() - t0


@pytest.fixture(scope="module")
def sweep(recordings):
    t0 = time.perf_counter()
    pair = feature_condition_sweep(CFG, recordings=recordings, bench=False)
    return pair, time.perf_counter() - t0


@pytest.mark.criterion(1, "feature oracle suite")
def test_feature_oracles():
    t0 = time.perf_counter()
    assert iasd([0, 1, 4, 9, 16]) == 6.0
    assert iatd([0, 1, 8, 27, 64]) == 12.0
    assert ieav([1, -1]) == 2 * math.e
    assert conventional_feature(FeatureKind.WL, [1, 2, 4]) == 3.0
    assert conventional_feature(FeatureKind.MYOP, [0.5, 0.01, 0.8], FeatureParams(myop_threshold=0.1)) == 2 / 3

    rng = np.random.default_rng(2024)
    params = FeatureParams()
    worst = 0.0
    for _ in range(1000):
        x = rng.uniform(-3, 3, size=int(rng.integers(8, 513)))
        t = params.myop_t(x)
        for kind in ALL_KINDS:
            got = compute_feature(kind, x, params)
            want = naive_feature(kind.value, x, t, t)
            if want != 0.0:
                worst = max(worst, abs(got - want) / abs(want))
            else:
                assert abs(got) <= 1e-12
    assert worst <= 1e-9, worst
    assert time.perf_counter() - t0 < 5


@pytest.mark.criterion(2, "wavelet suite")
def test_wavelet_properties():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    for _ in range(1000):
        x = rng.normal(size=400) * rng.uniform(0.01, 100)
        y = rng.normal(size=400)
        a, b = rng.normal(size=2)
        levels = int(rng.integers(1, 5))
        dx = decompose(x, levels)
        assert np.max(np.abs(reconstruct(dx) - x)) <= 1e-9
        energy = sum(float(np.dot(s, s)) for s in dx.subbands())
        assert abs(energy - float(np.dot(x, x))) <= 1e-9 * float(np.dot(x, x))
        dy, dxy = decompose(y, levels), decompose(a * x + b * y, levels)
        for s, u, v in zip(dxy.subbands(), dx.subbands(), dy.subbands()):
            np.testing.assert_allclose(s, a * u + b * v, rtol=0, atol=1e-9 * (1 + np.max(np.abs(s))))
    assert time.perf_counter() - t0 < 5


@pytest.mark.criterion(3, "gradient check")
def test_gradient_check():
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    worst = 0.0
    for m in range(10):
        model = init_model(102, 10, seed=100 + m)
        for _ in range(5):
            x = rng.normal(size=102)
            worst = max(worst, gradient_check(model, x, int(rng.integers(1, 11)), seed=m))
    assert worst < 1e-4, worst
    assert time.perf_counter() - t0 < 30


@pytest.mark.criterion(4, "fusion suite")
def test_fusion_suite():
    t0 = time.perf_counter()
    for C, denom in ((2, 4), (3, 3)):
        grid = grid_posteriors(C, denom)
        for n in range(1, 5):
            for combo in itertools.product(grid, repeat=n):
                P = [[float(v) for v in p] for p in combo]
                assert fuse_sum(P).chosen_class == oracle_sum(combo)
                assert fuse_majority(P).chosen_class == oracle_majority(combo)
                if any(all(p[i] > 0 for p in combo) for i in range(C)):
                    assert fuse_bayesian(P).chosen_class == oracle_product(combo)

    P = [[0.5, 0.5], [0.0, 1.0], [0.9, 0.1], [0.9, 0.1]]
    assert fuse_sum(P).chosen_class == 1
    assert fuse_bayesian(P).chosen_class == 2

    rng = np.random.default_rng(5)
    for _ in range(1000):
        C, n = int(rng.integers(2, 11)), int(rng.integers(1, 41))
        P = rng.dirichlet(np.full(C, 0.5), size=n)
        Q = P[rng.permutation(n)]
        for fn in (fuse_majority, fuse_bayesian, fuse_sum):
            a, b = fn(P), fn(Q)
            assert a.chosen_class == b.chosen_class
            np.testing.assert_array_equal(a.scores, b.scores)
    assert time.perf_counter() - t0 < 5


@pytest.mark.criterion(5, "end-to-end synthetic experiment")
def test_end_to_end(full_run):
    report, elapsed = full_run
    acc = report.accuracy
    print(f"\nfull run {elapsed:.1f} s, single-window {report.window_accuracy:.2f}%")
    for (m, L), v in sorted(acc.items()):
        print(f"  {m:9s} {L:6g} ms  {v:6.2f}%")
    assert acc[("sum", 800)] >= 90.0
    for m in CFG.fusion_methods:
        assert acc[(m, 2050)] >= acc[(m, 300)], m
    assert elapsed < 600


def test_fusion_does_not_hurt(full_run):
    report, _ = full_run
    for (m, L), v in report.accuracy.items():
        assert v >= report.window_accuracy - 2.0, (m, L)


@pytest.mark.criterion(6, "feature-condition sweep")
def test_feature_sweep(sweep):
    (conv, full), elapsed = sweep
    assert (conv.input_dim, full.input_dim) == (72, 102)
    mean_conv = np.mean(list(conv.accuracy.values()))
    mean_full = np.mean(list(full.accuracy.values()))
    print(f"\nsweep {elapsed:.1f} s: conventional {mean_conv:.2f}%, all {mean_full:.2f}%")
    assert mean_full >= mean_conv - 1.0
    assert elapsed < 1200


@pytest.mark.criterion(7, "latency benchmark at 800 ms")
def test_latency(recordings):
    t0 = time.perf_counter()
    # latency does not depend on weight values; a short fit keeps the budget
    split = split_by_trial(recordings, CFG.train_trials, CFG.test_trials)
    model, _ = fit_model(dataclasses.replace(CFG, epochs=2), split.train)
    stats = bench_latency(CFG, model, split.test[0], length_ms=800)
    assert (stats.windows, stats.channels) == (15, 2)
    assert stats.repetitions >= 100
    feat = stats.mean_ms[("feature_extraction", "per_signal")]
    clf = stats.mean_ms[("classification", "per_signal")]
    print(f"\nfeatures {feat:.3f} ms, classification {clf:.3f} ms, "
          f"fusion {stats.mean_ms[('fusion', 'per_signal')]:.3f} ms")
    assert feat < 50 and clf < 50
    assert time.perf_counter() - t0 < 60


@pytest.mark.criterion(8, "determinism")
def test_determinism(full_run, tmp_path):
    first, _ = full_run
    second = run_experiment(CFG, bench=False)
    emit_report(first, tmp_path / "a")
    emit_report(second, tmp_path / "b")
    name = "accuracy_by_length.csv"
    assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


@pytest.mark.criterion(9, "leakage canary")
def test_leakage_canary(recordings, tmp_path):
    t0 = time.perf_counter()
    cfg = dataclasses.replace(CFG, epochs=5)
    rng = np.random.default_rng(99)
    perturbed = [
        r if r.trial_index in cfg.train_trials
        else EmgRecording(r.data + rng.normal(scale=5.0, size=r.data.shape), r.sample_rate_hz,
                          r.label, r.subject_id, r.trial_index)
        for r in recordings
    ]
    a, _ = fit_model(cfg, split_by_trial(recordings, cfg.train_trials, cfg.test_trials).train)
    b, _ = fit_model(cfg, split_by_trial(perturbed, cfg.train_trials, cfg.test_trials).train)
    assert save_model(a, tmp_path / "a.json").read_bytes() == save_model(b, tmp_path / "b.json").read_bytes()
    assert time.perf_counter() - t0 < 120
