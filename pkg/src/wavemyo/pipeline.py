"""Experiment orchestration: training, accuracy vs signal length, reports, latency."""

from __future__ import annotations

import csv
import dataclasses
import logging
import time
from collections.abc import Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.metrics import roc_curve

from .classifier import MlpModel, TrainConfig, init_model, predict_proba, train
from .features import ALL_KINDS, CONVENTIONAL_KINDS, FeatureParams, extract_matrix, feature_layout
from .fusion import FusionMethod, fuse
from .signal_io import (
    EmgRecording,
    SyntheticSpec,
    WindowSpec,
    generate_synthetic,
    load_recordings,
    segment,
    split_by_trial,
    window_count,
)

log = logging.getLogger(__name__)

__all__ = [
    "ExperimentConfig",
    "ExperimentReport",
    "LatencyStats",
    "REPORT_FILES",
    "bench_latency",
    "emit_report",
    "feature_condition_sweep",
    "fit_model",
    "load_config",
    "load_data",
    "run_experiment",
    "windows_for_length",
]

REPORT_FILES = (
    "accuracy_by_length.csv",
    "per_class_accuracy.csv",
    "confusion.csv",
    "roc.csv",
    "latency.csv",
    "summary.txt",
)

DEFAULT_LENGTHS_MS = (300, 550, 800, 1050, 1300, 1550, 1800, 2050)


@dataclass
class ExperimentConfig:
    """Flat experiment settings; every field is also a config-file key.

    ``seed`` drives both the synthetic generator and training. ``data_csv``
    of ``None`` selects the synthetic generator (``synth_*`` keys).
    """

    data_csv: str | None = None
    sample_rate_hz: float = 4000.0
    window_ms: float = 100.0
    overlap_ms: float = 50.0
    levels: int = 2
    subbands: str = "details_plus_approx"
    feature_set: str = "all"
    myop_threshold: float | None = None
    wamp_threshold: float | None = None
    threshold_ratio: float = 0.2
    ialv_offset: float = 1.0
    ialv_floor: float = 1e-12
    train_trials: tuple[int, ...] = (1, 2, 3, 4)
    test_trials: tuple[int, ...] = (5, 6)
    epochs: int = 300
    batch_size: int = 32
    learning_rate: float = 1e-3
    patience: int = 30
    val_fraction: float = 0.1
    fusion_methods: tuple[str, ...] = ("majority", "bayesian", "sum")
    bayes_epsilon: float = 0.0
    signal_lengths_ms: tuple[float, ...] = DEFAULT_LENGTHS_MS
    report_length_ms: float = 800.0
    bench_repetitions: int = 100
    bench_warmup: int = 10
    workers: int = 1
    seed: int = 0
    synth_classes: int = 10
    synth_channels: int = 2
    synth_subjects: int = 3
    synth_trials: int = 6
    synth_duration_samples: int = 20000
    synth_noise_std: float = 1.0
    synth_hard_last_class: bool = True

    def validate(self) -> None:
        if not 0 <= self.overlap_ms < self.window_ms:
            raise ValueError(f"need 0 <= overlap_ms < window_ms, got {self.overlap_ms}, {self.window_ms}")
        if self.subbands not in ("details_only", "details_plus_approx"):
            raise ValueError(f"unknown subbands mode {self.subbands!r}")
        if self.feature_set not in ("all", "conventional"):
            raise ValueError(f"unknown feature_set {self.feature_set!r}")
        if self.levels < 1:
            raise ValueError("levels must be positive")
        if not self.signal_lengths_ms:
            raise ValueError("signal_lengths_ms is empty")
        for method in self.fusion_methods:
            FusionMethod(method)
        self.window_spec()
        for length in (*self.signal_lengths_ms, self.report_length_ms):
            if length < self.window_ms:
                raise ValueError(f"signal length {length} ms is shorter than one {self.window_ms} ms window")
            windows_for_length(length, self.sample_rate_hz, self.window_spec())
        if set(self.train_trials) & set(self.test_trials):
            raise ValueError("train_trials and test_trials overlap")
        self.feature_params()
        self.train_config()
        if self.data_csv is None:
            self.synthetic_spec()

    def window_spec(self) -> WindowSpec:
        spec = WindowSpec.from_ms(self.window_ms, self.overlap_ms, self.sample_rate_hz)
        if spec.window_len_samples % (1 << self.levels):
            raise ValueError(
                f"window of {spec.window_len_samples} samples is not divisible by 2**{self.levels}"
            )
        return spec

    def kinds(self):
        return ALL_KINDS if self.feature_set == "all" else CONVENTIONAL_KINDS

    @property
    def include_approximation(self) -> bool:
        return self.subbands == "details_plus_approx"

    def feature_params(self) -> FeatureParams:
        return FeatureParams(
            myop_threshold=self.myop_threshold,
            wamp_threshold=self.wamp_threshold,
            threshold_ratio=self.threshold_ratio,
            ialv_offset=self.ialv_offset,
            ialv_floor=self.ialv_floor,
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            seed=self.seed,
            patience=self.patience,
            val_fraction=self.val_fraction,
        )

    def synthetic_spec(self) -> SyntheticSpec:
        return SyntheticSpec(
            class_count=self.synth_classes,
            channels=self.synth_channels,
            sample_rate_hz=self.sample_rate_hz,
            duration_samples=self.synth_duration_samples,
            trials=self.synth_trials,
            subjects=self.synth_subjects,
            noise_std=self.synth_noise_std,
            seed=self.seed,
            hard_last_class=self.synth_hard_last_class,
        )

    def layout(self, n_channels: int) -> tuple[str, ...]:
        return feature_layout(n_channels, self.levels, self.kinds(), self.include_approximation)

    def to_mapping(self) -> dict[str, str]:
        return {f.name: _format_value(getattr(self, f.name)) for f in dataclasses.fields(self)}


def _format_value(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (tuple, list)):
        return ",".join(_format_value(v) for v in value)
    return str(value)


def _parse_value(raw: str, default):
    raw = raw.strip()
    if raw.lower() in ("none", "") and not isinstance(default, (tuple, list)):
        return None
    if isinstance(default, bool):
        if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
            raise ValueError(f"not a boolean: {raw!r}")
        return raw.lower() in ("true", "1", "yes")
    if isinstance(default, tuple):
        items = [s.strip() for s in raw.split(",") if s.strip()]
        elem = default[0] if default else ""
        return tuple(_parse_value(s, elem) for s in items)
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return raw


def _apply(cfg: ExperimentConfig, values: Mapping[str, str], source: str) -> ExperimentConfig:
    defaults = ExperimentConfig()
    known = {f.name for f in dataclasses.fields(cfg)}
    updates = {}
    for key, raw in values.items():
        if key not in known:
            raise ValueError(f"{source}: unknown config key {key!r}")
        default = getattr(defaults, key)
        if default is None:
            # optional fields: float thresholds or a path
            default = "" if key == "data_csv" else 0.0
        try:
            updates[key] = _parse_value(raw, default)
        except ValueError as exc:
            raise ValueError(f"{source}: bad value for {key}: {exc}") from None
    return dataclasses.replace(cfg, **updates)


def load_config(path: str | Path | None = None, overrides: Mapping[str, str] | None = None) -> ExperimentConfig:
    """Read a ``key = value`` config file; ``#`` starts a comment.

    ``overrides`` (e.g. from the command line) take precedence over the file.
    """
    cfg = ExperimentConfig()
    if path is not None:
        values = {}
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, raw = line.split("=", 1)
            values[key.strip()] = raw
        cfg = _apply(cfg, values, str(path))
    if overrides:
        cfg = _apply(cfg, overrides, "override")
    cfg.validate()
    return cfg


def windows_for_length(length_ms: float, sample_rate_hz: float, spec: WindowSpec) -> int:
    """Windows that fit in the first ``length_ms`` of a recording."""
    exact = length_ms * sample_rate_hz / 1000.0
    n_samples = int(round(exact))
    if abs(exact - n_samples) > 1e-9 * max(1.0, exact):
        raise ValueError(f"{length_ms} ms is not a whole number of samples at {sample_rate_hz} Hz")
    n = window_count(n_samples, spec.window_len_samples, spec.stride_samples)
    if n == 0:
        raise ValueError(f"{length_ms} ms does not hold a full window")
    return n


def load_data(cfg: ExperimentConfig) -> list[EmgRecording]:
    if cfg.data_csv:
        return load_recordings(cfg.data_csv, sample_rate_hz=cfg.sample_rate_hz)
    return generate_synthetic(cfg.synthetic_spec())


def _features(cfg: ExperimentConfig, recordings: Sequence[EmgRecording]) -> tuple[np.ndarray, np.ndarray]:
    spec = cfg.window_spec()
    windows = [w for rec in recordings for w in segment(rec, spec)]
    X = extract_matrix(windows, cfg.levels, cfg.feature_params(), cfg.kinds(), cfg.include_approximation)
    y = np.array([w.label for w in windows], dtype=np.int64)
    return X, y


def fit_model(
    cfg: ExperimentConfig, train_recordings: Sequence[EmgRecording], class_count: int | None = None
) -> tuple[MlpModel, list[float]]:
    """Train a fresh model on training recordings only."""
    X, y = _features(cfg, train_recordings)
    class_count = class_count or int(y.max())
    model = init_model(
        X.shape[1], class_count, seed=cfg.seed, feature_layout=cfg.layout(train_recordings[0].n_channels)
    )
    log.info("training on %d windows x %d features", *X.shape)
    return train(model, X, y, cfg.train_config())


@dataclass
class LatencyStats:
    """Wall-clock timings in milliseconds, keyed by ``(stage, scope)``.

    Stages are ``feature_extraction``, ``classification`` and ``fusion``;
    scope ``per_signal`` covers every window of the segment, ``per_window`` one
    window.
    """

    length_ms: float
    windows: int
    channels: int
    repetitions: int
    mean_ms: dict[tuple[str, str], float]
    p95_ms: dict[tuple[str, str], float]

    @property
    def stages(self) -> list[str]:
        return list(dict.fromkeys(stage for stage, _ in self.mean_ms))


@dataclass
class ExperimentReport:
    feature_set: str
    input_dim: int
    class_count: int
    methods: tuple[str, ...]
    lengths_ms: tuple[float, ...]
    windows_per_length: dict[float, int]
    accuracy: dict[tuple[str, float], float]
    window_accuracy: float
    report_length_ms: float
    per_class: dict[str, list[tuple[int, int, int]]]
    confusion: dict[str, np.ndarray]
    roc: list[tuple[str, float, float, float]]
    per_subject: dict[tuple[str, str, float], float]
    latency: LatencyStats | None
    train_windows: int
    epochs_run: int
    final_train_loss: float
    config: dict[str, str] = field(default_factory=dict)


def _posteriors(cfg: ExperimentConfig, model: MlpModel, recordings: Sequence[EmgRecording]) -> list[np.ndarray]:
    spec = cfg.window_spec()

    def one(rec: EmgRecording) -> np.ndarray:
        X = extract_matrix(segment(rec, spec), cfg.levels, cfg.feature_params(), cfg.kinds(), cfg.include_approximation)
        return predict_proba(model, X)

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            return list(pool.map(one, recordings))
    return [one(rec) for rec in recordings]


def _roc_rows(scores: np.ndarray, labels: np.ndarray, class_count: int) -> list[tuple[str, float, float, float]]:
    onehot = np.zeros_like(scores)
    onehot[np.arange(len(labels)), labels - 1] = 1
    rows = []
    curves = [(f"class_{k + 1}", onehot[:, k], scores[:, k]) for k in range(class_count)]
    curves.append(("micro", onehot.ravel(), scores.ravel()))
    for name, truth, score in curves:
        if truth.min() == truth.max():
            continue
        fpr, tpr, thr = roc_curve(truth, score)
        rows.extend((name, float(a), float(b), float(t)) for a, b, t in zip(fpr, tpr, thr))
    return rows


def run_experiment(
    cfg: ExperimentConfig,
    model: MlpModel | None = None,
    recordings: Sequence[EmgRecording] | None = None,
    bench: bool = True,
) -> ExperimentReport:
    """Train (unless ``model`` is given), then score every fusion method at every signal length.

    Each decision fuses the first ``n`` windows of a test recording, with
    ``n`` the number of full windows inside the signal length.
    """
    cfg.validate()
    recordings = list(recordings) if recordings is not None else load_data(cfg)
    split = split_by_trial(recordings, cfg.train_trials, cfg.test_trials)
    class_count = max(r.label for r in recordings)
    spec = cfg.window_spec()

    history: list[float] = []
    train_windows = sum(window_count(r.n_samples, spec.window_len_samples, spec.stride_samples) for r in split.train)
    if model is None:
        model, history = fit_model(cfg, split.train, class_count)
    elif model.feature_layout and model.feature_layout != cfg.layout(split.test[0].n_channels):
        raise ValueError("model feature layout does not match the configured features")
    class_count = model.class_count

    posts = _posteriors(cfg, model, split.test)
    labels = np.array([r.label for r in split.test])
    subjects = [r.subject_id for r in split.test]
    lengths = tuple(cfg.signal_lengths_ms)
    n_for = {L: windows_for_length(L, cfg.sample_rate_hz, spec) for L in (*lengths, cfg.report_length_ms)}
    shortest = min(p.shape[0] for p in posts)
    too_long = [L for L, n in n_for.items() if n > shortest]
    if too_long:
        raise ValueError(f"signal lengths {too_long} ms exceed the shortest test recording ({shortest} windows)")

    def decide(method: str, n: int) -> np.ndarray:
        return np.array([fuse(method, p[:n], cfg.bayes_epsilon).chosen_class for p in posts])

    accuracy, per_subject = {}, {}
    for method in cfg.fusion_methods:
        for L in lengths:
            pred = decide(method, n_for[L])
            accuracy[(method, L)] = 100.0 * float(np.mean(pred == labels))
            for subj in sorted(set(subjects)):
                mask = np.array([s == subj for s in subjects])
                per_subject[(method, subj, L)] = 100.0 * float(np.mean(pred[mask] == labels[mask]))

    all_windows = np.vstack(posts)
    window_labels = np.concatenate([np.full(p.shape[0], lab) for p, lab in zip(posts, labels)])
    window_accuracy = 100.0 * float(np.mean(all_windows.argmax(axis=1) + 1 == window_labels))

    n_rep = n_for[cfg.report_length_ms]
    per_class, confusion = {}, {}
    for method in cfg.fusion_methods:
        pred = decide(method, n_rep)
        cm = np.zeros((class_count, class_count), dtype=np.int64)
        np.add.at(cm, (labels - 1, pred - 1), 1)
        confusion[method] = cm
        per_class[method] = [(k + 1, int(cm[k].sum()), int(cm[k, k])) for k in range(class_count)]

    fused = np.array([p[:n_rep].sum(axis=0) / n_rep for p in posts])
    roc = _roc_rows(fused, labels, class_count)

    latency = bench_latency(cfg, model, split.test[0]) if bench else None
    return ExperimentReport(
        feature_set=cfg.feature_set,
        input_dim=model.input_dim,
        class_count=class_count,
        methods=tuple(cfg.fusion_methods),
        lengths_ms=lengths,
        windows_per_length={L: n_for[L] for L in lengths},
        accuracy=accuracy,
        window_accuracy=window_accuracy,
        report_length_ms=cfg.report_length_ms,
        per_class=per_class,
        confusion=confusion,
        roc=roc,
        per_subject=per_subject,
        latency=latency,
        train_windows=train_windows,
        epochs_run=len(history),
        final_train_loss=history[-1] if history else float("nan"),
        config=cfg.to_mapping(),
    )


def feature_condition_sweep(
    cfg: ExperimentConfig, recordings: Sequence[EmgRecording] | None = None, bench: bool = True
) -> tuple[ExperimentReport, ExperimentReport]:
    """Run the experiment with the 12 conventional features, then with all 17."""
    recordings = list(recordings) if recordings is not None else load_data(cfg)
    conventional = run_experiment(dataclasses.replace(cfg, feature_set="conventional"), recordings=recordings, bench=bench)
    full = run_experiment(dataclasses.replace(cfg, feature_set="all"), recordings=recordings, bench=bench)
    return conventional, full


def _timed(fn, repetitions: int, warmup: int) -> np.ndarray:
    for _ in range(warmup):
        fn()
    out = np.empty(repetitions)
    for i in range(repetitions):
        t0 = time.perf_counter()
        fn()
        out[i] = time.perf_counter() - t0
    return out * 1000.0


def bench_latency(
    cfg: ExperimentConfig, model: MlpModel, recording: EmgRecording, length_ms: float | None = None
) -> LatencyStats:
    """Time feature extraction, classification and fusion for one decision.

    Data loading and report writing are excluded. The sum rule is used for
    the fusion stage.
    """
    length_ms = cfg.report_length_ms if length_ms is None else length_ms
    spec = cfg.window_spec()
    n = windows_for_length(length_ms, cfg.sample_rate_hz, spec)
    windows = segment(recording, spec)[:n]
    if len(windows) < n:
        raise ValueError(f"recording holds {len(windows)} windows, {length_ms} ms needs {n}")
    reps = max(100, cfg.bench_repetitions)
    args = (cfg.levels, cfg.feature_params(), cfg.kinds(), cfg.include_approximation)
    X = extract_matrix(windows, *args)
    P = predict_proba(model, X)

    timings = {
        ("feature_extraction", "per_signal"): lambda: extract_matrix(windows, *args),
        ("feature_extraction", "per_window"): lambda: extract_matrix(windows[:1], *args),
        ("classification", "per_signal"): lambda: predict_proba(model, X),
        ("classification", "per_window"): lambda: predict_proba(model, X[:1]),
        ("fusion", "per_signal"): lambda: fuse(FusionMethod.SUM_OF_POSTERIORS, P),
        ("fusion", "per_window"): lambda: fuse(FusionMethod.SUM_OF_POSTERIORS, P[:1]),
    }
    mean, p95 = {}, {}
    for key, fn in timings.items():
        ms = _timed(fn, reps, cfg.bench_warmup)
        mean[key] = float(ms.mean())
        p95[key] = float(np.percentile(ms, 95))
    return LatencyStats(length_ms, n, recording.n_channels, reps, mean, p95)


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _pct(value: float) -> str:
    return f"{value:.4f}"


def emit_report(reports: ExperimentReport | Sequence[ExperimentReport], out_dir: str | Path) -> list[Path]:
    """Write the fixed report file set into ``out_dir``.

    With several reports (a feature-condition sweep) every condition appears
    in ``accuracy_by_length.csv``; the other files describe the last report.
    """
    if isinstance(reports, ExperimentReport):
        reports = [reports]
    reports = list(reports)
    main = reports[-1]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / name for name in REPORT_FILES]
    acc, per_cls, conf, roc, lat, summary = paths

    _write_csv(
        acc,
        ["method", "feature_set", "length_ms", "accuracy_pct"],
        [
            (m, r.feature_set, f"{L:g}", _pct(r.accuracy[(m, L)]))
            for r in reports
            for m in r.methods
            for L in r.lengths_ms
        ],
    )
    _write_csv(
        per_cls,
        ["method", "feature_set", "length_ms", "class", "n_test", "n_correct", "accuracy_pct"],
        [
            (m, main.feature_set, f"{main.report_length_ms:g}", k, n, c, _pct(100.0 * c / n if n else 0.0))
            for m in main.methods
            for k, n, c in main.per_class[m]
        ],
    )
    _write_csv(
        conf,
        ["method", "true_class", *[f"pred_{k}" for k in range(1, main.class_count + 1)]],
        [(m, k + 1, *row.tolist()) for m in main.methods for k, row in enumerate(main.confusion[m])],
    )
    _write_csv(roc, ["curve", "fpr", "tpr", "threshold"], [(c, repr(f), repr(t), repr(th)) for c, f, t, th in main.roc])
    lat_rows = []
    if main.latency is not None:
        s = main.latency
        lat_rows = [
            (stage, scope, f"{s.length_ms:g}", s.windows if scope == "per_signal" else 1, s.channels, s.repetitions,
             f"{s.mean_ms[(stage, scope)]:.6f}", f"{s.p95_ms[(stage, scope)]:.6f}")
            for stage, scope in s.mean_ms
        ]
    _write_csv(lat, ["stage", "scope", "length_ms", "windows", "channels", "repetitions", "mean_ms", "p95_ms"], lat_rows)
    summary.write_text(_summary_text(reports), encoding="utf-8")
    return paths


def _summary_text(reports: Sequence[ExperimentReport]) -> str:
    lines = []
    for r in reports:
        lines.append(f"feature set: {r.feature_set} (input dim {r.input_dim}, {r.class_count} classes)")
        lines.append(f"training windows: {r.train_windows}, epochs run: {r.epochs_run}, final loss: {r.final_train_loss:.4f}")
        lines.append(f"single-window accuracy: {r.window_accuracy:.2f}%")
        header = "method".ljust(10) + "".join(f"{L:>8g}" for L in r.lengths_ms)
        lines.append("accuracy (%) by signal length (ms):")
        lines.append(header)
        for m in r.methods:
            lines.append(m.ljust(10) + "".join(f"{r.accuracy[(m, L)]:8.2f}" for L in r.lengths_ms))
        lines.append("windows fused: " + ", ".join(f"{L:g} ms -> {n}" for L, n in r.windows_per_length.items()))
        subjects = sorted({s for _, s, _ in r.per_subject})
        if len(subjects) > 1:
            lines.append(f"per-subject accuracy at {r.report_length_ms:g} ms:")
            for m in r.methods:
                if (m, subjects[0], r.report_length_ms) in r.per_subject:
                    vals = ", ".join(f"{s}={r.per_subject[(m, s, r.report_length_ms)]:.1f}" for s in subjects)
                    lines.append(f"  {m}: {vals}")
        if r.latency is not None:
            s = r.latency
            lines.append(f"latency at {s.length_ms:g} ms ({s.windows} windows, {s.repetitions} reps):")
            for (stage, scope), v in s.mean_ms.items():
                lines.append(f"  {stage:<19}{scope:<11} mean {v:8.3f} ms  p95 {s.p95_ms[(stage, scope)]:8.3f} ms")
        lines.append("")
    lines.append("config:")
    lines.extend(f"  {k} = {v}" for k, v in reports[-1].config.items())
    return "\n".join(lines) + "\n"
