"""Loading, synthesis and windowing of multi-channel EMG recordings.

Recordings are stored as a ``(n_channels, n_samples)`` float64 array. The
arrays handed out by this module are read-only so that windows can be cheap
views into their parent recording.
"""

from __future__ import annotations

import csv
import math
import warnings
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "ClassProfile",
    "CsvSchema",
    "DatasetSplit",
    "EmgRecording",
    "SyntheticSpec",
    "Window",
    "WindowSpec",
    "generate_synthetic",
    "load_recordings",
    "segment",
    "split_by_trial",
    "window_count",
    "write_recordings",
]


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class EmgRecording:
    """One gesture trial: ``data[c, n]`` is sample ``n`` of channel ``c``."""

    data: np.ndarray
    sample_rate_hz: float
    label: int
    subject_id: str = "s1"
    trial_index: int = 1

    def __post_init__(self):
        data = self.data
        if not isinstance(data, np.ndarray) or data.dtype != np.float64 or data.flags.writeable:
            data = _frozen_array(data)
        if data.ndim == 1:
            data = _frozen_array(data[np.newaxis, :])
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise ValueError(f"recording needs >= 1 channel of >= 1 sample, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("recording contains non-finite samples")
        if not self.sample_rate_hz > 0:
            raise ValueError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        if int(self.label) < 1:
            raise ValueError(f"labels are 1-based class ids, got {self.label}")
        if int(self.trial_index) < 1:
            raise ValueError(f"trial indices start at 1, got {self.trial_index}")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "label", int(self.label))
        object.__setattr__(self, "trial_index", int(self.trial_index))
        object.__setattr__(self, "subject_id", str(self.subject_id))

    @property
    def channels(self) -> list[np.ndarray]:
        return list(self.data)

    @property
    def n_channels(self) -> int:
        return self.data.shape[0]

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]

    @property
    def key(self) -> tuple[str, int, int]:
        return (self.subject_id, self.trial_index, self.label)


@dataclass(frozen=True)
class WindowSpec:
    window_len_samples: int = 400
    stride_samples: int = 200

    def __post_init__(self):
        if self.window_len_samples < 1:
            raise ValueError("window_len_samples must be positive")
        if not 0 < self.stride_samples <= self.window_len_samples:
            raise ValueError(
                f"stride must satisfy 0 < stride <= window, got stride={self.stride_samples}, "
                f"window={self.window_len_samples}"
            )

    @classmethod
    def from_ms(cls, window_ms: float, overlap_ms: float, sample_rate_hz: float) -> WindowSpec:
        """Convert a millisecond window/overlap pair into sample counts."""
        if not 0 <= overlap_ms < window_ms:
            raise ValueError(f"need 0 <= overlap_ms < window_ms, got {overlap_ms}, {window_ms}")
        win = _ms_to_samples(window_ms, sample_rate_hz)
        overlap = _ms_to_samples(overlap_ms, sample_rate_hz)
        return cls(win, win - overlap)

    @property
    def overlap_samples(self) -> int:
        return self.window_len_samples - self.stride_samples


def _ms_to_samples(ms: float, sample_rate_hz: float) -> int:
    exact = ms * sample_rate_hz / 1000.0
    n = int(round(exact))
    if abs(exact - n) > 1e-9 * max(1.0, abs(exact)):
        raise ValueError(f"{ms} ms is not a whole number of samples at {sample_rate_hz} Hz")
    return n


@dataclass(frozen=True, eq=False)
class Window:
    data: np.ndarray
    start_sample: int
    label: int
    subject_id: str
    trial_index: int

    @property
    def channels(self) -> list[np.ndarray]:
        return list(self.data)


@dataclass(frozen=True)
class DatasetSplit:
    train: list[EmgRecording]
    test: list[EmgRecording]
    dropped: int = 0

    def __post_init__(self):
        shared = {r.key for r in self.train} & {r.key for r in self.test}
        if shared:
            raise ValueError(f"train and test share recordings: {sorted(shared)[:3]}")


@dataclass(frozen=True)
class ClassProfile:
    """Spectral signature of one synthetic gesture.

    ``band_gains[c][b]`` is the amplitude of band ``b`` on channel ``c``. The
    envelope is ``1 + burst_depth * sin(2*pi*burst_rate_hz*t + phase)``.
    """

    band_gains: tuple[tuple[float, ...], ...]
    burst_rate_hz: float = 0.0
    burst_depth: float = 0.0


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of the synthetic gesture generator.

    Each band is a sum of ``tones_per_band`` sinusoids placed on a grid of
    ``tone_grid_hz``. When the grid divides ``sample_rate_hz / window_len`` the
    windows span whole periods, so a noise-free recording has constant
    per-window energy.
    """

    class_count: int = 10
    channels: int = 2
    sample_rate_hz: float = 4000.0
    duration_samples: int = 20000
    trials: int = 6
    subjects: int = 3
    noise_std: float = 1.0
    seed: int = 0
    band_edges_hz: tuple[tuple[float, float], ...] = ((20.0, 480.0), (520.0, 980.0), (1020.0, 1900.0))
    tones_per_band: int = 5
    tone_grid_hz: float = 10.0
    amplitude_jitter: float = 0.1
    subject_gain_jitter: float = 0.15
    hard_last_class: bool = True
    min_class_separation: float = 0.45
    profiles: tuple[ClassProfile, ...] | None = None

    def __post_init__(self):
        if self.class_count < 2:
            raise ValueError(f"class_count must be >= 2, got {self.class_count}")
        if self.noise_std < 0:
            raise ValueError("noise_std must be non-negative")
        if self.channels < 1 or self.duration_samples < 1 or self.trials < 1 or self.subjects < 1:
            raise ValueError("channels, duration_samples, trials and subjects must be positive")
        if not self.sample_rate_hz > 0:
            raise ValueError("sample_rate_hz must be positive")
        if self.profiles is not None and len(self.profiles) != self.class_count:
            raise ValueError("need exactly one profile per class")


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CsvSchema:
    subject: str = "subject"
    trial: str = "trial"
    label: str = "label"
    channel_prefix: str = "channel_"


def load_recordings(
    path: str | Path,
    schema: CsvSchema | None = None,
    sample_rate_hz: float = 4000.0,
) -> list[EmgRecording]:
    """Read recordings from a long-format CSV file.

    Rows are grouped by ``(subject, trial, label)`` in order of first
    appearance; samples within a group keep file order.

    Raises
    ------
    ValueError
        On an empty file, a missing column, or a malformed or non-finite value.
        Messages carry the 1-based line number.
    """
    schema = schema or CsvSchema()
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)

    groups: dict[tuple[str, int, int], list[list[float]]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: no records")
        header = [h.strip() for h in header]
        for col in (schema.subject, schema.trial, schema.label):
            if col not in header:
                raise ValueError(f"{path}: missing required column {col!r}")
        channel_cols = [i for i, h in enumerate(header) if h.startswith(schema.channel_prefix)]
        if not channel_cols:
            raise ValueError(f"{path}: missing required column {schema.channel_prefix}1")
        i_subj = header.index(schema.subject)
        i_trial = header.index(schema.trial)
        i_label = header.index(schema.label)

        for row in reader:
            lineno = reader.line_num
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                key = (row[i_subj].strip(), int(row[i_trial]), int(row[i_label]))
                samples = [float(row[i]) for i in channel_cols]
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: malformed row ({exc})") from None
            if not all(math.isfinite(v) for v in samples):
                raise ValueError(f"{path}:{lineno}: non-finite sample")
            groups.setdefault(key, []).append(samples)

    if not groups:
        raise ValueError(f"{path}: no records")
    return [
        EmgRecording(
            data=np.asarray(rows, dtype=np.float64).T,
            sample_rate_hz=sample_rate_hz,
            label=label,
            subject_id=subject,
            trial_index=trial,
        )
        for (subject, trial, label), rows in groups.items()
    ]


def write_recordings(recordings: Sequence[EmgRecording], path: str | Path) -> Path:
    """Write recordings in the format read by :func:`load_recordings`.

    Floats are written with ``repr`` so a reload is bit-exact.
    """
    if not recordings:
        raise ValueError("nothing to write")
    n_ch = recordings[0].n_channels
    if any(r.n_channels != n_ch for r in recordings):
        raise ValueError("all recordings must have the same channel count")
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["subject", "trial", "label"] + [f"channel_{c + 1}" for c in range(n_ch)])
        for rec in recordings:
            prefix = [rec.subject_id, rec.trial_index, rec.label]
            for column in rec.data.T:
                writer.writerow(prefix + [repr(float(v)) for v in column])
    return path


# ---------------------------------------------------------------------------
# Synthetic data
# ---------------------------------------------------------------------------


def _seed_words(seed: int) -> list[int]:
    s = int(seed) % (1 << 64)
    return [s & 0xFFFFFFFF, s >> 32]


def _default_profiles(spec: SyntheticSpec) -> list[ClassProfile]:
    rng = np.random.default_rng(_seed_words(spec.seed) + [0x5EED])
    shape = (spec.channels, len(spec.band_edges_hz))
    lo, hi = np.log(0.15), 0.0
    log_gains: list[np.ndarray] = []
    for _ in range(spec.class_count):
        # rejection sampling keeps profiles at least min_class_separation apart (RMS log-gain distance)
        for _attempt in range(10_000):
            cand = rng.uniform(lo, hi, size=shape)
            if all(np.sqrt(np.mean((cand - g) ** 2)) >= spec.min_class_separation for g in log_gains):
                break
        log_gains.append(cand)
    rates = rng.uniform(1.0, 4.0, size=spec.class_count)
    depths = rng.uniform(0.3, 0.8, size=spec.class_count)
    if spec.hard_last_class and spec.class_count >= 3:
        # halfway between the first two classes, with a deeper burst envelope
        log_gains[-1] = 0.5 * (log_gains[0] + log_gains[1])
        depths[-1] = 0.9
    return [
        ClassProfile(
            band_gains=tuple(tuple(float(g) for g in ch) for ch in np.exp(log_gains[k])),
            burst_rate_hz=float(rates[k]),
            burst_depth=float(depths[k]),
        )
        for k in range(spec.class_count)
    ]


def _band_tones(spec: SyntheticSpec, rng: np.random.Generator) -> np.ndarray:
    """Tone frequencies, shape ``(channels, bands, tones_per_band)``."""
    out = np.empty((spec.channels, len(spec.band_edges_hz), spec.tones_per_band))
    for b, (lo, hi) in enumerate(spec.band_edges_hz):
        grid = np.arange(math.ceil(lo / spec.tone_grid_hz), math.floor(hi / spec.tone_grid_hz) + 1)
        for c in range(spec.channels):
            out[c, b] = rng.choice(grid, size=spec.tones_per_band, replace=False) * spec.tone_grid_hz
    return out


def generate_synthetic(spec: SyntheticSpec) -> list[EmgRecording]:
    """Generate labelled recordings with a distinct band-energy signature per class.

    Output order is subject, then class, then trial. The result depends only
    on ``spec``; per-recording random streams are keyed on
    ``(seed, subject, class, trial)``.
    """
    profiles = list(spec.profiles) if spec.profiles is not None else _default_profiles(spec)
    n_bands = len(spec.band_edges_hz)
    for p in profiles:
        if np.shape(p.band_gains) != (spec.channels, n_bands):
            raise ValueError(
                f"profile band_gains must have shape {(spec.channels, n_bands)}, got {np.shape(p.band_gains)}"
            )
    tones = _band_tones(spec, np.random.default_rng(_seed_words(spec.seed) + [0x70E5]))
    class_tones = []
    for k in range(spec.class_count):
        rng = np.random.default_rng(_seed_words(spec.seed) + [0x70E5, k + 1])
        # half of the tones are shared, half are class specific
        own = _band_tones(spec, rng)
        mix = tones.copy()
        mix[..., spec.tones_per_band // 2 :] = own[..., spec.tones_per_band // 2 :]
        class_tones.append(mix)

    t = np.arange(spec.duration_samples) / spec.sample_rate_hz
    recordings = []
    for s in range(spec.subjects):
        srng = np.random.default_rng(_seed_words(spec.seed) + [0x5B, s])
        subject_gain = 1.0 + spec.subject_gain_jitter * srng.uniform(-1, 1, size=spec.channels)
        for k, profile in enumerate(profiles):
            gains = np.asarray(profile.band_gains, dtype=np.float64)
            freqs = class_tones[k]
            for trial in range(1, spec.trials + 1):
                rng = np.random.default_rng(_seed_words(spec.seed) + [s, k + 1, trial])
                jitter = 1.0 + spec.amplitude_jitter * rng.uniform(-1, 1, size=gains.shape)
                phases = rng.uniform(0, 2 * np.pi, size=freqs.shape)
                burst_phase = rng.uniform(0, 2 * np.pi)
                envelope = 1.0 + profile.burst_depth * np.sin(2 * np.pi * profile.burst_rate_hz * t + burst_phase)
                data = np.empty((spec.channels, spec.duration_samples))
                for c in range(spec.channels):
                    arg = 2 * np.pi * freqs[c][..., np.newaxis] * t + phases[c][..., np.newaxis]
                    bands = np.sin(arg).sum(axis=1) / np.sqrt(spec.tones_per_band)
                    data[c] = subject_gain[c] * envelope * ((gains[c] * jitter[c]) @ bands)
                if spec.noise_std > 0:
                    data += rng.normal(0.0, spec.noise_std, size=data.shape)
                recordings.append(
                    EmgRecording(
                        data=data,
                        sample_rate_hz=spec.sample_rate_hz,
                        label=k + 1,
                        subject_id=f"s{s + 1}",
                        trial_index=trial,
                    )
                )
    return recordings


# ---------------------------------------------------------------------------
# Windowing and splits
# ---------------------------------------------------------------------------


def window_count(n_samples: int, window_len: int, stride: int) -> int:
    """Number of full windows; 0 when the signal is shorter than one window."""
    if n_samples < window_len:
        return 0
    return (n_samples - window_len) // stride + 1


def segment(recording: EmgRecording, spec: WindowSpec) -> list[Window]:
    """Cut a recording into overlapping windows, dropping any trailing partial window."""
    n = window_count(recording.n_samples, spec.window_len_samples, spec.stride_samples)
    if n == 0:
        raise ValueError(
            f"recording has {recording.n_samples} samples, shorter than one "
            f"{spec.window_len_samples}-sample window"
        )
    out = []
    for i in range(n):
        start = i * spec.stride_samples
        out.append(
            Window(
                data=recording.data[:, start : start + spec.window_len_samples],
                start_sample=start,
                label=recording.label,
                subject_id=recording.subject_id,
                trial_index=recording.trial_index,
            )
        )
    return out


def split_by_trial(
    recordings: Iterable[EmgRecording],
    train_trials: Iterable[int],
    test_trials: Iterable[int],
) -> DatasetSplit:
    train_set, test_set = set(train_trials), set(test_trials)
    if train_set & test_set:
        raise ValueError(f"train and test trial sets overlap: {sorted(train_set & test_set)}")
    train, test, dropped = [], [], 0
    for rec in recordings:
        if rec.trial_index in train_set:
            train.append(rec)
        elif rec.trial_index in test_set:
            test.append(rec)
        else:
            dropped += 1
    if not train or not test:
        raise ValueError(f"empty partition: {len(train)} train, {len(test)} test recordings")
    if dropped:
        warnings.warn(f"{dropped} recording(s) belong to neither trial set and were dropped", stacklevel=2)
    return DatasetSplit(train=train, test=test, dropped=dropped)
