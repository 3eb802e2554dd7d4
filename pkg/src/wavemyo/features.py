"""Per-sub-band EMG features and the per-window feature vector.

Twelve conventional time-domain features plus five derivative/exponential
features are evaluated on every wavelet sub-band of every channel. The vector
layout is channel-major, then sub-band (D1, D2, ..., A_L), then feature kind
in :class:`FeatureKind` order.
"""

from __future__ import annotations

import csv
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .signal_io import Window
from .wavelet import decompose

__all__ = [
    "ALL_KINDS",
    "CONVENTIONAL_KINDS",
    "FeatureKind",
    "FeatureParams",
    "FeatureVector",
    "NOVEL_KINDS",
    "compute_feature",
    "conventional_feature",
    "extract_matrix",
    "extract_vector",
    "feature_layout",
    "ialv",
    "iasd",
    "iatd",
    "ie",
    "ieav",
    "read_feature_table",
    "subband_names",
    "write_feature_table",
]


class FeatureKind(Enum):
    IEMG = "IEMG"
    MAV = "MAV"
    SSI = "SSI"
    RMS = "RMS"
    VAR = "VAR"
    MYOP = "MYOP"
    WL = "WL"
    DAMV = "DAMV"
    M2 = "M2"
    DVARV = "DVARV"
    DASDV = "DASDV"
    WAMP = "WAMP"
    IASD = "IASD"
    IATD = "IATD"
    IEAV = "IEAV"
    IALV = "IALV"
    IE = "IE"


ALL_KINDS: tuple[FeatureKind, ...] = tuple(FeatureKind)
CONVENTIONAL_KINDS: tuple[FeatureKind, ...] = ALL_KINDS[:12]
NOVEL_KINDS: tuple[FeatureKind, ...] = ALL_KINDS[12:]

_MIN_LEN = {k: 1 for k in FeatureKind}
_MIN_LEN.update(
    {
        FeatureKind.VAR: 2,
        FeatureKind.WL: 2,
        FeatureKind.DAMV: 2,
        FeatureKind.M2: 2,
        FeatureKind.DASDV: 2,
        FeatureKind.WAMP: 2,
        FeatureKind.DVARV: 3,
        FeatureKind.IASD: 3,
        FeatureKind.IATD: 4,
    }
)


@dataclass(frozen=True)
class FeatureParams:
    """Thresholds and constants used by the features.

    ``myop_threshold`` / ``wamp_threshold`` of ``None`` mean "relative": the
    threshold becomes ``threshold_ratio * std(x)`` of the sub-band being
    processed. ``exp_guard`` bounds the argument of ``exp`` in IEAV and IE.
    """

    myop_threshold: float | None = None
    wamp_threshold: float | None = None
    threshold_ratio: float = 0.2
    ialv_offset: float = 1.0
    ialv_floor: float = 1e-12
    exp_guard: float = 700.0

    def __post_init__(self):
        for name in ("myop_threshold", "wamp_threshold"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.threshold_ratio < 0:
            raise ValueError("threshold_ratio must be non-negative")
        if not self.ialv_offset > 0 or not self.ialv_floor > 0:
            raise ValueError("ialv_offset and ialv_floor must be positive")

    def myop_t(self, x: np.ndarray) -> float:
        if self.myop_threshold is not None:
            return self.myop_threshold
        return self.threshold_ratio * float(np.std(x))

    def wamp_t(self, x: np.ndarray) -> float:
        if self.wamp_threshold is not None:
            return self.wamp_threshold
        return self.threshold_ratio * float(np.std(x))


_DEFAULT_PARAMS = FeatureParams()


def _as_input(x, kind: FeatureKind) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{kind.value}: expected a 1-D array")
    if arr.size < _MIN_LEN[kind]:
        raise ValueError(f"{kind.value} needs at least {_MIN_LEN[kind]} samples, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{kind.value}: input contains non-finite values")
    return arr


def conventional_feature(kind: FeatureKind, x, params: FeatureParams = _DEFAULT_PARAMS) -> float:
    """Evaluate one of the twelve conventional time-domain features."""
    if kind not in CONVENTIONAL_KINDS:
        raise ValueError(f"{kind} is not a conventional feature")
    x = _as_input(x, kind)
    n = x.size
    if kind is FeatureKind.IEMG:
        return float(np.sum(np.abs(x)))
    if kind is FeatureKind.MAV:
        return float(np.mean(np.abs(x)))
    if kind is FeatureKind.SSI:
        return float(np.dot(x, x))
    if kind is FeatureKind.RMS:
        return float(np.sqrt(np.dot(x, x) / n))
    if kind is FeatureKind.VAR:
        # raw second moment, no mean removal
        return float(np.dot(x, x) / (n - 1))
    if kind is FeatureKind.MYOP:
        return float(np.count_nonzero(np.abs(x) > params.myop_t(x)) / n)
    d = np.diff(x)
    if kind is FeatureKind.WL:
        return float(np.sum(np.abs(d)))
    if kind is FeatureKind.DAMV:
        return float(np.sum(np.abs(d)) / (n - 1))
    if kind is FeatureKind.M2:
        return float(np.dot(d, d))
    if kind is FeatureKind.DVARV:
        return float(np.dot(d, d) / (n - 2))
    if kind is FeatureKind.DASDV:
        return float(np.sqrt(np.dot(d, d) / (n - 1)))
    # WAMP
    return float(np.count_nonzero(np.abs(d) > params.wamp_t(x)))


def iasd(x) -> float:
    """Sum of absolute second differences."""
    x = _as_input(x, FeatureKind.IASD)
    return float(np.sum(np.abs(np.diff(x, n=2))))


def iatd(x) -> float:
    """Sum of absolute third differences."""
    x = _as_input(x, FeatureKind.IATD)
    return float(np.sum(np.abs(np.diff(x, n=3))))


def _check_exp(x: np.ndarray, peak: float, kind: FeatureKind, guard: float) -> None:
    if peak >= guard:
        raise ValueError(
            f"{kind.value}: exp argument {peak:.3g} exceeds the overflow guard {guard}; "
            "normalize the signal amplitude first"
        )


def ieav(x, params: FeatureParams = _DEFAULT_PARAMS) -> float:
    x = _as_input(x, FeatureKind.IEAV)
    a = np.abs(x)
    _check_exp(x, float(a.max()), FeatureKind.IEAV, params.exp_guard)
    return float(np.sum(np.exp(a)))


def ialv(x, params: FeatureParams = _DEFAULT_PARAMS) -> float:
    """Sum of ``|log(x + T)|`` with the log argument clamped at ``ialv_floor``."""
    x = _as_input(x, FeatureKind.IALV)
    return float(np.sum(np.abs(np.log(np.maximum(x + params.ialv_offset, params.ialv_floor)))))


def ie(x, params: FeatureParams = _DEFAULT_PARAMS) -> float:
    x = _as_input(x, FeatureKind.IE)
    _check_exp(x, float(x.max()), FeatureKind.IE, params.exp_guard)
    return float(np.sum(np.exp(x)))


def compute_feature(kind: FeatureKind, x, params: FeatureParams = _DEFAULT_PARAMS) -> float:
    if kind in CONVENTIONAL_KINDS:
        return conventional_feature(kind, x, params)
    if kind is FeatureKind.IASD:
        return iasd(x)
    if kind is FeatureKind.IATD:
        return iatd(x)
    if kind is FeatureKind.IEAV:
        return ieav(x, params)
    if kind is FeatureKind.IALV:
        return ialv(x, params)
    return ie(x, params)


def _band_features(x: np.ndarray, kinds: Sequence[FeatureKind], params: FeatureParams) -> list[float]:
    # Same formulas as the public functions, sharing the difference arrays.
    n = x.size
    a = np.abs(x)
    sq = float(np.dot(x, x))
    d = np.diff(x)
    ad = np.abs(d)
    dsq = float(np.dot(d, d))
    sum_ad = float(ad.sum())
    out = []
    for kind in kinds:
        if kind is FeatureKind.IEMG:
            v = a.sum()
        elif kind is FeatureKind.MAV:
            v = a.sum() / n
        elif kind is FeatureKind.SSI:
            v = sq
        elif kind is FeatureKind.RMS:
            v = np.sqrt(sq / n)
        elif kind is FeatureKind.VAR:
            v = sq / (n - 1)
        elif kind is FeatureKind.MYOP:
            v = np.count_nonzero(a > params.myop_t(x)) / n
        elif kind is FeatureKind.WL:
            v = sum_ad
        elif kind is FeatureKind.DAMV:
            v = sum_ad / (n - 1)
        elif kind is FeatureKind.M2:
            v = dsq
        elif kind is FeatureKind.DVARV:
            v = dsq / (n - 2)
        elif kind is FeatureKind.DASDV:
            v = np.sqrt(dsq / (n - 1))
        elif kind is FeatureKind.WAMP:
            v = np.count_nonzero(ad > params.wamp_t(x))
        elif kind is FeatureKind.IASD:
            v = np.abs(np.diff(d)).sum()
        elif kind is FeatureKind.IATD:
            v = np.abs(np.diff(d, n=2)).sum()
        elif kind is FeatureKind.IEAV:
            _check_exp(x, float(a.max()), kind, params.exp_guard)
            v = np.exp(a).sum()
        elif kind is FeatureKind.IALV:
            v = np.abs(np.log(np.maximum(x + params.ialv_offset, params.ialv_floor))).sum()
        else:
            _check_exp(x, float(x.max()), kind, params.exp_guard)
            v = np.exp(x).sum()
        out.append(float(v))
    return out


def subband_names(levels: int, include_approximation: bool = True) -> list[str]:
    names = [f"D{j}" for j in range(1, levels + 1)]
    if include_approximation:
        names.append(f"A{levels}")
    return names


def feature_layout(
    n_channels: int,
    levels: int = 2,
    kinds: Sequence[FeatureKind] = ALL_KINDS,
    include_approximation: bool = True,
) -> tuple[str, ...]:
    """Dimension names ``ch{c}_{band}_{kind}`` in vector order."""
    return tuple(
        f"ch{c}_{band}_{kind.value}"
        for c in range(1, n_channels + 1)
        for band in subband_names(levels, include_approximation)
        for kind in kinds
    )


@dataclass(frozen=True, eq=False)
class FeatureVector:
    values: np.ndarray
    layout: tuple[str, ...]

    def __post_init__(self):
        if self.values.shape != (len(self.layout),):
            raise ValueError("feature vector length does not match its layout")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("feature vector contains non-finite values")

    def __len__(self) -> int:
        return len(self.layout)


def _window_array(window) -> np.ndarray:
    data = window.data if isinstance(window, Window) else window
    data = np.asarray(data, dtype=np.float64)
    if data.ndim == 1:
        data = data[np.newaxis, :]
    return data


def _extract_values(
    data: np.ndarray,
    levels: int,
    params: FeatureParams,
    kinds: Sequence[FeatureKind],
    include_approximation: bool,
) -> np.ndarray:
    names = subband_names(levels, include_approximation)
    need = max(_MIN_LEN[k] for k in kinds)
    values = []
    for c, channel in enumerate(data, start=1):
        bands = decompose(channel, levels).subbands(include_approximation)
        for name, band in zip(names, bands):
            if band.size < need:
                raise ValueError(f"ch{c} sub-band {name} has {band.size} coefficients, features need {need}")
            try:
                values.extend(_band_features(band, kinds, params))
            except ValueError as exc:
                raise ValueError(f"ch{c} sub-band {name}: {exc}") from None
    return np.asarray(values)


def extract_vector(
    window,
    levels: int = 2,
    params: FeatureParams = _DEFAULT_PARAMS,
    kinds: Sequence[FeatureKind] = ALL_KINDS,
    include_approximation: bool = True,
) -> FeatureVector:
    """Decompose every channel of ``window`` and compute the selected features per sub-band.

    ``window`` may be a :class:`~wavemyo.signal_io.Window` or a
    ``(n_channels, n_samples)`` array.
    """
    data = _window_array(window)
    values = _extract_values(data, levels, params, tuple(kinds), include_approximation)
    layout = feature_layout(data.shape[0], levels, kinds, include_approximation)
    return FeatureVector(values, layout)


def extract_matrix(
    windows: Sequence,
    levels: int = 2,
    params: FeatureParams = _DEFAULT_PARAMS,
    kinds: Sequence[FeatureKind] = ALL_KINDS,
    include_approximation: bool = True,
) -> np.ndarray:
    """Stack the feature vectors of many windows into an ``(n_windows, dim)`` array."""
    kinds = tuple(kinds)
    rows = [_extract_values(_window_array(w), levels, params, kinds, include_approximation) for w in windows]
    if not rows:
        return np.empty((0, 0))
    out = np.vstack(rows)
    if not np.all(np.isfinite(out)):
        raise ValueError("feature matrix contains non-finite values")
    return out


def write_feature_table(
    path: str | Path,
    layout: Sequence[str],
    matrix: np.ndarray,
    meta: Sequence[dict] | None = None,
) -> Path:
    """Write a feature matrix as CSV, one row per window.

    ``meta`` rows (e.g. subject/trial/label/start) become leading columns.
    """
    matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    if matrix.shape[1] != len(layout):
        raise ValueError(f"matrix has {matrix.shape[1]} columns, layout has {len(layout)}")
    meta_cols = list(meta[0].keys()) if meta else []
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(meta_cols + list(layout))
        for i, row in enumerate(matrix):
            lead = [meta[i][k] for k in meta_cols] if meta else []
            writer.writerow(lead + [repr(float(v)) for v in row])
    return path


def read_feature_table(path: str | Path) -> tuple[tuple[str, ...], np.ndarray, list[dict]]:
    """Inverse of :func:`write_feature_table`; feature columns are those named ``ch*``."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        feat_idx = [i for i, h in enumerate(header) if h.startswith("ch")]
        meta_idx = [i for i, h in enumerate(header) if not h.startswith("ch")]
        rows, meta = [], []
        for row in reader:
            rows.append([float(row[i]) for i in feat_idx])
            meta.append({header[i]: row[i] for i in meta_idx})
    layout = tuple(header[i] for i in feat_idx)
    return layout, np.asarray(rows, dtype=np.float64).reshape(-1, len(layout)), meta
