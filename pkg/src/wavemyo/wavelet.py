"""Orthonormal Haar (db1) wavelet transform."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["WaveletDecomposition", "decompose", "haar_step", "reconstruct"]

_SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class WaveletDecomposition:
    """Multi-level decomposition of one signal.

    ``details[0]`` is the finest (level 1) detail band; ``approximation`` is the
    coarse band left after the last level.
    """

    details: tuple[np.ndarray, ...]
    approximation: np.ndarray
    original_len: int

    @property
    def levels(self) -> int:
        return len(self.details)

    def subbands(self, include_approximation: bool = True) -> list[np.ndarray]:
        bands = list(self.details)
        if include_approximation:
            bands.append(self.approximation)
        return bands

    def validate(self) -> None:
        expected = self.original_len
        for j, d in enumerate(self.details, start=1):
            if expected % 2:
                raise ValueError(f"level {j}: parent length {expected} is odd")
            expected //= 2
            if len(d) != expected:
                raise ValueError(f"level {j}: detail length {len(d)}, expected {expected}")
        if len(self.approximation) != expected:
            raise ValueError(f"approximation length {len(self.approximation)}, expected {expected}")
        if not self.details:
            raise ValueError("decomposition has no levels")


def haar_step(signal) -> tuple[np.ndarray, np.ndarray]:
    """One analysis step: pairwise scaled sums and differences."""
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("haar_step needs a non-empty 1-D signal")
    if x.size % 2:
        raise ValueError(f"haar_step needs an even length, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise ValueError("signal contains non-finite samples")
    even, odd = x[0::2], x[1::2]
    return (even + odd) / _SQRT2, (even - odd) / _SQRT2


def decompose(signal, levels: int) -> WaveletDecomposition:
    x = np.asarray(signal, dtype=np.float64)
    if levels < 1:
        raise ValueError(f"levels must be positive, got {levels}")
    if x.ndim != 1 or x.size == 0:
        raise ValueError("decompose needs a non-empty 1-D signal")
    if x.size % (1 << levels):
        raise ValueError(f"signal length {x.size} is not divisible by 2**{levels} = {1 << levels}")
    details = []
    approx = x
    for _ in range(levels):
        approx, detail = haar_step(approx)
        details.append(detail)
    return WaveletDecomposition(tuple(details), approx, x.size)


def reconstruct(decomp: WaveletDecomposition) -> np.ndarray:
    decomp.validate()
    approx = np.asarray(decomp.approximation, dtype=np.float64)
    for detail in reversed(decomp.details):
        out = np.empty(2 * approx.size)
        out[0::2] = (approx + detail) / _SQRT2
        out[1::2] = (approx - detail) / _SQRT2
        approx = out
    return approx
