"""Unthresholded recurrence matrices of delay-embedded series.

``R[i, j] = || s_i - s_j ||`` with ``s_i = (x_i, x_{i+tau}, ..., x_{i+(m-1)tau})``.
The classifier input is built per phase: Ricker CWT of the differential
current, block-averaged to a short series, recurrence matrix, block-pooled
to a small square and flattened to its upper triangle.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from hif_rplot.errors import ConfigError, DataError
from hif_rplot.features import FeatureVector, cwt_coefficients
from hif_rplot.signalgen import PHASES, WaveformRecord


@dataclass(frozen=True)
class EmbeddingParams:
    m: int = 1
    tau: int = 1

    def __post_init__(self):
        if int(self.m) != self.m or int(self.tau) != self.tau or self.m < 1 or self.tau < 1:
            raise ValueError(f"embedding needs integers m >= 1 and tau >= 1, got m={self.m}, tau={self.tau}")

    def n_vectors(self, n: int) -> int:
        return n - (self.m - 1) * self.tau


@dataclass(frozen=True)
class RecurrenceMatrix:
    distances: np.ndarray
    params: EmbeddingParams

    @property
    def size(self) -> int:
        return self.distances.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.distances if dtype is None else self.distances.astype(dtype)


def delay_embed(series, params: EmbeddingParams = EmbeddingParams()) -> np.ndarray:
    """Rows are the embedded state vectors, shape ``(N - (m-1) tau, m)``."""
    x = np.asarray(series, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    count = params.n_vectors(x.shape[0])
    if count < 2:
        raise DataError(f"series of length {x.shape[0]} too short for m={params.m}, tau={params.tau}")
    cols = [x[k * params.tau:k * params.tau + count] for k in range(params.m)]
    # (count, m * channels): for a scalar series this is (count, m)
    return np.concatenate(cols, axis=1)


def _distances(states: np.ndarray) -> np.ndarray:
    if states.shape[1] == 1:
        # exact even where diff**2 would underflow or overflow
        return np.abs(states[:, 0, None] - states[None, :, 0])
    acc = np.zeros((states.shape[0], states.shape[0]))
    for k in range(states.shape[1]):
        diff = states[:, k, None] - states[None, :, k]
        acc += diff * diff
    return np.sqrt(acc)


def recurrence_matrix(series, params: EmbeddingParams = EmbeddingParams()) -> RecurrenceMatrix:
    """Pairwise Euclidean distances between embedded states.

    A 2-D ``series`` of shape ``(N, channels)`` embeds every channel and
    concatenates them into one state vector (joint multi-phase matrix).
    """
    states = delay_embed(series, params)
    return RecurrenceMatrix(_distances(states), params)


def binary_recurrence(matrix, eps: float) -> np.ndarray:
    """Classic thresholded recurrence plot ``R <= eps`` (optional post-step)."""
    return (np.asarray(matrix) <= eps).astype(np.uint8)


def _block_edges(n: int, parts: int) -> np.ndarray:
    return (np.arange(parts + 1) * n) // parts


def block_average(series, length: int) -> np.ndarray:
    """Average a series down to ``length`` near-equal blocks (no-op if already short enough)."""
    x = np.asarray(series, dtype=np.float64)
    if length >= x.size:
        return x.copy()
    e = _block_edges(x.size, length)
    return np.add.reduceat(x, e[:-1]) / np.diff(e)


def pool_matrix(matrix, target: int) -> np.ndarray:
    """Block-average pooling of an ``M x M`` matrix to ``target x target``.

    Block ``b`` covers rows/columns ``floor(b M / R) .. floor((b+1) M / R) - 1``.
    """
    a = np.asarray(matrix, dtype=np.float64)
    m = a.shape[0]
    if a.ndim != 2 or a.shape[1] != m:
        raise DataError("pool_matrix needs a square matrix")
    if not 1 <= target <= m:
        raise DataError(f"cannot pool a {m}x{m} matrix to {target}x{target}")
    e = _block_edges(m, target)
    sizes = np.diff(e)
    summed = np.add.reduceat(np.add.reduceat(a, e[:-1], axis=0), e[:-1], axis=1)
    return summed / np.outer(sizes, sizes)


def upper_triangle(matrix) -> np.ndarray:
    a = np.asarray(matrix)
    return a[np.triu_indices(a.shape[0])]


def heatmap_bytes(matrix) -> bytes:
    """8-bit binary PGM of a matrix, min -> 0 and max -> 255 (constant -> all 0)."""
    a = np.asarray(matrix, dtype=np.float64)
    if a.ndim != 2 or a.size == 0:
        raise DataError("heatmap needs a non-empty 2-D matrix")
    lo, hi = a.min(), a.max()
    if hi > lo:
        pix = np.floor(255.0 * (a - lo) / (hi - lo) + 0.5).astype(np.uint8)
    else:
        pix = np.zeros(a.shape, dtype=np.uint8)
    h, w = a.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + pix.tobytes()


def export_heatmap(matrix, path) -> None:
    data = heatmap_bytes(matrix)
    try:
        Path(path).write_bytes(data)
    except OSError as exc:
        raise DataError(f"cannot write heatmap {path}: {exc}") from exc


def write_matrix_csv(matrix, path) -> None:
    a = np.asarray(matrix, dtype=np.float64)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in a:
            w.writerow([repr(float(v)) for v in row])


@dataclass(frozen=True)
class RecurrenceTransform:
    """CWT -> block average -> recurrence matrix -> pool -> upper triangle.

    ``combine = "concat"`` builds one matrix per phase and concatenates the
    flattened triangles in phase order; ``"joint"`` builds a single matrix
    from 3-phase state vectors.
    """

    scale: float = 10.0
    length: int = 256
    params: EmbeddingParams = EmbeddingParams()
    pool: int = 16
    combine: str = "concat"

    def __post_init__(self):
        if not self.scale > 0:
            raise ConfigError("recurrence scale must be positive")
        if self.length < 2 or self.pool < 1:
            raise ConfigError("recurrence length must be >= 2 and pool >= 1")
        if self.combine not in ("concat", "joint"):
            raise ConfigError(f"unknown recurrence combine mode {self.combine!r}")
        if self.params.n_vectors(self.length) < self.pool:
            raise ConfigError("recurrence series too short for the requested pool size")

    def phase_series(self, record: WaveformRecord) -> np.ndarray:
        """(3, length) block-averaged CWT series."""
        return np.stack([block_average(cwt_coefficients(ph, self.scale), self.length) for ph in record.phases])

    def matrices(self, record: WaveformRecord) -> list[RecurrenceMatrix]:
        series = self.phase_series(record)
        if self.combine == "joint":
            return [recurrence_matrix(series.T, self.params)]
        return [recurrence_matrix(s, self.params) for s in series]

    def feature_names(self) -> tuple:
        tri = self.pool * (self.pool + 1) // 2
        groups = ("abc",) if self.combine == "joint" else PHASES
        return tuple(f"{g}_rp{i:03d}" for g in groups for i in range(tri))

    def transform(self, record: WaveformRecord) -> FeatureVector:
        parts = [upper_triangle(pool_matrix(rm.distances, self.pool)) for rm in self.matrices(record)]
        return FeatureVector(record.event_id, record.event_class, self.feature_names(), np.concatenate(parts))
