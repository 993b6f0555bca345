"""Per-phase feature extraction from differential-current records.

A catalog is a list of :class:`FeatureSpec`; each spec names a family, an
``op`` inside that family and its numeric parameters.  Applying a catalog to
a record evaluates every spec on phases a, b, c and names the outputs
``<phase>_<spec name>``, ordered catalog-major then phase.

Catalog files hold one spec per line::

    cwt10_h3  time-frequency  op=cwt_coefficient scale=10 shift=3
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from hif_rplot.errors import ConfigError, DataError
from hif_rplot.signalgen import PHASES, EventClass, WaveformRecord

FAMILIES = ("statistical", "frequency", "time-frequency", "entropy", "temporal")

# exp(-x) underflows to 0.0 in float64 for x > ~745, i.e. |t - h| > ~38.6 g
_RICKER_SUPPORT = 40.0


def ricker(t, g: float, h: float = 0.0):
    """Ricker (Mexican hat) wavelet with scale ``g`` and shift ``h``.

    ``2 / (sqrt(3 g) pi^(1/4)) * (1 - (t-h)^2/g^2) * exp(-(t-h)^2 / (2 g^2))``
    """
    if not g > 0:
        raise ValueError(f"ricker scale must be positive, got {g!r}")
    u = (np.asarray(t, dtype=np.float64) - h) / g
    out = (2.0 / (math.sqrt(3.0 * g) * math.pi ** 0.25)) * (1.0 - u * u) * np.exp(-0.5 * u * u)
    return out if out.ndim else float(out)


@lru_cache(maxsize=64)
def _ricker_kernel(g: float, n: int) -> np.ndarray:
    half = min(n - 1, int(math.ceil(_RICKER_SUPPORT * g)))
    return ricker(np.arange(-half, half + 1, dtype=np.float64), g)


def cwt_coefficients(series, g: float) -> np.ndarray:
    """Discrete CWT at one scale: ``Y[h] = sum_t y[t] * ricker(t, g, h)``.

    ``t`` and ``h`` run over sample indices ``0..N-1``; edges use the
    truncated sum (no padding).  The wavelet is real so no conjugation is
    needed.  Terms beyond ``40 g`` samples are dropped: the Gaussian factor
    has underflowed to zero there.
    """
    y = np.asarray(series, dtype=np.float64)
    if y.ndim != 1 or y.size == 0:
        raise DataError("cwt needs a non-empty 1-D series")
    if not g > 0:
        raise ValueError(f"cwt scale must be positive, got {g!r}")
    n = y.size
    kern = _ricker_kernel(float(g), n)
    half = (kern.size - 1) // 2
    # kernel is even, so correlation == convolution
    full = np.convolve(y, kern)
    return full[half:half + n]


_CHUNK = 512


def _chebyshev_close(rows, emb, r, m):
    """Boolean (len(rows), len(emb)) table of max_k |rows[i,k] - emb[j,k]| <= r over k < m."""
    close = np.ones((rows.shape[0], emb.shape[0]), dtype=bool)
    for k in range(m):
        close &= np.abs(rows[:, k, None] - emb[None, :, k]) <= r
    return close


def sample_entropy(series, m: int, r: float) -> float:
    """Sample entropy ``-ln(A/B)``.

    B counts template pairs of length ``m`` and A pairs of length ``m+1``
    within Chebyshev distance ``r`` (self-matches excluded), both over the
    same ``N - m`` starting points.  When A or B is zero the value is
    undefined; ``ln(N_pairs)`` (the largest finite value attainable) is
    returned instead.
    """
    x = np.asarray(series, dtype=np.float64)
    n = x.size
    if n <= m + 1:
        raise DataError(f"series of length {n} too short for m={m}")
    if not r > 0:
        raise ValueError("tolerance r must be positive")
    emb = sliding_window_view(x, m + 1)
    k = emb.shape[0]
    a = b = 0
    for start in range(0, k, _CHUNK):
        rows = emb[start:start + _CHUNK]
        close_m = _chebyshev_close(rows, emb, r, m)
        close_m1 = close_m & (np.abs(rows[:, m, None] - emb[None, :, m]) <= r)
        # strict upper triangle only: pairs i < j
        upper = np.arange(k)[None, :] > np.arange(start, start + rows.shape[0])[:, None]
        b += int(np.count_nonzero(close_m & upper))
        a += int(np.count_nonzero(close_m1 & upper))
    if a == 0 or b == 0:
        return math.log(k * (k - 1) / 2)
    return -math.log(a / b)


def approximate_entropy(series, m: int, r: float) -> float:
    """Pincus approximate entropy ``phi_m - phi_{m+1}`` (self-matches counted)."""
    x = np.asarray(series, dtype=np.float64)
    if x.size <= m + 1:
        raise DataError(f"series of length {x.size} too short for m={m}")

    def phi(mm):
        emb = sliding_window_view(x, mm)
        k = emb.shape[0]
        counts = np.concatenate([
            np.count_nonzero(_chebyshev_close(emb[s:s + _CHUNK], emb, r, mm), axis=1)
            for s in range(0, k, _CHUNK)
        ])
        return float(np.mean(np.log(counts / k)))

    return phi(m) - phi(m + 1)


# -- feature functions -----------------------------------------------------

def _centered_moment_ratio(x, k):
    mu = x.mean()
    var = np.mean((x - mu) ** 2)
    if var == 0:
        return 0.0
    return float(np.mean((x - mu) ** k) / var ** (k / 2))


def _skewness(x):
    return _centered_moment_ratio(x, 3)


def _kurtosis(x):
    v = _centered_moment_ratio(x, 4)
    return v - 3.0 if v else 0.0


def _fft_magnitude(x, bin):
    k = int(bin)
    if k >= x.size:
        return 0.0
    return float(np.abs(np.fft.rfft(x)[k])) if k <= x.size // 2 else float(np.abs(np.fft.fft(x)[k]))


def _spectral_centroid(x, sample_rate):
    mag = np.abs(np.fft.rfft(x))
    total = mag.sum()
    if total == 0:
        return 0.0
    freqs = np.fft.rfftfreq(x.size, d=1.0 / sample_rate)
    return float((freqs * mag).sum() / total)


def _autocorrelation(x, lag):
    lag = int(lag)
    n = x.size
    if lag >= n:
        return 0.0
    xc = x - x.mean()
    var = np.mean(xc * xc)
    if var == 0:
        return 0.0
    return float(np.dot(xc[:n - lag], xc[lag:]) / ((n - lag) * var))


def _number_peaks(x, support):
    s = int(support)
    n = x.size
    if n < 2 * s + 1:
        return 0.0
    core = x[s:n - s]
    ok = np.ones(core.size, dtype=bool)
    for j in range(1, s + 1):
        ok &= core > x[s - j:n - s - j]
        ok &= core > x[s + j:n - s + j]
    return float(np.count_nonzero(ok))


def _zero_crossings(x):
    s = np.sign(x)
    s = s[s != 0]
    return float(np.count_nonzero(s[1:] != s[:-1]))


def _entropy_feature(fn, x, m, r, stride):
    x = x[:: int(stride)]
    sd = x.std()
    if sd == 0:
        return 0.0
    return fn(x, int(m), r * sd)


@dataclass(frozen=True)
class _Op:
    fn: Callable
    params: tuple = ()
    defaults: dict = field(default_factory=dict)
    cwt: bool = False


_STAT = {
    "mean": _Op(lambda x: float(x.mean())),
    "variance": _Op(lambda x: float(x.var())),
    "std": _Op(lambda x: float(x.std())),
    "skewness": _Op(_skewness),
    "kurtosis": _Op(_kurtosis),
    "minimum": _Op(lambda x: float(x.min())),
    "maximum": _Op(lambda x: float(x.max())),
    "median": _Op(lambda x: float(np.median(x))),
    "rms": _Op(lambda x: float(np.sqrt(np.mean(x * x)))),
    "abs_energy": _Op(lambda x: float(np.dot(x, x))),
    "peak_to_peak": _Op(lambda x: float(x.max() - x.min())),
    "mean_abs_change": _Op(lambda x: float(np.mean(np.abs(np.diff(x)))) if x.size > 1 else 0.0),
}

OPS: dict[str, dict[str, _Op]] = {
    "statistical": _STAT,
    "frequency": {
        "fft_magnitude": _Op(_fft_magnitude, ("bin",)),
        "spectral_centroid": _Op(_spectral_centroid, ("sample_rate",)),
    },
    "time-frequency": {
        "cwt_coefficient": _Op(lambda y, shift: float(y[int(shift)]) if int(shift) < y.size else 0.0,
                               ("scale", "shift"), cwt=True),
        "cwt_max_abs": _Op(lambda y: float(np.abs(y).max()), ("scale",), cwt=True),
        "cwt_energy": _Op(lambda y: float(np.dot(y, y)), ("scale",), cwt=True),
        "cwt_std": _Op(lambda y: float(y.std()), ("scale",), cwt=True),
    },
    "entropy": {
        "sample_entropy": _Op(lambda x, m, r, stride: _entropy_feature(sample_entropy, x, m, r, stride),
                              ("m", "r", "stride"), {"m": 2, "r": 0.2, "stride": 1}),
        "approximate_entropy": _Op(lambda x, m, r, stride: _entropy_feature(approximate_entropy, x, m, r, stride),
                                   ("m", "r", "stride"), {"m": 2, "r": 0.2, "stride": 1}),
    },
    "temporal": {
        "autocorrelation": _Op(_autocorrelation, ("lag",)),
        "number_peaks": _Op(_number_peaks, ("support",)),
        "zero_crossings": _Op(_zero_crossings),
    },
}

# filled in from the record, not from the catalog
_RECORD_PARAMS = {"sample_rate"}


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    family: str
    op: str
    params: tuple = ()  # sorted (key, value) pairs

    def __post_init__(self):
        if not self.name or any(c.isspace() for c in self.name):
            raise ConfigError(f"bad feature name {self.name!r}")
        if self.family not in OPS:
            raise ConfigError(f"{self.name}: unknown family {self.family!r}")
        op = OPS[self.family].get(self.op)
        if op is None:
            raise ConfigError(f"{self.name}: family {self.family!r} has no op {self.op!r}")
        given = dict(self.params)
        needed = [p for p in op.params if p not in _RECORD_PARAMS]
        unknown = set(given) - set(needed)
        if unknown:
            raise ConfigError(f"{self.name}: unknown parameters {sorted(unknown)}")
        missing = [p for p in needed if p not in given and p not in op.defaults]
        if missing:
            raise ConfigError(f"{self.name}: missing parameters {missing}")
        if op.cwt and not given["scale"] > 0:
            raise ConfigError(f"{self.name}: scale must be positive")
        object.__setattr__(self, "params", tuple(sorted(given.items())))

    @classmethod
    def make(cls, name, family, op, **params):
        return cls(name, family, op, tuple(params.items()))

    def resolved_params(self) -> dict:
        op = OPS[self.family][self.op]
        out = dict(op.defaults)
        out.update(self.params)
        return out

    def to_line(self) -> str:
        parts = [self.name, self.family, f"op={self.op}"]
        parts += [f"{k}={_fmt_num(v)}" for k, v in self.params]
        return " ".join(parts)


def _fmt_num(v):
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def _parse_num(key, text):
    try:
        f = float(text)
    except ValueError:
        raise ConfigError(f"parameter {key}: not a number: {text!r}") from None
    return int(f) if f.is_integer() and "." not in text and "e" not in text.lower() else f


@dataclass(frozen=True)
class FeatureVector:
    event_id: int
    event_class: EventClass
    names: tuple
    values: np.ndarray

    def __len__(self):
        return len(self.names)

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.names, self.values.tolist()))


def parse_catalog(text: str) -> list[FeatureSpec]:
    specs = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) < 3:
            raise ConfigError(f"catalog line {lineno}: expected 'name family op=... key=value ...'")
        name, family, *kvs = tokens
        params = {}
        op = None
        for kv in kvs:
            key, sep, value = kv.partition("=")
            if not sep:
                raise ConfigError(f"catalog line {lineno}: bad parameter {kv!r}")
            if key == "op":
                op = value
            else:
                params[key] = _parse_num(key, value)
        if op is None:
            raise ConfigError(f"catalog line {lineno}: missing op=")
        specs.append(FeatureSpec(name, family, op, tuple(params.items())))
    check_catalog(specs)
    return specs


def read_catalog(path) -> list[FeatureSpec]:
    try:
        return parse_catalog(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read catalog {path}: {exc}") from exc


def format_catalog(specs) -> str:
    return "".join(s.to_line() + "\n" for s in specs)


def check_catalog(specs):
    if not specs:
        raise ConfigError("empty feature catalog")
    names = [s.name for s in specs]
    if len(set(names)) != len(names):
        dup = sorted({n for n in names if names.count(n) > 1})
        raise ConfigError(f"duplicate feature names in catalog: {dup}")


def default_catalog() -> list[FeatureSpec]:
    """58 specs over the five families."""
    S = FeatureSpec.make
    specs = [S(op, "statistical", op) for op in _STAT]
    specs += [S(f"fft_{k}", "frequency", "fft_magnitude", bin=k) for k in range(16)]
    specs += [S("spectral_centroid", "frequency", "spectral_centroid")]
    specs += [S("cwt10_h3", "time-frequency", "cwt_coefficient", scale=10, shift=3)]
    for g in (2, 5, 10, 20):
        specs += [
            S(f"cwt{g}_max_abs", "time-frequency", "cwt_max_abs", scale=g),
            S(f"cwt{g}_energy", "time-frequency", "cwt_energy", scale=g),
            S(f"cwt{g}_std", "time-frequency", "cwt_std", scale=g),
        ]
    specs += [
        S("sample_entropy", "entropy", "sample_entropy", m=2, r=0.2, stride=4),
        S("approximate_entropy", "entropy", "approximate_entropy", m=2, r=0.2, stride=4),
    ]
    specs += [S(f"autocorr_{lag}", "temporal", "autocorrelation", lag=lag) for lag in (1, 2, 5, 10, 20, 50, 83, 167)]
    specs += [S(f"peaks_{n}", "temporal", "number_peaks", support=n) for n in (1, 3, 5, 10)]
    specs += [S("zero_crossings", "temporal", "zero_crossings")]
    return specs


def _evaluate(spec: FeatureSpec, x: np.ndarray, sample_rate: float, cwt_cache: dict) -> float:
    op = OPS[spec.family][spec.op]
    params = spec.resolved_params()
    if op.cwt:
        g = float(params.pop("scale"))
        y = cwt_cache.get(g)
        if y is None:
            y = cwt_cache[g] = cwt_coefficients(x, g)
        return op.fn(y, **params)
    if "sample_rate" in op.params:
        params["sample_rate"] = sample_rate
    return op.fn(x, **params)


def extract_features(record: WaveformRecord, catalog) -> FeatureVector:
    check_catalog(catalog)
    if not np.all(np.isfinite(record.phases)):
        raise DataError(f"event {record.event_id}: non-finite samples")
    caches = [{} for _ in PHASES]
    names = []
    values = []
    for spec in catalog:
        for k, ph in enumerate(PHASES):
            names.append(f"{ph}_{spec.name}")
            values.append(_evaluate(spec, record.phases[k], record.sample_rate, caches[k]))
    vals = np.asarray(values, dtype=np.float64)
    bad = ~np.isfinite(vals)
    if bad.any():
        raise DataError(f"event {record.event_id}: non-finite feature {names[int(np.argmax(bad))]}")
    return FeatureVector(record.event_id, record.event_class, tuple(names), vals)


def feature_matrix(vectors) -> tuple[np.ndarray, tuple]:
    """Stack feature vectors that share one name ordering."""
    vectors = list(vectors)
    if not vectors:
        raise DataError("no feature vectors")
    names = vectors[0].names
    for v in vectors:
        if v.names != names:
            raise DataError(f"event {v.event_id}: feature ordering differs from event {vectors[0].event_id}")
    return np.vstack([v.values for v in vectors]), names
