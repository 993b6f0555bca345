"""Seeded synthesis of labelled 3-phase differential-current transients.

Four event classes are produced: conventional (Type-1) internal shunt
faults, high-impedance faults driven through an anti-parallel arc model,
external faults whose differential current comes from a saturating CT, and
normal operation.  Waveforms are closed-form per phase (sinusoid, fault
branch current, uniform measurement noise); no network solver is involved.

Every record is a pure function of ``(config, event seed)``.  The event seed
is ``derive_seed(master_seed, event_id)`` and the per-event random streams
are keyed ``(event seed, stream id)``, see :mod:`hif_rplot._rng`.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from typing import Optional

import numpy as np

from hif_rplot import _rng
from hif_rplot.config import (
    as_float,
    as_float_list,
    as_int,
    as_str_list,
    format_value,
)
from hif_rplot.errors import ConfigError, DataError

PHASES = ("a", "b", "c")
TYPE1_SUBTYPES = ("lg", "llg", "ll", "lllg", "lll")
MODES = ("grid-connected", "islanded")
LOADS = ("balanced", "unbalanced", "low-voltage")

NORMAL, EXTERNAL, TYPE1, HIF = "normal", "external", "type1", "hif"
CLASS_KINDS = (TYPE1, HIF, EXTERNAL, NORMAL)

# per-phase voltage magnitude factors for each load condition
LOAD_VOLTAGE = {
    "balanced": (1.0, 1.0, 1.0),
    "unbalanced": (1.0, 0.94, 1.05),
    "low-voltage": (0.9, 0.9, 0.9),
}
PHASE_ANGLE = (0.0, -2.0 * math.pi / 3.0, 2.0 * math.pi / 3.0)

# stream ids inside one event
_NOISE, _THRESHOLDS, _RESISTORS, _PHASE_PICK = 0, 1, 2, 3


@dataclass(frozen=True)
class EventClass:
    kind: str
    subtype: Optional[str] = None
    phase: Optional[str] = None

    def __post_init__(self):
        if self.kind not in CLASS_KINDS:
            raise ValueError(f"unknown event class {self.kind!r}")
        if (self.subtype is not None) != (self.kind == TYPE1):
            raise ValueError("subtype is required for, and only for, type1 events")
        if self.subtype is not None and self.subtype not in TYPE1_SUBTYPES:
            raise ValueError(f"unknown type1 subtype {self.subtype!r}")
        if (self.phase is not None) != (self.kind == HIF):
            raise ValueError("phase is required for, and only for, hif events")
        if self.phase is not None and self.phase not in PHASES:
            raise ValueError(f"unknown phase {self.phase!r}")

    @property
    def is_internal(self) -> bool:
        return self.kind in (TYPE1, HIF)

    @property
    def label(self) -> str:
        """Compact text form: ``normal``, ``external``, ``type1:lg``, ``hif:a``."""
        detail = self.subtype or self.phase
        return f"{self.kind}:{detail}" if detail else self.kind

    @classmethod
    def parse(cls, text: str) -> "EventClass":
        kind, _, detail = text.strip().partition(":")
        if kind == TYPE1:
            return cls(kind, subtype=detail or None)
        if kind == HIF:
            return cls(kind, phase=detail or None)
        if detail:
            raise ValueError(f"class {kind!r} takes no detail, got {text!r}")
        return cls(kind)


@dataclass(frozen=True)
class HifParams:
    v1: float
    v0: float
    r_min: float = 50.0
    r_max: float = 300.0
    resistor_update_interval: float = 2e-4

    def __post_init__(self):
        if not (self.v0 < 0.0 < self.v1):
            raise ValueError("HIF thresholds need v0 < 0 < v1")
        if not (0.0 < self.r_min <= self.r_max):
            raise ValueError("HIF resistances need 0 < r_min <= r_max")
        if self.resistor_update_interval <= 0:
            raise ValueError("resistor_update_interval must be positive")


@dataclass(frozen=True)
class CtParams:
    turns_ratio: float = 400.0
    knee_flux: float = 0.08
    burden_resistance: float = 1.0
    remanence_fraction: float = 0.3

    def __post_init__(self):
        if self.turns_ratio <= 0 or self.knee_flux <= 0 or self.burden_resistance <= 0:
            raise ValueError("CT turns ratio, knee flux and burden must be positive")
        if not (0.0 <= self.remanence_fraction < 1.0):
            raise ValueError("remanence_fraction must lie in [0, 1)")


@dataclass(frozen=True)
class ClassSweep:
    """Parameter sweep of one event class.

    Combinations are enumerated as ``mode -> load -> subtype -> value ->
    inception`` where ``value`` is the fault resistance (type1/external), the
    line-length scale (normal) or unused (hif).  Loads and inception times
    are listed per mode.
    """

    count: int
    subtypes: tuple = (None,)
    values: tuple = (None,)
    modes: tuple = MODES
    loads: dict = field(default_factory=dict)
    inceptions: dict = field(default_factory=dict)

    def combinations(self) -> list[tuple]:
        out = []
        for mode in self.modes:
            for load in self.loads.get(mode, ()):
                for subtype in self.subtypes:
                    for value in self.values:
                        for inc in self.inceptions.get(mode, (None,)):
                            out.append((mode, load, subtype, value, inc))
        return out


def _per_mode(grid, islanded):
    return {"grid-connected": tuple(grid), "islanded": tuple(islanded)}


def _lin(lo, hi, n):
    return tuple(float(v) for v in np.linspace(lo, hi, n))


def _default_type1():
    return ClassSweep(
        count=850,
        subtypes=TYPE1_SUBTYPES,
        values=(0.5, 1.0, 2.0, 5.0, 10.0),
        loads=_per_mode(("balanced", "unbalanced"), LOADS),
        inceptions=_per_mode(_lin(0.05, 0.1, 8), _lin(0.05, 0.1, 6)),
    )


def _default_hif():
    return ClassSweep(
        count=300,
        subtypes=PHASES,
        loads=_per_mode(("balanced", "unbalanced"), LOADS),
        inceptions=_per_mode(_lin(0.04, 0.12, 20), _lin(0.04, 0.12, 20)),
    )


def _default_external():
    return ClassSweep(
        count=1000,
        subtypes=TYPE1_SUBTYPES,
        values=(0.5, 1.0, 2.0, 4.0),
        loads=_per_mode(("balanced", "unbalanced"), LOADS),
        inceptions=_per_mode(_lin(0.05, 0.1, 10), _lin(0.05, 0.1, 10)),
    )


def _default_normal():
    return ClassSweep(
        count=40,
        values=_lin(0.5, 1.5, 40),
        modes=("grid-connected",),
        loads={"grid-connected": ("balanced",)},
    )


@dataclass(frozen=True)
class GeneratorConfig:
    sample_rate: float = 10_000.0
    duration: float = 0.2
    frequency: float = 60.0
    master_seed: int = 2024
    # line-to-line rms of the protected 20 kV feeder
    nominal_voltage: float = 20_000.0
    # per-unit base for noise and charging current, amperes
    base_current: float = 100.0
    noise_amplitude: float = 0.002
    charging_current: float = 0.01
    dc_time_constant: float = 0.03
    islanded_source_factor: float = 0.6
    hif_threshold_min: float = 0.05
    hif_threshold_max: float = 0.25
    hif_r_min: float = 50.0
    hif_r_max: float = 300.0
    hif_resistor_update_interval: float = 2e-4
    ct: CtParams = field(default_factory=CtParams)
    external_burdens: tuple = (0.5, 1.0, 2.0, 4.0)
    type1: ClassSweep = field(default_factory=_default_type1)
    hif: ClassSweep = field(default_factory=_default_hif)
    external: ClassSweep = field(default_factory=_default_external)
    normal: ClassSweep = field(default_factory=_default_normal)

    def __post_init__(self):
        if self.sample_rate <= 0 or self.duration <= 0 or self.frequency <= 0:
            raise ConfigError("sample_rate, duration and frequency must be positive")
        if n_samples(self.sample_rate, self.duration) < 2:
            raise ConfigError("sample_rate x duration must give at least 2 samples")
        if self.noise_amplitude < 0:
            raise ConfigError("noise_amplitude must be >= 0")
        if not (0 < self.hif_threshold_min <= self.hif_threshold_max < 1):
            raise ConfigError("need 0 < hif_threshold_min <= hif_threshold_max < 1")
        if not (0 < self.hif_r_min <= self.hif_r_max):
            raise ConfigError("need 0 < hif_r_min <= hif_r_max")
        for kind in CLASS_KINDS:
            sweep = getattr(self, kind)
            if sweep.count < 0:
                raise ConfigError(f"{kind}.count must be >= 0")
            if sweep.count == 0:
                continue
            if not sweep.modes or any(not sweep.loads.get(m) for m in sweep.modes):
                raise ConfigError(f"{kind}: every mode needs a non-empty load list")
            if kind != NORMAL and any(not sweep.inceptions.get(m) for m in sweep.modes):
                raise ConfigError(f"{kind}: every mode needs a non-empty inception list")
            for m in sweep.modes:
                if m not in MODES:
                    raise ConfigError(f"{kind}.modes: unknown mode {m!r}")
                for ld in sweep.loads[m]:
                    if ld not in LOADS:
                        raise ConfigError(f"{kind}.loads.{m}: unknown load {ld!r}")
                for t0 in sweep.inceptions.get(m, ()):
                    if t0 is not None and not (0 < t0 < self.duration):
                        raise ConfigError(f"{kind}.inceptions.{m}: {t0} outside (0, duration)")
        if self.external.count and not self.external_burdens:
            raise ConfigError("external_burdens must be non-empty")

    @property
    def n_samples(self) -> int:
        return n_samples(self.sample_rate, self.duration)

    @property
    def peak_phase_voltage(self) -> float:
        return self.nominal_voltage * math.sqrt(2.0 / 3.0)

    @property
    def noise_amperes(self) -> float:
        return self.noise_amplitude * self.base_current

    def with_counts(self, type1=None, hif=None, external=None, normal=None) -> "GeneratorConfig":
        changes = {}
        for kind, n in ((TYPE1, type1), (HIF, hif), (EXTERNAL, external), (NORMAL, normal)):
            if n is not None:
                changes[kind] = replace(getattr(self, kind), count=n)
        return replace(self, **changes)

    # -- flat key/value mapping ------------------------------------------

    def to_kv(self) -> dict[str, str]:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, ClassSweep):
                out.update(_sweep_to_kv(f.name, v))
            elif isinstance(v, CtParams):
                for cf in fields(CtParams):
                    out[f"ct.{cf.name}"] = format_value(getattr(v, cf.name))
            else:
                out[f.name] = format_value(v)
        return out

    @classmethod
    def from_kv(cls, kv: dict[str, str], strict: bool = True) -> "GeneratorConfig":
        """Build a config from flat keys; defaults fill anything missing."""
        base = cls()
        scalars = {}
        ct = {}
        sweeps = {k: {} for k in CLASS_KINDS}
        known = set(base.to_kv()) | _optional_sweep_keys()
        for key, value in kv.items():
            if key not in known:
                if strict:
                    raise ConfigError(f"unknown config key {key!r}")
                continue
            head, _, rest = key.partition(".")
            if head == "ct":
                ct[rest] = as_float(key, value)
            elif head in sweeps:
                sweeps[head][rest] = (key, value)
            elif key == "master_seed":
                scalars[key] = as_int(key, value)
            elif key == "external_burdens":
                scalars[key] = tuple(as_float_list(key, value))
            else:
                scalars[key] = as_float(key, value)
        try:
            ct_params = replace(base.ct, **ct)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        changes = dict(scalars, ct=ct_params)
        for kind, items in sweeps.items():
            if items:
                changes[kind] = _sweep_from_kv(kind, getattr(base, kind), items)
        return replace(base, **changes)


def _optional_sweep_keys() -> set[str]:
    keys = set()
    for kind in CLASS_KINDS:
        for mode in MODES:
            keys.add(f"{kind}.loads.{mode}")
            if kind != NORMAL:
                keys.add(f"{kind}.inceptions.{mode}")
    return keys


_VALUE_KEY = {TYPE1: "resistances", EXTERNAL: "resistances", NORMAL: "line_scales", HIF: None}
_SUBTYPE_KEY = {TYPE1: "subtypes", EXTERNAL: "subtypes", HIF: "phases", NORMAL: None}


def _sweep_to_kv(kind: str, sweep: ClassSweep) -> dict[str, str]:
    out = {f"{kind}.count": str(sweep.count), f"{kind}.modes": format_value(list(sweep.modes))}
    if _SUBTYPE_KEY[kind]:
        out[f"{kind}.{_SUBTYPE_KEY[kind]}"] = format_value(list(sweep.subtypes))
    if _VALUE_KEY[kind]:
        out[f"{kind}.{_VALUE_KEY[kind]}"] = format_value(list(sweep.values))
    for mode in sweep.modes:
        out[f"{kind}.loads.{mode}"] = format_value(list(sweep.loads.get(mode, ())))
        if kind != NORMAL:
            out[f"{kind}.inceptions.{mode}"] = format_value(list(sweep.inceptions.get(mode, ())))
    return out


def _sweep_from_kv(kind: str, sweep: ClassSweep, items: dict) -> ClassSweep:
    changes = {}
    loads = dict(sweep.loads)
    inceptions = dict(sweep.inceptions)
    for rest, (key, value) in items.items():
        if rest == "count":
            changes["count"] = as_int(key, value)
        elif rest == "modes":
            changes["modes"] = tuple(as_str_list(key, value))
        elif rest == _SUBTYPE_KEY[kind]:
            changes["subtypes"] = tuple(as_str_list(key, value))
        elif rest == _VALUE_KEY[kind]:
            changes["values"] = tuple(as_float_list(key, value))
        elif rest.startswith("loads."):
            loads[rest[6:]] = tuple(as_str_list(key, value))
        elif rest.startswith("inceptions."):
            inceptions[rest[11:]] = tuple(as_float_list(key, value))
        else:
            raise ConfigError(f"unknown config key {key!r}")
    for st in changes.get("subtypes", ()):
        allowed = PHASES if kind == HIF else TYPE1_SUBTYPES
        if st not in allowed:
            raise ConfigError(f"{kind}: unknown subtype/phase {st!r}")
    return replace(sweep, loads=loads, inceptions=inceptions, **changes)


@dataclass
class WaveformRecord:
    event_id: int
    event_class: EventClass
    phases: np.ndarray  # (3, N) amperes
    sample_rate: float
    duration: float
    mode: str
    load: str
    seed: int
    inception_time: Optional[float] = None
    fault_resistance: Optional[float] = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.phases = np.asarray(self.phases, dtype=np.float64)
        n = n_samples(self.sample_rate, self.duration)
        if self.phases.shape != (3, n) or n < 2:
            raise DataError(f"event {self.event_id}: expected phases of shape (3, {n}), got {self.phases.shape}")
        if self.inception_time is not None and not (0 < self.inception_time < self.duration):
            raise DataError(f"event {self.event_id}: inception time outside the record")

    @property
    def n_samples(self) -> int:
        return self.phases.shape[1]

    def time(self) -> np.ndarray:
        return np.arange(self.n_samples) / self.sample_rate


def n_samples(sample_rate: float, duration: float) -> int:
    return int(round(sample_rate * duration))


# -- HIF arc model ---------------------------------------------------------

def hif_current_step(v_p: float, params: HifParams, r_pos: float, r_neg: float) -> float:
    """Arc current through the anti-parallel diode/DC-source branch.

    Conducts positively above ``v1``, negatively below ``v0``; zero in the
    dead band ``v0 <= v_p <= v1``.
    """
    if not math.isfinite(v_p):
        raise DataError(f"non-finite driving voltage {v_p!r}")
    for r in (r_pos, r_neg):
        if not (params.r_min <= r <= params.r_max):
            raise DataError(f"arc resistance {r} outside [{params.r_min}, {params.r_max}]")
    if v_p > params.v1:
        return (v_p - params.v1) / r_pos
    if v_p < params.v0:
        return (v_p - params.v0) / r_neg
    return 0.0


def hif_current(v_p: np.ndarray, v1: float, v0: float, r_pos: np.ndarray, r_neg: np.ndarray) -> np.ndarray:
    """Vectorised :func:`hif_current_step` (no range checks)."""
    v_p = np.asarray(v_p, dtype=np.float64)
    out = np.zeros_like(v_p)
    pos = v_p > v1
    neg = v_p < v0
    out[pos] = (v_p[pos] - v1) / np.broadcast_to(r_pos, v_p.shape)[pos]
    out[neg] = (v_p[neg] - v0) / np.broadcast_to(r_neg, v_p.shape)[neg]
    return out


# -- CT model --------------------------------------------------------------

def simulate_ct_saturation(primary, ct: CtParams, sample_rate: float) -> np.ndarray:
    """Secondary current of a saturable CT (amperes, secondary side).

    Core flux starts at ``remanence_fraction * knee_flux`` and integrates the
    burden voltage ``R_b * i_s``.  While the flux stays inside the knee the
    secondary reproduces ``i_p / n``; a step that would push the flux past
    the knee delivers only the current that brings it exactly to the knee,
    after which the secondary is zero until the referred current reverses
    and drives the flux back into the linear band.
    """
    if not sample_rate or sample_rate <= 0:
        raise DataError("sample_rate must be positive")
    ip = np.asarray(primary, dtype=np.float64)
    if ip.size == 0:
        raise DataError("empty primary current")
    ref = (ip / ct.turns_ratio).tolist()
    k = ct.burden_resistance / sample_rate
    knee = ct.knee_flux
    lam = ct.remanence_fraction * knee
    out = [0.0] * len(ref)
    for i, r in enumerate(ref):
        nxt = lam + r * k
        if -knee < nxt < knee:
            out[i] = r
            lam = nxt
        else:
            edge = knee if nxt > 0 else -knee
            out[i] = (edge - lam) / k
            lam = edge
    return np.asarray(out)


# -- event synthesis -------------------------------------------------------

def _noise(config: GeneratorConfig, seed: int) -> np.ndarray:
    a = config.noise_amperes
    n = config.n_samples
    if a == 0:
        return np.zeros((3, n))
    return _rng.stream(seed, _NOISE).uniform(-a, a, size=(3, n))


def _check_inception(config: GeneratorConfig, inception_time: float):
    if inception_time is None or not (0 < inception_time < config.duration):
        raise DataError(f"inception time {inception_time!r} outside (0, {config.duration})")


def _check_mode_load(mode: str, load: str):
    if mode not in MODES:
        raise DataError(f"unknown mode {mode!r}")
    if load not in LOADS:
        raise DataError(f"unknown load {load!r}")


def phase_voltages(config: GeneratorConfig, load: str) -> np.ndarray:
    """Driving phase voltages (3, N) in volts."""
    t = np.arange(config.n_samples) / config.sample_rate
    w = 2.0 * math.pi * config.frequency
    vf = LOAD_VOLTAGE[load]
    return np.stack([
        config.peak_phase_voltage * vf[k] * np.sin(w * t + PHASE_ANGLE[k]) for k in range(3)
    ])


def hif_components(config: GeneratorConfig, phase: str, load: str, inception_time: float, seed: int):
    """Noise-free pieces of an HIF event.

    Returns ``(v_drive, arc_current, params)`` for the faulted phase where
    ``arc_current`` is zero before inception.
    """
    _check_inception(config, inception_time)
    k = PHASES.index(phase)
    v_pk = config.peak_phase_voltage
    th = _rng.stream(seed, _THRESHOLDS).uniform(config.hif_threshold_min, config.hif_threshold_max, size=2) * v_pk
    params = HifParams(
        v1=float(th[0]),
        v0=-float(th[1]),
        r_min=config.hif_r_min,
        r_max=config.hif_r_max,
        resistor_update_interval=config.hif_resistor_update_interval,
    )
    n = config.n_samples
    t = np.arange(n) / config.sample_rate
    interval = np.floor(t / params.resistor_update_interval).astype(np.int64)
    n_int = int(interval[-1]) + 1
    r = _rng.stream(seed, _RESISTORS).uniform(params.r_min, params.r_max, size=(2, n_int))
    v = phase_voltages(config, load)[k]
    arc = hif_current(v, params.v1, params.v0, r[0][interval], r[1][interval])
    arc[t < inception_time] = 0.0
    return v, arc, params


def synth_hif_event(config: GeneratorConfig, phase: str, mode: str, load: str,
                    inception_time: float, seed: int, event_id: int = 0) -> WaveformRecord:
    _check_mode_load(mode, load)
    if phase not in PHASES:
        raise DataError(f"unknown phase {phase!r}")
    _, arc, params = hif_components(config, phase, load, inception_time, seed)
    data = _noise(config, seed)
    data[PHASES.index(phase)] += arc
    return WaveformRecord(
        event_id=event_id,
        event_class=EventClass(HIF, phase=phase),
        phases=data,
        sample_rate=config.sample_rate,
        duration=config.duration,
        mode=mode,
        load=load,
        seed=seed,
        inception_time=inception_time,
        extra={"v1": params.v1, "v0": params.v0},
    )


def _faulted_phases(subtype: str, seed: int) -> tuple[int, ...]:
    rng = _rng.stream(seed, _PHASE_PICK)
    if subtype == "lg":
        return (int(rng.integers(3)),)
    if subtype in ("llg", "ll"):
        skip = int(rng.integers(3))
        return tuple(k for k in range(3) if k != skip)
    return (0, 1, 2)


def shunt_fault_currents(config: GeneratorConfig, subtype: str, resistance: float, mode: str,
                         load: str, inception_time: float, seed: int) -> np.ndarray:
    """Noise-free fault-branch currents (3, N) of a shunt fault.

    Each faulted phase carries ``A [sin(wt + phi - theta) - sin(w t0 + phi -
    theta) exp(-(t - t0)/tau)]`` after inception, with steady amplitude
    ``A = V_phase * source_factor / R`` and ``theta = atan(w tau)``.
    Line-to-line faults are driven by the line voltage split across ``2R``;
    ungrounded three-phase faults have their zero-sequence part removed.
    """
    if subtype not in TYPE1_SUBTYPES:
        raise DataError(f"unknown fault subtype {subtype!r}")
    if not resistance or resistance <= 0:
        raise DataError("fault resistance must be positive")
    _check_inception(config, inception_time)
    _check_mode_load(mode, load)
    n = config.n_samples
    t = np.arange(n) / config.sample_rate
    w = 2.0 * math.pi * config.frequency
    tau = config.dc_time_constant
    theta = math.atan(w * tau)
    source = config.islanded_source_factor if mode == "islanded" else 1.0
    vf = LOAD_VOLTAGE[load]
    post = t >= inception_time
    decay = np.exp(-(t[post] - inception_time) / tau)

    def branch(amp, phi):
        i = np.zeros(n)
        i[post] = amp * (np.sin(w * t[post] + phi - theta) - math.sin(w * inception_time + phi - theta) * decay)
        return i

    v_pk = config.peak_phase_voltage
    out = np.zeros((3, n))
    faulted = _faulted_phases(subtype, seed)
    if subtype == "ll":
        p, q = faulted
        # v_p - v_q as a single phasor
        re = vf[p] * math.cos(PHASE_ANGLE[p]) - vf[q] * math.cos(PHASE_ANGLE[q])
        im = vf[p] * math.sin(PHASE_ANGLE[p]) - vf[q] * math.sin(PHASE_ANGLE[q])
        amp = v_pk * math.hypot(re, im) * source / (2.0 * resistance)
        i = branch(amp, math.atan2(im, re))
        out[p], out[q] = i, -i
        return out
    for k in faulted:
        out[k] = branch(v_pk * vf[k] * source / resistance, PHASE_ANGLE[k])
    if subtype == "lll":
        out -= out.mean(axis=0)
    return out


def synth_type1_event(config: GeneratorConfig, subtype: str, resistance: float, mode: str, load: str,
                      inception_time: float, seed: int, event_id: int = 0) -> WaveformRecord:
    fault = shunt_fault_currents(config, subtype, resistance, mode, load, inception_time, seed)
    return WaveformRecord(
        event_id=event_id,
        event_class=EventClass(TYPE1, subtype=subtype),
        phases=fault + _noise(config, seed),
        sample_rate=config.sample_rate,
        duration=config.duration,
        mode=mode,
        load=load,
        seed=seed,
        inception_time=inception_time,
        fault_resistance=resistance,
    )


def synth_external_event(config: GeneratorConfig, subtype: str, resistance: float, mode: str, load: str,
                         inception_time: float, seed: int, burden: Optional[float] = None,
                         event_id: int = 0) -> WaveformRecord:
    """External fault: through-current seen by both CTs, one of which saturates.

    The differential is ``i_p - n * i_s``, i.e. the CT error referred to the
    primary side.
    """
    ct = config.ct if burden is None else replace(config.ct, burden_resistance=burden)
    primary = shunt_fault_currents(config, subtype, resistance, mode, load, inception_time, seed)
    diff = np.zeros_like(primary)
    for k in range(3):
        if np.any(primary[k]):
            diff[k] = primary[k] - ct.turns_ratio * simulate_ct_saturation(primary[k], ct, config.sample_rate)
    return WaveformRecord(
        event_id=event_id,
        event_class=EventClass(EXTERNAL),
        phases=diff + _noise(config, seed),
        sample_rate=config.sample_rate,
        duration=config.duration,
        mode=mode,
        load=load,
        seed=seed,
        inception_time=inception_time,
        fault_resistance=resistance,
        extra={"fault_type": subtype, "burden": ct.burden_resistance},
    )


def synth_normal_event(config: GeneratorConfig, line_scale: float, mode: str, load: str, seed: int,
                       event_id: int = 0) -> WaveformRecord:
    """Normal operation: line charging current (scaled by line length) plus noise."""
    _check_mode_load(mode, load)
    t = np.arange(config.n_samples) / config.sample_rate
    w = 2.0 * math.pi * config.frequency
    amp = config.charging_current * config.base_current * line_scale
    vf = LOAD_VOLTAGE[load]
    charging = np.stack([amp * vf[k] * np.cos(w * t + PHASE_ANGLE[k]) for k in range(3)])
    return WaveformRecord(
        event_id=event_id,
        event_class=EventClass(NORMAL),
        phases=charging + _noise(config, seed),
        sample_rate=config.sample_rate,
        duration=config.duration,
        mode=mode,
        load=load,
        seed=seed,
        extra={"line_scale": line_scale},
    )


# -- dataset ---------------------------------------------------------------

@dataclass(frozen=True)
class EventPlan:
    event_id: int
    kind: str
    mode: str
    load: str
    subtype: Optional[str]
    value: Optional[float]
    inception_time: Optional[float]
    burden: Optional[float]
    seed: int


def plan_dataset(config: GeneratorConfig) -> list[EventPlan]:
    """Deterministic event list: classes in order type1, hif, external, normal.

    Within a class, ``count`` combinations are taken at evenly spaced
    positions ``floor(i * C / count)`` of the ``C`` enumerated sweep
    combinations, so a reduced count still covers the whole sweep.
    """
    plans = []
    event_id = 0
    for kind in CLASS_KINDS:
        sweep = getattr(config, kind)
        if sweep.count == 0:
            continue
        combos = sweep.combinations()
        if len(combos) < sweep.count:
            raise ConfigError(
                f"{kind}: sweep yields {len(combos)} distinct events, {sweep.count} requested"
            )
        for i in range(sweep.count):
            mode, load, subtype, value, inc = combos[(i * len(combos)) // sweep.count]
            burden = None
            if kind == EXTERNAL:
                burden = config.external_burdens[i % len(config.external_burdens)]
            plans.append(EventPlan(
                event_id=event_id, kind=kind, mode=mode, load=load, subtype=subtype,
                value=value, inception_time=inc, burden=burden,
                seed=_rng.derive_seed(config.master_seed, event_id),
            ))
            event_id += 1
    return plans


def synth_event(config: GeneratorConfig, plan: EventPlan) -> WaveformRecord:
    if plan.kind == TYPE1:
        return synth_type1_event(config, plan.subtype, plan.value, plan.mode, plan.load,
                                 plan.inception_time, plan.seed, event_id=plan.event_id)
    if plan.kind == HIF:
        return synth_hif_event(config, plan.subtype, plan.mode, plan.load, plan.inception_time,
                               plan.seed, event_id=plan.event_id)
    if plan.kind == EXTERNAL:
        return synth_external_event(config, plan.subtype, plan.value, plan.mode, plan.load,
                                    plan.inception_time, plan.seed, burden=plan.burden,
                                    event_id=plan.event_id)
    return synth_normal_event(config, plan.value, plan.mode, plan.load, plan.seed, event_id=plan.event_id)


def generate_dataset(config: GeneratorConfig, workers: int = 1) -> list[WaveformRecord]:
    plans = plan_dataset(config)
    if workers <= 1:
        return [synth_event(config, p) for p in plans]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda p: synth_event(config, p), plans))
