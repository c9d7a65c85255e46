"""Two-state random telegraph noise (RTN) model of a resistive-memory read.

A trap is an alternating renewal process: exponential dwells in the HIGH
(carrier captured, extra current delta_i) and LOW (trap empty) levels, with
mean dwell times that depend on read voltage and temperature. Traces are
built by exact event-driven simulation of the transition times followed by
grid sampling, so there is no time-step bias in the transition statistics.

Closed-form spectral quantities (corner frequency, Lorentzian PSD) are
provided for verifying simulated traces against theory.
"""

from __future__ import annotations

import math
import struct
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataFormatError

K_B_EV = 8.617333262e-5  # Boltzmann constant in eV/K

LOW, HIGH = 0, 1

_TRACE_MAGIC = b"RTNT"
_TRACE_VERSION = 1
# magic(4) + version u16 + reserved u16 + dt f64 + count u64
_TRACE_HEADER = struct.Struct("<4sHHdQ")


@dataclass(frozen=True)
class OperatingPoint:
    """Read bias and temperature at which a device is probed."""

    v_read: float  # volts, must lie in the read window (no switching)
    temperature: float  # kelvin

    def __post_init__(self):
        if not (self.v_read > 0 and math.isfinite(self.v_read)):
            raise ValueError(f"v_read must be positive, got {self.v_read}")
        if not (self.temperature > 0 and math.isfinite(self.temperature)):
            raise ValueError(f"temperature must be positive, got {self.temperature}")


@dataclass(frozen=True)
class TrapParams:
    """One bistable defect.

    tau_capture_ref is the mean dwell in the HIGH (captured) level and
    tau_emission_ref the mean dwell in the LOW (empty) level, both at
    ref_point. v_sensitivity is the exponential voltage scale of the
    HIGH dwell; activation_energy is the shared Arrhenius barrier (eV).
    """

    tau_capture_ref: float  # seconds
    tau_emission_ref: float  # seconds
    delta_i: float  # amperes
    v_sensitivity: float  # volts
    activation_energy: float  # eV
    ref_point: OperatingPoint

    def __post_init__(self):
        for name in ("tau_capture_ref", "tau_emission_ref", "delta_i", "v_sensitivity"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive, got {v}")
        if self.activation_energy < 0:
            raise ValueError("activation_energy must be >= 0")


@dataclass(frozen=True)
class DeviceParams:
    """HRS read-regime device: baseline conductance plus zero or more traps.

    Multi-trap currents superpose additively. t_ref anchors the linear
    temperature coefficient of the baseline; v_read_max bounds the read
    window (larger biases would imply switching, which is out of scope).
    """

    traps: tuple[TrapParams, ...] = ()
    g0: float = 10e-9  # siemens
    v_c: float = 60e-3  # volts, sinh nonlinearity scale
    temp_coeff: float = 2e-3  # 1/kelvin
    t_ref: float = 300.0  # kelvin
    v_read_max: float = 150e-3  # volts

    def __post_init__(self):
        if not self.g0 > 0:
            raise ValueError("g0 must be positive")
        if not self.v_c > 0:
            raise ValueError("v_c must be positive")
        if not self.v_read_max > 0:
            raise ValueError("v_read_max must be positive")


@dataclass(frozen=True)
class TrapTrajectory:
    """Exact event record of one trap: level flips at each transition time."""

    transition_times: np.ndarray  # strictly increasing, seconds
    initial_level: int  # LOW or HIGH
    duration: float

    def __post_init__(self):
        t = np.asarray(self.transition_times, dtype=float)
        if t.size and not np.all(np.diff(t) > 0):
            raise ValueError("transition_times must be strictly increasing")
        object.__setattr__(self, "transition_times", t)

    def level_at(self, t):
        """Level (LOW/HIGH) at time t; t may be an array."""
        flips = np.searchsorted(self.transition_times, np.asarray(t), side="right")
        return (self.initial_level ^ (flips & 1)).astype(np.uint8)

    def levels_on_grid(self, dt, n):
        """Levels sampled at t = k*dt for k in 0..n-1."""
        return self.level_at(np.arange(n) * dt)

    def dwell_durations(self):
        """(high_dwells, low_dwells) excluding the censored first and last dwells."""
        edges = self.transition_times
        if edges.size < 2:
            return np.array([]), np.array([])
        durations = np.diff(edges)
        # level during dwell k (between transition k and k+1)
        levels = (self.initial_level ^ ((np.arange(durations.size) + 1) & 1)).astype(bool)
        return durations[levels], durations[~levels]


@dataclass
class Trace:
    """Uniformly sampled current time series."""

    dt: float  # seconds
    samples: np.ndarray  # amperes
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.samples.size < 1:
            raise ValueError("trace must hold at least one sample")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("trace samples must be finite")

    @property
    def duration(self):
        return self.samples.size * self.dt


def default_trap(ref_point=None):
    """Default trap parameters (placeholders, overridable via config)."""
    ref = ref_point or OperatingPoint(v_read=25e-3, temperature=300.0)
    return TrapParams(
        tau_capture_ref=0.5,
        tau_emission_ref=0.2,
        delta_i=200e-12,
        v_sensitivity=50e-3,
        activation_energy=0.3,
        ref_point=ref,
    )


def default_device(n_traps=1, ref_point=None):
    return DeviceParams(traps=tuple(default_trap(ref_point) for _ in range(n_traps)))


def effective_dwell_times(trap: TrapParams, op: OperatingPoint):
    """Mean HIGH/LOW dwell times (tau_h, tau_l) at an operating point.

    tau_h shrinks exponentially with read voltage (scale v_sensitivity);
    both dwells carry a shared Arrhenius factor, so both shrink as the
    temperature rises. The LOW dwell is voltage-independent.
    """
    ref = trap.ref_point
    arrh = math.exp(
        (trap.activation_energy / K_B_EV) * (1.0 / op.temperature - 1.0 / ref.temperature)
    )
    tau_h = trap.tau_capture_ref * math.exp(-(op.v_read - ref.v_read) / trap.v_sensitivity) * arrh
    tau_l = trap.tau_emission_ref * arrh
    if not (math.isfinite(tau_h) and math.isfinite(tau_l) and tau_h > 0 and tau_l > 0):
        raise ValueError(f"dwell times overflowed: tau_h={tau_h}, tau_l={tau_l}")
    return tau_h, tau_l


def corner_frequency(tau_h, tau_l):
    """Lorentzian corner f = (1/2pi)(1/tau_l + 1/tau_h); symmetric in its arguments."""
    if not (tau_h > 0 and tau_l > 0):
        raise ValueError("dwell times must be positive")
    return (1.0 / (2.0 * math.pi)) * (1.0 / tau_l + 1.0 / tau_h)


def lorentzian_psd(f, delta_i, tau_h, tau_l):
    """One-sided RTN power density 4*dI^2/(tau_h+tau_l) * tau^2/(1+(2 pi f tau)^2).

    tau is the composite time constant 1/(1/tau_h + 1/tau_l). Accepts a
    frequency array. Integrates over f in [0, inf) to the process variance.
    """
    if not (tau_h > 0 and tau_l > 0 and delta_i > 0):
        raise ValueError("delta_i and dwell times must be positive")
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise ValueError("frequencies must be >= 0")
    tau = 1.0 / (1.0 / tau_h + 1.0 / tau_l)
    out = (4.0 * delta_i**2 / (tau_h + tau_l)) * tau**2 / (1.0 + (2.0 * np.pi * f * tau) ** 2)
    return out if out.ndim else float(out)


def baseline_current(v, device: DeviceParams, temperature):
    """Static HRS read current g0*v_c*sinh(v/v_c)*(1 + gamma*(T - t_ref)).

    Odd and strictly increasing in v. Refuses biases outside the read
    window, which would imply switching.
    """
    if abs(v) > device.v_read_max:
        raise ConfigError(
            f"|v|={abs(v):.4g} V outside read window (max {device.v_read_max:.4g} V)"
        )
    scale = 1.0 + device.temp_coeff * (temperature - device.t_ref)
    return device.g0 * device.v_c * math.sinh(v / device.v_c) * scale


def small_signal_conductance(device: DeviceParams, op: OperatingPoint):
    """dI/dV of the baseline at the operating point (used for node-voltage kicks)."""
    scale = 1.0 + device.temp_coeff * (op.temperature - device.t_ref)
    return device.g0 * math.cosh(op.v_read / device.v_c) * scale


def _as_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def simulate_trap(trap: TrapParams, op: OperatingPoint, duration, seed,
                  temperature_drift=0.0):
    """Exact alternating-renewal simulation of one trap.

    Dwells are exponential with the effective means at op; the initial
    level is drawn from the stationary distribution P[HIGH] =
    tau_h/(tau_h+tau_l). Deterministic given (params, seed).

    With a nonzero temperature_drift (K/s) the dwell rates become
    time-dependent and transitions are drawn by thinning against the
    worst-case rate, which stays exact.
    """
    if not duration > 0:
        raise ValueError("duration must be positive")
    rng = _as_rng(seed)
    tau_h, tau_l = effective_dwell_times(trap, op)
    level = HIGH if rng.random() < tau_h / (tau_h + tau_l) else LOW
    if temperature_drift == 0.0:
        times = _alternating_exponentials(rng, duration, level, tau_h, tau_l)
    else:
        times = _thinned_transitions(rng, duration, level, trap, op, temperature_drift)
    return TrapTrajectory(transition_times=times, initial_level=level, duration=duration)


def _alternating_exponentials(rng, duration, start_level, tau_h, tau_l):
    means = (tau_l, tau_h)  # dwell mean indexed by current level
    chunks = []
    t_end = 0.0
    level = start_level
    # expected number of dwells, padded; drawn in blocks until past duration
    block = max(64, int(2.0 * duration / (tau_h + tau_l)) + 16)
    while t_end < duration:
        first = rng.exponential(means[level], size=block)
        second = rng.exponential(means[1 - level], size=block)
        dwells = np.empty(2 * block)
        dwells[0::2] = first
        dwells[1::2] = second
        chunks.append(dwells)
        t_end += float(dwells.sum())
    times = np.cumsum(np.concatenate(chunks))
    return times[times < duration]


def _thinned_transitions(rng, duration, start_level, trap, op, drift):
    t_lo, t_hi = op.temperature, op.temperature + drift * duration
    if min(t_lo, t_hi) <= 0:
        raise ValueError("temperature drift drives temperature non-positive")

    def rates_at(temp):
        th, tl = effective_dwell_times(
            trap, OperatingPoint(op.v_read, temp)
        )
        return 1.0 / th, 1.0 / tl

    # dwell rates rise with temperature; bound with the hotter end
    r_h_max, r_l_max = rates_at(max(t_lo, t_hi))
    times = []
    t = 0.0
    level = start_level
    while True:
        lam_max = r_h_max if level == HIGH else r_l_max
        t += rng.exponential(1.0 / lam_max)
        if t >= duration:
            break
        r_h, r_l = rates_at(op.temperature + drift * t)
        lam = r_h if level == HIGH else r_l
        if rng.random() <= lam / lam_max:
            times.append(t)
            level ^= 1
    return np.asarray(times)


def render_trace(device: DeviceParams, trajectories, op: OperatingPoint, dt, duration,
                 noise_sigma=None, seed=None):
    """Sample the device current on a uniform grid.

    samples[k] = baseline + sum over traps of delta_i * level(k*dt),
    plus optional white measurement noise (sigma defaults to the mean
    trap amplitude / 20; pass 0 to disable).
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    trajectories = list(trajectories)
    if len(trajectories) != len(device.traps):
        raise ValueError(
            f"{len(device.traps)} traps but {len(trajectories)} trajectories"
        )
    taus = [effective_dwell_times(tr, op) for tr in device.traps]
    if taus:
        tau_min = min(min(pair) for pair in taus)
        if dt > tau_min / 10.0:
            warnings.warn(
                f"dt={dt:.3g}s is coarse relative to the fastest dwell {tau_min:.3g}s;"
                " transitions may be missed",
                stacklevel=2,
            )
    n = max(1, int(round(duration / dt)))
    current = np.full(n, baseline_current(op.v_read, device, op.temperature))
    for trap, traj in zip(device.traps, trajectories):
        current += trap.delta_i * traj.levels_on_grid(dt, n)
    if noise_sigma is None:
        noise_sigma = (
            float(np.mean([tr.delta_i for tr in device.traps])) / 20.0
            if device.traps
            else 0.0
        )
    if noise_sigma > 0:
        current = current + _as_rng(seed).normal(0.0, noise_sigma, size=n)
    meta = {
        "v_read": op.v_read,
        "temperature": op.temperature,
        "noise_sigma": noise_sigma,
        "seed": None if isinstance(seed, np.random.Generator) else seed,
    }
    return Trace(dt=dt, samples=current, meta=meta)


# ------------------------------------------------------------------ file I/O


def write_trace(trace: Trace, path):
    """Binary trace file: magic RTNT, version, dt, count, float64 LE samples."""
    payload = trace.samples.astype("<f8").tobytes()
    header = _TRACE_HEADER.pack(_TRACE_MAGIC, _TRACE_VERSION, 0, trace.dt,
                                trace.samples.size)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def read_trace(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _TRACE_HEADER.size:
        raise DataFormatError("trace file shorter than header", offset=len(raw))
    magic, version, _, dt, count = _TRACE_HEADER.unpack_from(raw)
    if magic != _TRACE_MAGIC:
        raise DataFormatError(f"bad magic {magic!r}", offset=0)
    if version != _TRACE_VERSION:
        raise DataFormatError(f"unsupported trace version {version}", offset=4)
    expected = _TRACE_HEADER.size + 8 * count
    if len(raw) != expected:
        raise DataFormatError(
            f"payload length mismatch: expected {expected} bytes, got {len(raw)}",
            offset=min(len(raw), expected),
        )
    samples = np.frombuffer(raw, dtype="<f8", count=count, offset=_TRACE_HEADER.size)
    return Trace(dt=dt, samples=samples.copy())


def trace_to_csv(trace: Trace, path):
    """CSV export (time,current) for plotting."""
    t = np.arange(trace.samples.size) * trace.dt
    with open(path, "w") as fh:
        fh.write("time,current\n")
        for ti, ci in zip(t.tolist(), trace.samples.tolist()):
            fh.write(f"{ti!r},{ci!r}\n")
