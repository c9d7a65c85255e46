"""Behavioral readout-circuit models: single-ended and differential
energy harvesting of telegraph-noise current jumps into comparator
decision streams, with injectable supply/common-mode/thermal
disturbances.

Each regulated node is a first-order loop: the node voltage relaxes
toward its regulation target with time constant 1/(2*pi*loop_bandwidth).
A branch current jump dI deflects the node by dI/G (G = branch
small-signal conductance) and then re-settles. Supply and V_READ
disturbances enter through the regulation target -- the supply tone
scaled by ``supply_coupling``, V_READ noise at unity -- each branch
seeing the disturbance scaled by (1 +- branch_mismatch/2), which is
what the differential topology cancels.

The comparator input u is assembled from per-branch differences rather
than node voltages, so that with zero mismatch a common-mode waveform
cancels exactly (bit-identical decisions with and without it), not just
to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from . import rtn_core as rc
from .errors import AnalysisError, ConfigError

SINGLE_ENDED = "single_ended"
DIFFERENTIAL = "differential"


@dataclass(frozen=True)
class Tone:
    amplitude: float  # volts
    frequency: float  # hertz

    def __post_init__(self):
        if self.amplitude < 0:
            raise ConfigError("tone amplitude must be >= 0")
        if self.amplitude > 0 and self.frequency <= 0:
            raise ConfigError("tone frequency must be positive")

    def waveform(self, t):
        return self.amplitude * np.sin(2.0 * np.pi * self.frequency * t)


@dataclass(frozen=True)
class Disturbance:
    supply_tone: Tone | None = None
    common_mode_tone: Tone | None = None  # rides on V_READ
    temperature_drift: float = 0.0  # kelvin / second
    broadband_supply_noise_sigma: float = 0.0  # volts

    def __post_init__(self):
        if self.broadband_supply_noise_sigma < 0:
            raise ConfigError("broadband noise sigma must be >= 0")


CLEAN = Disturbance()


@dataclass(frozen=True)
class HarvesterConfig:
    mode: str = DIFFERENTIAL
    loop_bandwidth: float = 5.0  # hertz
    comparator_offset: float = 0.0  # volts
    comparator_hysteresis: float = 6e-3  # volts, full width
    branch_mismatch: float = 0.01  # relative conductance/coupling mismatch
    reference_voltage: float | None = None  # single-ended threshold; None -> V_READ
    supply_coupling: float = 0.1  # fraction of supply tone reaching the target
    current_noise_sigma: float | None = None  # amperes; None -> mean trap dI / 20
    psrr_ceiling: float = 1e6

    def __post_init__(self):
        if self.mode not in (SINGLE_ENDED, DIFFERENTIAL):
            raise ConfigError(f"mode must be {SINGLE_ENDED!r} or {DIFFERENTIAL!r}")
        if not self.loop_bandwidth > 0:
            raise ConfigError("loop_bandwidth must be positive")
        if self.comparator_hysteresis < 0:
            raise ConfigError("comparator_hysteresis must be >= 0")
        if not 0.0 <= self.branch_mismatch <= 0.5:
            raise ConfigError("branch_mismatch must lie in [0, 0.5]")
        if self.supply_coupling < 0:
            raise ConfigError("supply_coupling must be >= 0")
        if not self.psrr_ceiling > 1:
            raise ConfigError("psrr_ceiling must exceed 1")


@dataclass
class ReadoutRecord:
    dt: float
    v_x: np.ndarray
    decision: np.ndarray
    comparator_input: np.ndarray  # pre-comparator analog signal u
    v_y: np.ndarray | None = None
    meta: dict | None = None

    def __post_init__(self):
        n = self.v_x.size
        if self.decision.size != n or self.comparator_input.size != n:
            raise ValueError("record channels must have equal length")
        if self.v_y is not None and self.v_y.size != n:
            raise ValueError("record channels must have equal length")

    @property
    def duration(self):
        return self.v_x.size * self.dt

    def to_trace(self, channel="x"):
        """Node waveform as a Trace; channel 'u' exports the comparator input."""
        data = {"x": self.v_x, "y": self.v_y, "u": self.comparator_input}[channel]
        if data is None:
            raise ConfigError(f"record has no channel {channel!r}")
        return rc.Trace(dt=self.dt, samples=np.asarray(data, dtype=np.float64),
                        meta={"channel": channel})


@dataclass
class PsrrResult:
    rejection: float  # injected / leaked amplitude
    rejection_db: float
    injected_amplitude: float
    leaked_amplitude: float
    frequency: float
    clipped: bool  # True when leakage fell below resolution (report ">= ceiling")


def _as_devices(dev):
    """Normalize one device or a parallel stack of devices to a tuple."""
    if isinstance(dev, rc.DeviceParams):
        return (dev,)
    devs = tuple(dev)
    if not devs:
        raise ConfigError("branch needs at least one device")
    return devs


def _default_noise_sigma(devices):
    amps = [t.delta_i for d in devices for t in d.traps]
    return float(np.mean(amps)) / 20.0 if amps else 0.0


def _one_pole(x, a, y0):
    """y[k] = (1-a) x[k] + a y[k-1], started from steady state y0."""
    return lfilter([1.0 - a], [1.0, -a], x, zi=np.array([a * y0]))[0]


def _branch_signal(devices, op, temperature, n, dt, duration, a,
                   trap_rng, noise_rng, noise_sigma, drift):
    """(deviation s, conductance G) for one branch of parallel devices.

    s responds instantly to branch-current jumps (dI/G) and relaxes to
    zero with the loop time constant; slow drifts are tracked out.
    """
    current = np.zeros(n)
    g = 0.0
    for dev in devices:
        current = current + rc.baseline_current(op.v_read, dev, temperature)
        g += rc.small_signal_conductance(dev, op)
        for trap in dev.traps:
            traj = rc.simulate_trap(trap, op, duration, trap_rng,
                                    temperature_drift=drift)
            current += trap.delta_i * traj.levels_on_grid(dt, n)
    if noise_sigma > 0:
        current += noise_rng.normal(0.0, noise_sigma, n)
    w = (current - current[0]) / g
    dw = np.empty(n)
    dw[0] = 0.0
    np.subtract(w[1:], w[:-1], out=dw[1:])
    s = lfilter([1.0], [1.0, -a], dw)
    return s, g


def _hysteretic_sign(u, hysteresis):
    """1 after u exceeds +h/2, 0 after u falls below -h/2, else hold."""
    half = hysteresis / 2.0
    raw = np.where(u > half, 1, np.where(u < -half, 0, -1)).astype(np.int64)
    if raw[0] < 0:
        raw[0] = int(u[0] > 0)
    idx = np.arange(u.size)
    fill = np.maximum.accumulate(np.where(raw >= 0, idx, 0))
    return raw[fill].astype(np.uint8)


def _prepare(cfg, dist, op, duration, dt):
    if dt <= 0 or duration <= 0:
        raise ConfigError("duration and dt must be positive")
    if dt > 0.1 / cfg.loop_bandwidth:
        raise ConfigError(
            f"dt={dt:.3g}s too coarse for loop_bandwidth={cfg.loop_bandwidth:.3g}Hz"
            f" (need dt <= {0.1 / cfg.loop_bandwidth:.3g}s)"
        )
    n = max(1, int(round(duration / dt)))
    t = np.arange(n) * dt
    a = float(np.exp(-2.0 * np.pi * cfg.loop_bandwidth * dt))
    return n, t, a


def _target_deviation(cfg, dist, t, supply_noise_rng):
    """Disturbance seen by the regulation target (before mismatch scaling)."""
    dev = np.zeros(t.size)
    if dist.supply_tone is not None and dist.supply_tone.amplitude > 0:
        dev += cfg.supply_coupling * dist.supply_tone.waveform(t)
    if dist.common_mode_tone is not None and dist.common_mode_tone.amplitude > 0:
        dev += dist.common_mode_tone.waveform(t)
    if dist.broadband_supply_noise_sigma > 0:
        dev += cfg.supply_coupling * supply_noise_rng.normal(
            0.0, dist.broadband_supply_noise_sigma, t.size
        )
    return dev


def _temperature(op, dist, t):
    if dist.temperature_drift:
        return op.temperature + dist.temperature_drift * t
    return op.temperature


def run_differential(device_a, device_b, cfg: HarvesterConfig, dist: Disturbance,
                     op: rc.OperatingPoint, duration, dt, seed, branch_seeds=None):
    """Differential readout: decision = hysteretic sign(v_x - v_y + offset).

    ``branch_seeds`` overrides the derived per-branch seeds (passing the
    same value twice makes the branches draw identical randomness).
    """
    if cfg.mode != DIFFERENTIAL:
        raise ConfigError("config mode must be differential")
    devs_a, devs_b = _as_devices(device_a), _as_devices(device_b)
    n, t, a = _prepare(cfg, dist, op, duration, dt)

    if branch_seeds is None:
        ss_a, ss_b, ss_sup = np.random.SeedSequence(seed).spawn(3)
    else:
        ss_a = np.random.SeedSequence(branch_seeds[0])
        ss_b = np.random.SeedSequence(branch_seeds[1])
        ss_sup = np.random.SeedSequence(seed).spawn(3)[2]
    temperature = _temperature(op, dist, t)
    target_dev = _target_deviation(cfg, dist, t, np.random.default_rng(ss_sup))
    base_dev_a = _one_pole(target_dev * (1.0 + cfg.branch_mismatch / 2.0), a, 0.0)
    base_dev_b = _one_pole(target_dev * (1.0 - cfg.branch_mismatch / 2.0), a, 0.0)

    branches = []
    for devs, ss in ((devs_a, ss_a), (devs_b, ss_b)):
        trap_ss, noise_ss = ss.spawn(2)
        sigma = (cfg.current_noise_sigma if cfg.current_noise_sigma is not None
                 else _default_noise_sigma(devs))
        s, _ = _branch_signal(devs, op, temperature, n, dt, duration, a,
                              np.random.default_rng(trap_ss),
                              np.random.default_rng(noise_ss), sigma,
                              dist.temperature_drift)
        branches.append(s)
    s_a, s_b = branches

    # assembled as differences of like terms: common-mode drops out exactly
    u = (base_dev_a - base_dev_b) + (s_a - s_b) + cfg.comparator_offset
    decision = _hysteretic_sign(u, cfg.comparator_hysteresis)
    v_x = op.v_read + base_dev_a + s_a
    v_y = op.v_read + base_dev_b + s_b
    return ReadoutRecord(dt=dt, v_x=v_x, v_y=v_y, decision=decision,
                         comparator_input=u,
                         meta={"mode": DIFFERENTIAL, "loop_a": a, "seed": seed})


def run_single_ended(device, cfg: HarvesterConfig, dist: Disturbance,
                     op: rc.OperatingPoint, duration, dt, seed):
    """Single-ended readout against a fixed reference voltage.

    Disturbances couple at full amplitude -- nothing cancels them.
    """
    if cfg.mode != SINGLE_ENDED:
        raise ConfigError("config mode must be single_ended")
    devs = _as_devices(device)
    n, t, a = _prepare(cfg, dist, op, duration, dt)

    ss_dev, ss_sup = np.random.SeedSequence(seed).spawn(2)
    temperature = _temperature(op, dist, t)
    target_dev = _target_deviation(cfg, dist, t, np.random.default_rng(ss_sup))
    base_dev = _one_pole(target_dev, a, 0.0)

    trap_ss, noise_ss = ss_dev.spawn(2)
    sigma = (cfg.current_noise_sigma if cfg.current_noise_sigma is not None
             else _default_noise_sigma(devs))
    s, _ = _branch_signal(devs, op, temperature, n, dt, duration, a,
                          np.random.default_rng(trap_ss),
                          np.random.default_rng(noise_ss), sigma,
                          dist.temperature_drift)

    reference = cfg.reference_voltage if cfg.reference_voltage is not None else op.v_read
    u = (op.v_read - reference) + base_dev + s + cfg.comparator_offset
    decision = _hysteretic_sign(u, cfg.comparator_hysteresis)
    v_x = op.v_read + base_dev + s
    return ReadoutRecord(dt=dt, v_x=v_x, v_y=None, decision=decision,
                         comparator_input=u,
                         meta={"mode": SINGLE_ENDED, "loop_a": a, "seed": seed})


def psrr_estimate(device_a, device_b, cfg: HarvesterConfig, dist: Disturbance,
                  op: rc.OperatingPoint, duration, dt, seed):
    """Supply rejection: injected tone amplitude over its leakage into
    the pre-comparator signal, measured by single-bin Fourier projection
    over an integer number of tone periods."""
    tone = dist.supply_tone
    if tone is None or tone.amplitude <= 0:
        raise ConfigError("psrr_estimate needs a nonzero supply tone")
    if dist.common_mode_tone is not None and dist.common_mode_tone.amplitude > 0:
        raise ConfigError("psrr_estimate needs the supply tone to be the only tone")
    periods = int(np.floor(duration * tone.frequency))
    if periods < 1:
        raise AnalysisError(
            f"tone at {tone.frequency:.3g} Hz not resolvable within {duration:.3g}s"
        )
    if cfg.mode == DIFFERENTIAL:
        record = run_differential(device_a, device_b, cfg, dist, op, duration, dt, seed)
    else:
        record = run_single_ended(device_a, cfg, dist, op, duration, dt, seed)
    m = int(round(periods / (tone.frequency * dt)))
    u = record.comparator_input[:m]
    t = np.arange(m) * dt
    phasor = np.exp(-2j * np.pi * tone.frequency * t)
    leaked = 2.0 * abs(np.sum((u - u.mean()) * phasor)) / m
    injected = tone.amplitude
    if leaked <= 0 or injected / leaked > cfg.psrr_ceiling:
        return PsrrResult(rejection=cfg.psrr_ceiling,
                          rejection_db=20.0 * np.log10(cfg.psrr_ceiling),
                          injected_amplitude=injected, leaked_amplitude=float(leaked),
                          frequency=tone.frequency, clipped=True)
    rej = injected / leaked
    return PsrrResult(rejection=float(rej), rejection_db=float(20.0 * np.log10(rej)),
                      injected_amplitude=injected, leaked_amplitude=float(leaked),
                      frequency=tone.frequency, clipped=False)
