"""rtnlab: random-telegraph-noise TRNG simulation and evaluation."""

from .errors import AnalysisError, ConfigError, DataFormatError, RtnLabError
from .rtn_core import (
    DeviceParams,
    OperatingPoint,
    Trace,
    TrapParams,
    TrapTrajectory,
    corner_frequency,
    default_device,
    default_trap,
    effective_dwell_times,
    lorentzian_psd,
    read_trace,
    render_trace,
    simulate_trap,
    write_trace,
)
from .harvester import (
    DIFFERENTIAL,
    SINGLE_ENDED,
    Disturbance,
    HarvesterConfig,
    PsrrResult,
    ReadoutRecord,
    Tone,
    psrr_estimate,
    run_differential,
    run_single_ended,
)
from .bitgen import (
    BitStream,
    LfsrConfig,
    SamplerConfig,
    lfsr_keystream,
    lfsr_whiten,
    read_bits,
    sample_bits,
    write_bits,
)
from .analysis import (
    autocorrelation,
    bitmap_emit,
    characterize_spectrum,
    dwell_times,
    estimate_psd,
    extract_levels,
    markov_predict,
    shannon_entropy,
    tlp,
)
from .stat_tests import BatteryReport, TestResult, run_battery
from .config import (
    ExperimentConfig,
    calibration_config,
    default_config,
    derive_seed,
    load_config,
)

__version__ = "0.1.0"

__all__ = [
    "AnalysisError",
    "ConfigError",
    "DataFormatError",
    "RtnLabError",
    "DeviceParams",
    "OperatingPoint",
    "Trace",
    "TrapParams",
    "TrapTrajectory",
    "corner_frequency",
    "default_device",
    "default_trap",
    "effective_dwell_times",
    "lorentzian_psd",
    "read_trace",
    "render_trace",
    "simulate_trap",
    "write_trace",
    "DIFFERENTIAL",
    "SINGLE_ENDED",
    "Disturbance",
    "HarvesterConfig",
    "PsrrResult",
    "ReadoutRecord",
    "Tone",
    "psrr_estimate",
    "run_differential",
    "run_single_ended",
    "BitStream",
    "LfsrConfig",
    "SamplerConfig",
    "lfsr_keystream",
    "lfsr_whiten",
    "read_bits",
    "sample_bits",
    "write_bits",
    "autocorrelation",
    "bitmap_emit",
    "characterize_spectrum",
    "dwell_times",
    "estimate_psd",
    "extract_levels",
    "markov_predict",
    "shannon_entropy",
    "tlp",
    "BatteryReport",
    "TestResult",
    "run_battery",
    "ExperimentConfig",
    "calibration_config",
    "default_config",
    "derive_seed",
    "load_config",
    "__version__",
]
