"""rtnattack: LSTM next-bit prediction attack on exported TRNG bitstreams."""

from .bitsio import DataError, read_bits, write_bits
from .model import (
    AttackConfig,
    AttackReport,
    ConfigError,
    attack,
    binomial_interval,
    report_schema,
    run_attack,
    validate_report,
)

__version__ = "0.1.0"

__all__ = [
    "AttackConfig",
    "AttackReport",
    "ConfigError",
    "DataError",
    "attack",
    "binomial_interval",
    "read_bits",
    "report_schema",
    "run_attack",
    "validate_report",
    "write_bits",
    "__version__",
]
