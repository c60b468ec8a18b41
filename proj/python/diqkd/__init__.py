"""Device-independent QKD simulator: CHSH statistics, Cascade reconciliation
and privacy amplification, backed by the C++ core."""

from diqkd._core import (
    AbortSignal,
    ChshEstimate,
    ConfigError,
    ContractViolationError,
    IncompleteStatisticsError,
    InputPair,
    KeyRateReport,
    NoiseModel,
    ProtocolConfig,
    RoundRecord,
    RoundType,
    SiftedKeys,
    abort_check,
    block_schedule,
    correlator,
    estimate_chsh,
    estimate_qber,
    key_rate,
    key_rate_per_bit,
    reconcile,
    run_rounds,
    sample_products,
    sift_keys,
    simulate_summary,
    universal_hash,
    verify_keys,
)

__all__ = [
    "AbortSignal",
    "ChshEstimate",
    "ConfigError",
    "ContractViolationError",
    "IncompleteStatisticsError",
    "InputPair",
    "KeyRateReport",
    "NoiseModel",
    "ProtocolConfig",
    "RoundRecord",
    "RoundType",
    "SiftedKeys",
    "abort_check",
    "block_schedule",
    "correlator",
    "estimate_chsh",
    "estimate_qber",
    "key_rate",
    "key_rate_per_bit",
    "reconcile",
    "run_rounds",
    "sample_products",
    "sift_keys",
    "simulate_summary",
    "universal_hash",
    "verify_keys",
]
