__version__ = "0.1.0"

from .core import SystemConfig, derive_params, gap_curve, theorem1_gap, estimate, verify_coupling
from skfeedback.utils import load_system_config, load_curve_sets, configure_logging, log

__all__ = [
    "SystemConfig",
    "derive_params",
    "gap_curve",
    "theorem1_gap",
    "estimate",
    "verify_coupling",
    "load_system_config",
    "load_curve_sets",
    "configure_logging",
    "log",
]
