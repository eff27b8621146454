"""Josephson traveling-wave parametric amplifier analysis on left- and right-handed lines."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    InvalidConfigurationError,
    InvalidParameterError,
    LHTWPAError,
    NumericFailure,
    OutOfBandError,
)
from .line_model import Handedness, LineParameters  # noqa: E402
from .mixing import PumpDrive, gain_sweep, peak_detuning  # noqa: E402
from .double_pump import DoublePumpDrive, double_pump_gain_sweep  # noqa: E402
from .depletion import IntegrationSettings, compression_analysis, gain_with_depletion  # noqa: E402

__all__ = [
    "__version__",
    "LineParameters",
    "Handedness",
    "PumpDrive",
    "DoublePumpDrive",
    "IntegrationSettings",
    "gain_sweep",
    "peak_detuning",
    "double_pump_gain_sweep",
    "gain_with_depletion",
    "compression_analysis",
    "LHTWPAError",
    "InvalidParameterError",
    "OutOfBandError",
    "InvalidConfigurationError",
    "NumericFailure",
    "ConfigError",
]
