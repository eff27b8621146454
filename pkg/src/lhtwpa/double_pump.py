"""Non-degenerate (two-pump) four-wave mixing.

Pumps at ``w1`` and ``w2`` amplify a signal ``w3`` and idler
``w4 = w1 + w2 - w3``. Straddling the zero-dispersion frequency with the
two pumps flattens the linear mismatch across a wide signal band.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import line_model as lm
from . import mixing
from .errors import InvalidParameterError


@dataclass(frozen=True)
class DoublePumpDrive:
    """Two pumps: angular frequencies and current ratios ``I_j / I_0``.

    The pumps may be given in either order, and equal frequencies are
    allowed so the degenerate limit can be taken.
    """

    frequency_1: float
    frequency_2: float
    current_ratio_1: float
    current_ratio_2: float

    def __post_init__(self):
        for f in (self.frequency_1, self.frequency_2):
            if not (np.isfinite(f) and f > 0):
                raise InvalidParameterError(f"pump frequency must be positive, got {f!r}")
        for r in (self.current_ratio_1, self.current_ratio_2):
            if not 0 <= r < 1:
                raise InvalidParameterError(f"current ratio must lie in [0, 1), got {r!r}")

    @classmethod
    def from_ghz(cls, f1_ghz, f2_ghz, ratio_1, ratio_2):
        return cls(2 * np.pi * f1_ghz * 1e9, 2 * np.pi * f2_ghz * 1e9, ratio_1, ratio_2)

    @property
    def center(self):
        return 0.5 * (self.frequency_1 + self.frequency_2)

    def swapped(self):
        return DoublePumpDrive(self.frequency_2, self.frequency_1, self.current_ratio_2, self.current_ratio_1)


@dataclass(frozen=True)
class DoublePumpCoefficients:
    rho_1: float
    rho_2: float
    alpha_p1: float
    alpha_p2: float
    alpha_s: float
    alpha_i: float
    beta_s: float
    beta_i: float


def _rho(params, omega, ratio):
    if params.is_left:
        return 0.5 * ratio**2 * (params.omega_0 / (4.0 * omega)) ** 2
    return 0.5 * ratio**2 / 16.0


def idler_frequency(drive, omega_s):
    """``w1 + w2 - w_s``, returning the other pump exactly when the signal sits on one."""
    w1, w2 = drive.frequency_1, drive.frequency_2
    omega_s = np.asarray(omega_s, dtype=float)
    out = np.where(omega_s == w1, w2, np.where(omega_s == w2, w1, w1 + w2 - omega_s))
    return float(out) if out.ndim == 0 else out


def _check(params, drive, omega_s):
    lm.check_in_band(params, drive.frequency_1)
    lm.check_in_band(params, drive.frequency_2)
    omega_s = np.asarray(omega_s, dtype=float)
    lm.check_in_band(params, omega_s)
    lm.check_in_band(params, idler_frequency(drive, omega_s))


def double_pump_coefficients(params, drive, omega_s):
    """Coupling rates with the signal at ``omega_s`` (scalar or array)."""
    _check(params, drive, omega_s)
    w1, w2 = drive.frequency_1, drive.frequency_2
    omega_i = idler_frequency(drive, omega_s)
    rho_1 = _rho(params, w1, drive.current_ratio_1)
    rho_2 = _rho(params, w2, drive.current_ratio_2)
    q1 = w1 / lm.group_velocity(params, w1)
    q2 = w2 / lm.group_velocity(params, w2)
    qs = omega_s / lm.group_velocity(params, omega_s)
    qi = omega_i / lm.group_velocity(params, omega_i)
    cross = 2.0 * np.sqrt(rho_1 * rho_2)
    return DoublePumpCoefficients(
        rho_1=rho_1,
        rho_2=rho_2,
        alpha_p1=(2.0 / 3.0) * q1 * (rho_1 + 2.0 * rho_2),
        alpha_p2=(2.0 / 3.0) * q2 * (rho_2 + 2.0 * rho_1),
        alpha_s=2.0 * (rho_1 + rho_2) * qs,
        alpha_i=2.0 * (rho_1 + rho_2) * qi,
        beta_s=cross * qs,
        beta_i=cross * qi,
    )


def double_pump_linear_mismatch(params, drive, omega_s):
    """``k1 + k2 - k3 - k4``, grouped so it is exactly zero when the signal sits on a pump."""
    omega_i = idler_frequency(drive, omega_s)
    k = lambda w: lm.wavevector(params, w)  # noqa: E731
    k1, k2, k3, k4 = k(drive.frequency_1), k(drive.frequency_2), k(omega_s), k(omega_i)
    return (k1 - k3) + (k2 - k4)


def double_pump_mismatch_and_rate(params, drive, omega_s):
    """:class:`~lhtwpa.mixing.CouplingSet` for the two-pump process.

    ``delta`` is the signal detuning from the pump centre, ``w_s = w_c (1 - delta)``,
    and ``alpha_p`` holds the mean pump coefficient so the usual identity
    ``dk_nonlinear = 2 alpha_p - alpha_s - alpha_i`` still holds.
    """
    c = double_pump_coefficients(params, drive, omega_s)
    dk_linear = double_pump_linear_mismatch(params, drive, omega_s)
    return mixing.CouplingSet(
        delta=1.0 - np.asarray(omega_s) / drive.center,
        rho=c.rho_1 + c.rho_2,
        alpha_p=0.5 * (c.alpha_p1 + c.alpha_p2),
        alpha_s=c.alpha_s,
        alpha_i=c.alpha_i,
        beta_s=c.beta_s,
        beta_i=c.beta_i,
        dk_linear=dk_linear,
        dk_nonlinear=c.alpha_p1 + c.alpha_p2 - c.alpha_s - c.alpha_i,
    )


@dataclass(frozen=True)
class FlatTopMetrics:
    """Figures of merit of a gain profile.

    Bandwidths and band edges are in Hz (not rad/s). ``band_20db`` is the
    widest contiguous interval with gain of at least ``threshold_db``;
    ``ripple_db`` is the gain excursion inside that interval.
    """

    max_gain_db: float
    frequency_at_max: float
    bandwidth_3db: float
    band_20db: Optional[mixing.Band]
    ripple_db: float
    threshold_db: float = 20.0

    @property
    def bandwidth_20db(self):
        return self.band_20db.width if self.band_20db else 0.0


def flat_top_metrics(frequency_hz, gain_db, threshold_db=20.0):
    """Peak gain with its -3 dB bandwidth, plus the widest band above threshold."""
    f = np.asarray(frequency_hz, dtype=float)
    g = np.asarray(gain_db, dtype=float)
    order = np.argsort(f)
    f, g = f[order], g[order]
    finite = np.where(np.isfinite(g), g, -np.inf)
    i = int(np.argmax(finite))
    peak = float(finite[i])
    band3 = mixing.band_around(f, g, peak - 3.0, i)
    band20 = mixing.widest_band(f, g, threshold_db)
    ripple = np.nan
    if band20 is not None:
        inside = (f >= band20.low) & (f <= band20.high) & np.isfinite(g)
        ripple = float(g[inside].max() - g[inside].min()) if inside.any() else 0.0
    return FlatTopMetrics(
        max_gain_db=peak,
        frequency_at_max=float(f[i]),
        bandwidth_3db=band3.width if band3 else 0.0,
        band_20db=band20,
        ripple_db=ripple,
        threshold_db=threshold_db,
    )


def default_signal_grid(params, drive, points=mixing.DEFAULT_GRID_POINTS, guard=mixing.DEFAULT_GRID_GUARD):
    """Signal grid symmetric about the pump centre, both tones inside the band."""
    wc = drive.center
    half = min(wc, params.plasma_frequency * (1 - lm.BAND_EDGE_GUARD) - wc) * (1 - guard)
    return np.linspace(wc - half, wc + half, points)


def double_pump_gain_sweep(params, drive, n_cells, signal_grid=None):
    """Gain curve over signal frequencies (rad/s) and its flat-top metrics."""
    _check(params, drive, drive.center)
    grid = default_signal_grid(params, drive) if signal_grid is None else np.asarray(signal_grid, dtype=float)
    delta = 1.0 - grid / drive.center
    curve = mixing._empty_curve(delta, int(n_cells), params.cell_pitch)
    curve.signal_frequency[:] = grid
    limit = params.plasma_frequency * (1 - lm.BAND_EDGE_GUARD)
    idler = idler_frequency(drive, grid)
    mask = (grid > 0) & (grid < limit) & (idler > 0) & (idler < limit)
    if np.any(mask):
        coupling = double_pump_mismatch_and_rate(params, drive, grid[mask])
        mixing.fill_curve(curve, mask, coupling, grid[mask])
    metrics = flat_top_metrics(curve.signal_frequency / (2 * np.pi), curve.cis_gain_db)
    return curve, metrics
