"""Stiff-pump four-wave mixing: phase mismatch and small-signal gain.

Signal and idler sit at ``w_p (1 - delta)`` and ``w_p (1 + delta)``. The
gain rate ``g`` is handled through ``g**2`` (real for lossless lines), so
the phase-matched wing (``g**2 > 0``) and the oscillatory wing
(``g**2 < 0``) share one set of formulas.

Amplitudes follow ``phi = (A/2) exp(i(k x - w t)) + c.c.``.
"""

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.optimize import brentq

from . import line_model as lm
from .errors import InvalidParameterError, OutOfBandError

#: Relative gap kept between the detuning grid and the band edges.
DEFAULT_GRID_GUARD = 1e-3
DEFAULT_GRID_POINTS = 2001

# below this |g x| the series forms of sinh(gx)/g and cosh(gx) are used
_SERIES_THRESHOLD = 1e-6


@dataclass(frozen=True)
class PumpDrive:
    """Single pump: angular frequency and current ratio ``I_p / I_0``."""

    frequency: float
    current_ratio: float

    def __post_init__(self):
        if not (np.isfinite(self.frequency) and self.frequency > 0):
            raise InvalidParameterError(f"pump frequency must be positive, got {self.frequency!r}")
        if not 0 <= self.current_ratio < 1:
            raise InvalidParameterError(
                f"current ratio must lie in [0, 1) for the perturbative expansion, got {self.current_ratio!r}"
            )

    @classmethod
    def from_ghz(cls, f_ghz, current_ratio):
        return cls(2 * np.pi * f_ghz * 1e9, current_ratio)


class PhaseCoefficients(NamedTuple):
    alpha_p: float
    alpha_s: float
    alpha_i: float
    beta_s: float
    beta_i: float


@dataclass(frozen=True)
class CouplingSet:
    """Nonlinear coefficients and wave-vector mismatches at one detuning.

    Fields may be scalars or equal-shape arrays. All rates are per metre.
    ``alpha_p`` is the per-pump self-phase coefficient, so that
    ``dk_nonlinear = 2 alpha_p - alpha_s - alpha_i``.
    """

    delta: float
    rho: float
    alpha_p: float
    alpha_s: float
    alpha_i: float
    beta_s: float
    beta_i: float
    dk_linear: float
    dk_nonlinear: float
    dk: float = field(init=False)
    g_squared: float = field(init=False)

    def __post_init__(self):
        dk = self.dk_linear + self.dk_nonlinear
        object.__setattr__(self, "dk", dk)
        g2 = np.real(self.beta_s * np.conj(self.beta_i)) - 0.25 * dk * dk
        object.__setattr__(self, "g_squared", g2)

    @property
    def g(self):
        """Gain rate as a complex number (purely imaginary when unmatched)."""
        return np.sqrt(np.asarray(self.g_squared, dtype=complex))

    @classmethod
    def from_rates(cls, beta_s, beta_i, dk_linear, dk_nonlinear, delta=np.nan):
        """Build a coupling set from bare rates (coefficient fields set to NaN)."""
        nan = np.nan
        return cls(delta, nan, nan, nan, nan, beta_s, beta_i, dk_linear, dk_nonlinear)


@dataclass(frozen=True)
class GainPoint:
    delta: float
    cis_gain: float
    trans_gain: float
    trans_gain_idler: float
    phase: float
    dk_linear: float
    dk_nonlinear: float
    dk: float

    @property
    def cis_gain_db(self):
        return 10 * np.log10(self.cis_gain)


def _check_pump(params, pump):
    lm.check_in_band(params, pump.frequency)


def mixing_coefficient(params, pump):
    """Nonlinear mixing coefficient ``rho``.

    For the left-handed line the shunt junction carries ``I_p w0 / w_p``,
    giving ``rho = (I_p/I_0)^2 (w0 / 4 w_p)^2``. In the right-handed line the
    series junction carries the line current itself and ``rho = (I_p/I_0)^2 / 16``.
    """
    _check_pump(params, pump)
    if params.is_left:
        return pump.current_ratio**2 * (params.omega_0 / (4.0 * pump.frequency)) ** 2
    return pump.current_ratio**2 / 16.0


def _omega_over_vg(params, omega):
    return omega / lm.group_velocity(params, omega)


def phase_coefficients(params, pump, delta):
    """Self/cross-phase and parametric coupling rates ``(alpha_p, alpha_s, alpha_i, beta_s, beta_i)``."""
    rho = mixing_coefficient(params, pump)
    omega_s, omega_i = lm.tone_pair(pump.frequency, delta)
    q_p = _omega_over_vg(params, pump.frequency)
    q_s = _omega_over_vg(params, omega_s)
    q_i = _omega_over_vg(params, omega_i)
    alpha_p = rho * q_p * np.ones_like(q_s)
    if np.ndim(delta) == 0:
        alpha_p = float(alpha_p)
    return PhaseCoefficients(alpha_p, 2 * rho * q_s, 2 * rho * q_i, rho * q_s, rho * q_i)


def nonlinear_mismatch(params, pump, delta, approximate=False):
    """Pump-induced mismatch ``2 alpha_p - alpha_s - alpha_i`` (rad/m).

    ``approximate=True`` gives the left-handed small-frequency form
    ``2 rho (w0 / (a w_p)) (1 + delta^2) / (1 - delta^2)``.
    """
    if approximate:
        if not params.is_left:
            raise InvalidParameterError("the small-frequency form is defined for left-handed lines")
        lm.tone_pair(pump.frequency, delta)
        rho = mixing_coefficient(params, pump)
        d2 = np.asarray(delta, dtype=float) ** 2
        value = 2 * rho * params.omega_0 / (params.cell_pitch * pump.frequency) * (1 + d2) / (1 - d2)
        return float(value) if np.ndim(delta) == 0 else value
    c = phase_coefficients(params, pump, delta)
    return 2 * c.alpha_p - c.alpha_s - c.alpha_i


def gain_rate(params, pump, delta):
    """Full :class:`CouplingSet` at detuning ``delta`` (scalar or array)."""
    c = phase_coefficients(params, pump, delta)
    return CouplingSet(
        delta=delta,
        rho=mixing_coefficient(params, pump),
        alpha_p=c.alpha_p,
        alpha_s=c.alpha_s,
        alpha_i=c.alpha_i,
        beta_s=c.beta_s,
        beta_i=c.beta_i,
        dk_linear=lm.linear_mismatch(params, pump.frequency, delta),
        dk_nonlinear=2 * c.alpha_p - c.alpha_s - c.alpha_i,
    )


def transfer_terms(g_squared, x):
    """Return ``(cosh(g x), sinh(g x) / g)`` as real numbers from ``g**2``.

    Both are entire functions of ``g**2``; imaginary ``g`` maps to
    ``cos`` and ``sin(|g| x)/|g|``, and tiny ``|g x|`` uses the series.
    """
    g2 = np.asarray(g_squared, dtype=float)
    x = np.asarray(x, dtype=float)
    z = g2 * x * x
    small = np.abs(z) < _SERIES_THRESHOLD**2
    pos = (z > 0) & ~small
    neg = (z < 0) & ~small
    r = np.sqrt(np.abs(g2))
    rx = r * x
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        cosh = np.where(pos, np.cosh(rx), np.where(neg, np.cos(rx), 1 + z / 2 + z * z / 24))
        sinc = np.where(
            pos,
            np.sinh(rx) / np.where(r > 0, r, 1.0),
            np.where(neg, np.sin(rx) / np.where(r > 0, r, 1.0), x * (1 + z / 6 + z * z / 120)),
        )
    if cosh.ndim == 0:
        return float(cosh), float(sinc)
    return cosh, sinc


def gain_at_length(coupling, x):
    """Cis/trans gain and phase after propagating a distance ``x`` (metres)."""
    if np.any(np.asarray(x) < 0):
        raise InvalidParameterError("propagation length must be non-negative")
    cosh, sinc = transfer_terms(coupling.g_squared, x)
    half_dk = 0.5 * coupling.dk
    cis = 1 + sinc**2 * (coupling.g_squared + half_dk**2)
    trans_s = np.abs(coupling.beta_s) ** 2 * sinc**2
    trans_i = np.abs(coupling.beta_i) ** 2 * sinc**2
    phase = np.arctan2(half_dk * sinc, cosh)
    return GainPoint(
        delta=coupling.delta,
        cis_gain=cis,
        trans_gain=trans_s,
        trans_gain_idler=trans_i,
        phase=phase,
        dk_linear=coupling.dk_linear,
        dk_nonlinear=coupling.dk_nonlinear,
        dk=coupling.dk,
    )


def output_amplitudes(coupling, x, a_s_in, a_i_in):
    """Propagate slowly-varying signal/idler amplitudes through length ``x``.

    Exact solution of ``a_s' = i beta_s conj(a_i) exp(i dk x)`` and its
    idler partner, written as
    ``a_s(x) = [sqrt(G_c) e^{-i phi} a_s(0) + i beta_s S conj(a_i(0))] e^{i dk x/2}``
    with ``S = sinh(g x)/g``, so ``|i beta_s S| = sqrt(G_t)``.
    """
    cosh, sinc = transfer_terms(coupling.g_squared, x)
    half_dk = 0.5 * coupling.dk
    diag = cosh - 1j * half_dk * sinc
    carrier = np.exp(1j * half_dk * x)
    a_s = (diag * a_s_in + 1j * coupling.beta_s * sinc * np.conj(a_i_in)) * carrier
    a_i = (diag * a_i_in + 1j * coupling.beta_i * sinc * np.conj(a_s_in)) * carrier
    return a_s, a_i


# -- detuning grid and peak predictors --------------------------------------


def detuning_limit(params, omega_p):
    """Largest ``|delta|`` keeping both signal and idler inside the band."""
    lm.check_in_band(params, omega_p)
    upper = params.plasma_frequency * (1 - lm.BAND_EDGE_GUARD) / omega_p - 1.0
    return min(1.0, upper)


def default_delta_grid(params, pump, points=DEFAULT_GRID_POINTS, guard=DEFAULT_GRID_GUARD):
    limit = detuning_limit(params, pump.frequency) - guard
    if limit <= 0:
        raise OutOfBandError("pump too close to the cutoff to leave any detuning range")
    return np.linspace(-limit, limit, points)


@dataclass(frozen=True)
class PeakDetuning:
    """Detuning of perfect phase matching.

    ``numeric`` is the root of the exact mismatch and is the value to use;
    ``closed_form`` is the small-frequency estimate ``sqrt(rho / (1 - rho))``.
    """

    closed_form: Optional[float]
    numeric: Optional[float]
    diagnostic: str = ""

    @property
    def value(self):
        return self.numeric


def _total_mismatch(params, pump, delta):
    c = phase_coefficients(params, pump, delta)
    return lm.linear_mismatch(params, pump.frequency, delta) + 2 * c.alpha_p - c.alpha_s - c.alpha_i


def peak_detuning(params, pump, scan_points=4001):
    rho = mixing_coefficient(params, pump)
    closed = float(np.sqrt(rho / (1 - rho))) if rho < 1 else None
    limit = detuning_limit(params, pump.frequency) * (1 - 1e-9)
    grid = np.linspace(0.0, limit, scan_points)[1:]
    dk = _total_mismatch(params, pump, grid)
    change = np.nonzero(np.sign(dk[:-1]) * np.sign(dk[1:]) <= 0)[0]
    if change.size == 0:
        sign = "positive" if dk[0] > 0 else "negative"
        return PeakDetuning(closed, None, f"total mismatch stays {sign} over 0 < delta < {limit:.4g}")
    i = change[0]
    if dk[i] == 0:
        return PeakDetuning(closed, float(grid[i]), "")
    root = brentq(
        lambda d: _total_mismatch(params, pump, d), grid[i], grid[i + 1], xtol=1e-15, rtol=1e-15
    )
    return PeakDetuning(closed, float(root), "")


def peak_gain_per_cell(params, pump):
    """Small-``rho`` estimate of ``g a`` at the matched detuning (left-handed)."""
    if not params.is_left:
        raise InvalidParameterError("the peak-gain estimate is derived for left-handed lines")
    _check_pump(params, pump)
    return (params.omega_0 / pump.frequency) ** 3 * pump.current_ratio**2 / 16.0


# -- sweeps -----------------------------------------------------------------


@dataclass
class GainCurve:
    """Gain and mismatch over a grid of detunings.

    Array fields share one shape; entries where ``valid`` is False (tone out
    of band) hold NaN. Rates are per metre.
    """

    delta: np.ndarray
    signal_frequency: np.ndarray
    dk_linear: np.ndarray
    dk_nonlinear: np.ndarray
    dk: np.ndarray
    g: np.ndarray
    cis_gain: np.ndarray
    trans_gain: np.ndarray
    trans_gain_idler: np.ndarray
    phase: np.ndarray
    valid: np.ndarray
    n_cells: int
    cell_pitch: float

    @property
    def cis_gain_db(self):
        with np.errstate(invalid="ignore", divide="ignore"):
            return 10 * np.log10(self.cis_gain)

    @property
    def trans_gain_db(self):
        with np.errstate(invalid="ignore", divide="ignore"):
            return 10 * np.log10(self.trans_gain)

    def peak(self):
        """``(peak cis gain in dB, index)`` over valid points.

        The gain is even in ``delta`` up to rounding, so ties within 1e-9 dB
        go to the largest detuning.
        """
        db = np.where(self.valid, self.cis_gain_db, -np.inf)
        top = np.max(db)
        ties = np.nonzero(db >= top - 1e-9)[0]
        i = int(ties[np.argmax(self.delta[ties])])
        return float(db[i]), i

    @property
    def peak_gain_db(self):
        return self.peak()[0]

    @property
    def peak_delta(self):
        return float(self.delta[self.peak()[1]])


def _empty_curve(delta, n_cells, cell_pitch):
    nan = np.full(delta.shape, np.nan)
    return GainCurve(
        delta=delta,
        signal_frequency=nan.copy(),
        dk_linear=nan.copy(),
        dk_nonlinear=nan.copy(),
        dk=nan.copy(),
        g=nan.astype(complex),
        cis_gain=nan.copy(),
        trans_gain=nan.copy(),
        trans_gain_idler=nan.copy(),
        phase=nan.copy(),
        valid=np.zeros(delta.shape, dtype=bool),
        n_cells=n_cells,
        cell_pitch=cell_pitch,
    )


def fill_curve(curve, mask, coupling, signal_frequency):
    """Write a vectorised coupling set into the ``mask`` entries of ``curve``."""
    point = gain_at_length(coupling, curve.n_cells * curve.cell_pitch)
    curve.signal_frequency[mask] = signal_frequency
    curve.dk_linear[mask] = coupling.dk_linear
    curve.dk_nonlinear[mask] = coupling.dk_nonlinear
    curve.dk[mask] = coupling.dk
    curve.g[mask] = coupling.g
    curve.cis_gain[mask] = point.cis_gain
    curve.trans_gain[mask] = point.trans_gain
    curve.trans_gain_idler[mask] = point.trans_gain_idler
    curve.phase[mask] = point.phase
    curve.valid[mask] = True
    return curve


def gain_sweep(params, pump, n_cells, deltas=None):
    """Stiff-pump gain over a detuning grid for a line of ``n_cells`` cells."""
    _check_pump(params, pump)
    if int(n_cells) != n_cells or n_cells < 1:
        raise InvalidParameterError(f"n_cells must be a positive integer, got {n_cells!r}")
    delta = default_delta_grid(params, pump) if deltas is None else np.asarray(deltas, dtype=float)
    curve = _empty_curve(delta, int(n_cells), params.cell_pitch)
    curve.signal_frequency[:] = pump.frequency * (1 - delta)
    limit = detuning_limit(params, pump.frequency)
    mask = np.abs(delta) < limit
    if np.any(mask):
        d = delta[mask]
        fill_curve(curve, mask, gain_rate(params, pump, d), pump.frequency * (1 - d))
    return curve


# -- phase-matching classification ------------------------------------------


@dataclass(frozen=True)
class Quadrant:
    sign_linear: int
    sign_nonlinear: int
    dk_linear: float
    dk_nonlinear: float

    @property
    def matchable(self):
        """Perfect matching needs the two mismatches to have opposite signs."""
        return self.sign_linear * self.sign_nonlinear < 0

    @property
    def label(self):
        sym = {-1: "<0", 0: "=0", 1: ">0"}
        return f"(dk_L{sym[self.sign_linear]}, dk_NL{sym[self.sign_nonlinear]})"

    @property
    def verdict(self):
        return "matchable" if self.matchable else "unmatchable"


def classify_quadrant(params, pump, delta_probe):
    if delta_probe == 0:
        raise InvalidParameterError("probe detuning must be non-zero")
    dkl = lm.linear_mismatch(params, pump.frequency, delta_probe)
    dknl = nonlinear_mismatch(params, pump, delta_probe)
    return Quadrant(int(np.sign(dkl)), int(np.sign(dknl)), dkl, dknl)


# -- band metrics -----------------------------------------------------------


@dataclass(frozen=True)
class Band:
    low: float
    high: float

    @property
    def width(self):
        return self.high - self.low

    def __contains__(self, value):
        return self.low <= value <= self.high


def _crossing(x0, x1, y0, y1, level):
    if y1 == y0:
        return x0
    return x0 + (level - y0) * (x1 - x0) / (y1 - y0)


def contiguous_bands(x, y, level):
    """Intervals of ``x`` where ``y >= level``, edges linearly interpolated.

    ``x`` must be increasing; NaN entries of ``y`` break a band.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    above = np.nan_to_num(y, nan=-np.inf) >= level
    bands = []
    i, n = 0, len(x)
    while i < n:
        if not above[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and above[j + 1]:
            j += 1
        lo = x[i] if i == 0 or not np.isfinite(y[i - 1]) else _crossing(x[i - 1], x[i], y[i - 1], y[i], level)
        hi = x[j] if j == n - 1 or not np.isfinite(y[j + 1]) else _crossing(x[j], x[j + 1], y[j], y[j + 1], level)
        bands.append(Band(float(lo), float(hi)))
        i = j + 1
    return bands


def widest_band(x, y, level):
    bands = contiguous_bands(x, y, level)
    return max(bands, key=lambda b: b.width) if bands else None


def band_around(x, y, level, index):
    """The contiguous band at ``level`` that contains sample ``index``."""
    for band in contiguous_bands(x, y, level):
        if band.low <= x[index] <= band.high:
            return band
    return None
