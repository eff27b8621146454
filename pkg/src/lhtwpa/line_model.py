"""Linear dispersion of left- and right-handed Josephson transmission lines.

All quantities are SI: henries, farads, metres, amperes and angular
frequencies in rad/s. Functions accept a scalar or an array of frequencies
and return the same shape.

Left-handed cell: series capacitance ``C`` between nodes, junction
(``L_J`` parallel ``C_J``) shunting each node to ground. The right-handed
comparison line swaps the roles (junction in series, ``C`` to ground) and
uses the continuum ladder dispersion ``k a = (w/w0) / sqrt(1 - w^2/wJ^2)``,
an approximation valid for ``k a`` of order one or below.
"""

from dataclasses import dataclass
from enum import Enum
from math import comb

import mpmath
import numpy as np
from scipy import constants

from .errors import InvalidParameterError, NumericFailure, OutOfBandError

#: Reduced flux quantum hbar / 2e, in webers.
PHI0_REDUCED = constants.hbar / (2 * constants.e)

#: Frequencies closer than this fraction of the plasma frequency to the
#: cutoff are rejected; velocities and D_m are singular there.
BAND_EDGE_GUARD = 1e-6

MAX_DISPERSION_ORDER = 8


class Handedness(str, Enum):
    LEFT = "left"
    RIGHT = "right"


@dataclass(frozen=True)
class LineParameters:
    """Unit-cell circuit of a Josephson transmission line.

    ``critical_current`` defaults to ``PHI0_REDUCED / junction_inductance``
    when omitted.
    """

    junction_inductance: float
    junction_capacitance: float
    capacitance: float
    cell_pitch: float
    critical_current: float = None
    handedness: Handedness = Handedness.LEFT

    def __post_init__(self):
        object.__setattr__(self, "handedness", Handedness(self.handedness))
        if self.critical_current is None and _positive(self.junction_inductance):
            object.__setattr__(
                self, "critical_current", PHI0_REDUCED / self.junction_inductance
            )
        for name in (
            "junction_inductance",
            "junction_capacitance",
            "capacitance",
            "cell_pitch",
            "critical_current",
        ):
            value = getattr(self, name)
            if not _positive(value):
                raise InvalidParameterError(f"{name} must be positive and finite, got {value!r}")

    @classmethod
    def from_engineering(cls, l_j_pH, c_j_fF, c_fF, a_um, handedness="left", i0_uA=None):
        """Build from pH / fF / um / uA values."""
        return cls(
            junction_inductance=l_j_pH * 1e-12,
            junction_capacitance=c_j_fF * 1e-15,
            capacitance=c_fF * 1e-15,
            cell_pitch=a_um * 1e-6,
            critical_current=None if i0_uA is None else i0_uA * 1e-6,
            handedness=handedness,
        )

    @property
    def plasma_frequency(self):
        return 1.0 / np.sqrt(self.junction_inductance * self.junction_capacitance)

    @property
    def omega_0(self):
        return 1.0 / np.sqrt(self.junction_inductance * self.capacitance)

    @property
    def impedance(self):
        return np.sqrt(self.junction_inductance / self.capacitance)

    @property
    def is_left(self):
        return self.handedness is Handedness.LEFT


def _positive(value):
    try:
        return bool(np.isfinite(value) and value > 0)
    except TypeError:
        return False


@dataclass(frozen=True)
class DispersionSample:
    frequency: float
    wavevector: float
    wave_velocity: float
    group_velocity: float


def derived_constants(params):
    """Return ``(omega_J, omega_0, Z_c)`` for a line."""
    return params.plasma_frequency, params.omega_0, params.impedance


def _scalar_or_array(values, like):
    if np.ndim(like) == 0:
        return float(values)
    return values


def check_in_band(params, omega):
    """Raise unless every frequency lies strictly inside (0, omega_J)."""
    w = np.asarray(omega, dtype=float)
    if not np.all(np.isfinite(w)):
        raise InvalidParameterError("frequency must be finite")
    if np.any(w <= 0):
        raise InvalidParameterError(f"frequency must be positive, got min {w.min():.6g} rad/s")
    cutoff = params.plasma_frequency * (1.0 - BAND_EDGE_GUARD)
    if np.any(w >= cutoff):
        raise OutOfBandError(
            f"frequency {w.max() / (2 * np.pi):.6g} Hz is at or above the cutoff "
            f"{params.plasma_frequency / (2 * np.pi):.6g} Hz"
        )
    return w


def wavevector(params, omega):
    """Continuum wavevector k(omega) in rad/m."""
    w = check_in_band(params, omega)
    wj, w0 = params.plasma_frequency, params.omega_0
    root = np.sqrt(1.0 - (w / wj) ** 2)
    if params.is_left:
        k = w0 * root / (params.cell_pitch * w)
    else:
        k = w / (params.cell_pitch * w0 * root)
    return _scalar_or_array(k, omega)


def velocities(params, omega):
    """Return ``(v_w, v_g)``, the phase (wave) and group velocities.

    For a left-handed line ``v_g = -v_w (1 - w^2/wJ^2)``.
    """
    w = check_in_band(params, omega)
    a = params.cell_pitch
    wj, w0 = params.plasma_frequency, params.omega_0
    one_minus = 1.0 - (w / wj) ** 2
    if params.is_left:
        v_w = a * w**2 / (w0 * np.sqrt(one_minus))
        v_g = -a * w**2 * np.sqrt(one_minus) / w0
    else:
        v_w = a * w0 * np.sqrt(one_minus)
        v_g = a * w0 * one_minus**1.5
    return _scalar_or_array(v_w, omega), _scalar_or_array(v_g, omega)


def group_velocity(params, omega):
    return velocities(params, omega)[1]


def dispersion_sample(params, omega):
    omega = float(omega)
    v_w, v_g = velocities(params, omega)
    return DispersionSample(omega, wavevector(params, omega), v_w, v_g)


# -- dispersion derivatives -------------------------------------------------


def _normalized_k(params):
    """k as ``scale * f(y)`` with ``y = omega / omega_J``; ``f`` works on mpf."""
    wj, w0, a = params.plasma_frequency, params.omega_0, params.cell_pitch
    if params.is_left:
        return w0 / (a * wj), lambda y: mpmath.sqrt(1 - y * y) / y
    return wj / (a * w0), lambda y: y / mpmath.sqrt(1 - y * y)


def _analytic_derivative(params, omega, m):
    w = np.asarray(omega, dtype=float)
    a = params.cell_pitch
    wj, w0 = params.plasma_frequency, params.omega_0
    one_minus = 1.0 - (w / wj) ** 2
    if params.is_left:
        # k = (w0/a) sqrt(s), s = 1/w^2 - 1/wJ^2
        s = 1.0 / w**2 - 1.0 / wj**2
        if m == 1:
            return -(w0 / a) / (w**3 * np.sqrt(s))
        return (w0 / a) * (3.0 / (w**4 * np.sqrt(s)) - 1.0 / (w**6 * s**1.5))
    if m == 1:
        return one_minus**-1.5 / (a * w0)
    return 3.0 * w / (wj**2 * a * w0) * one_minus**-2.5


def _central_difference(f, y, h, m):
    total = mpmath.mpf(0)
    for j in range(m + 1):
        total += (-1) ** j * comb(m, j) * f(y + (mpmath.mpf(m) / 2 - j) * h)
    return total / h**m


def _richardson_derivative(f, y, m, reach, rtol, max_levels=14):
    """m-th derivative of ``f`` at ``y`` by extrapolated central differences.

    The stencil is evaluated in extended precision, so the extrapolation is
    limited by truncation error only. ``reach`` bounds the stencil
    half-width to keep it inside the region of analyticity. Returns
    ``(value, error_estimate)`` as floats.
    """
    with mpmath.workdps(30 + 3 * m):
        y = mpmath.mpf(y)
        h = 2 * mpmath.mpf(reach) / m
        table = []
        best, best_err = None, mpmath.inf
        for i in range(max_levels):
            row = [_central_difference(f, y, h, m)]
            for j in range(1, i + 1):
                row.append(row[j - 1] + (row[j - 1] - table[i - 1][j - 1]) / (4**j - 1))
                err = max(abs(row[j] - row[j - 1]), abs(row[j] - table[i - 1][j - 1]))
                if err <= best_err:
                    best, best_err = row[j], err
            table.append(row)
            if best is not None and best_err <= rtol * abs(best) * 1e-3:
                break
            h /= 2
        if best is None or best_err > rtol * abs(best):
            raise NumericFailure(
                f"derivative of order {m} did not converge "
                f"(error estimate {float(best_err):.3g}, value {best})"
            )
        return float(best), float(best_err)


def dispersion_derivative(params, omega, m, method="auto", rtol=1e-9):
    """Dispersion parameter ``D_m = d^m k / d omega^m`` (units rad/m per (rad/s)^m).

    Orders 1 and 2 use closed forms unless ``method="fd"``; higher orders
    always use Richardson-extrapolated central differences.
    """
    if int(m) != m or not 1 <= m <= MAX_DISPERSION_ORDER:
        raise InvalidParameterError(f"order must be an integer in [1, {MAX_DISPERSION_ORDER}], got {m!r}")
    m = int(m)
    if method not in ("auto", "fd"):
        raise InvalidParameterError(f"unknown method {method!r}")
    w = check_in_band(params, omega)
    if method == "auto" and m <= 2:
        return _scalar_or_array(_analytic_derivative(params, w, m), omega)

    scale, f = _normalized_k(params)
    wj = params.plasma_frequency
    out = np.empty(w.shape)
    for idx, wi in np.ndenumerate(w):
        y = wi / wj
        # keep the stencil within a quarter of the distance to the nearest
        # singularity (pole at 0, branch point at 1)
        reach = 0.25 * min(y, 1.0 - y)
        value, _ = _richardson_derivative(f, y, m, reach, rtol)
        out[idx] = scale * value / wj**m
    return _scalar_or_array(out, omega)


def zero_dispersion_frequency(params, rtol=1e-9):
    """Frequency where D_2 changes sign, or ``None`` for a right-handed line.

    Located by bisection on the sign of the closed-form D_2 and checked
    against ``sqrt(2/3) * omega_J``.
    """
    if not params.is_left:
        return None
    wj = params.plasma_frequency
    lo, hi = 1e-3 * wj, wj * (1.0 - 2 * BAND_EDGE_GUARD)
    d_lo = _analytic_derivative(params, lo, 2)
    d_hi = _analytic_derivative(params, hi, 2)
    if not (d_lo > 0 > d_hi):
        raise NumericFailure("D_2 root is not bracketed on the band")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if _analytic_derivative(params, mid, 2) > 0:
            lo = mid
        else:
            hi = mid
    root = 0.5 * (lo + hi)
    expected = np.sqrt(2.0 / 3.0) * wj
    if abs(root - expected) > rtol * expected:
        raise NumericFailure(
            f"D_2 root {root:.12g} disagrees with sqrt(2/3) wJ = {expected:.12g}"
        )
    return root


def tone_pair(omega_p, delta):
    """Signal and idler frequencies ``omega_p (1 -/+ delta)``."""
    delta = np.asarray(delta, dtype=float)
    if np.any(np.abs(delta) >= 1):
        raise InvalidParameterError("detuning must satisfy -1 < delta < 1")
    return omega_p * (1.0 - delta), omega_p * (1.0 + delta)


def linear_mismatch(params, omega_p, delta, approximate=False):
    """Linear wave-vector mismatch ``2 k_p - k_s - k_i`` in rad/m.

    With ``approximate=True`` returns the left-handed small-frequency form
    ``-(2 w0 / (a w_p)) delta^2 / (1 - delta^2)``.
    """
    omega_s, omega_i = tone_pair(omega_p, delta)
    check_in_band(params, omega_p)
    check_in_band(params, omega_s)
    check_in_band(params, omega_i)
    if approximate:
        if not params.is_left:
            raise InvalidParameterError("the small-frequency form is defined for left-handed lines")
        d2 = np.asarray(delta, dtype=float) ** 2
        value = -2.0 * params.omega_0 / (params.cell_pitch * omega_p) * d2 / (1.0 - d2)
        return _scalar_or_array(value, delta)
    value = 2.0 * wavevector(params, omega_p) - wavevector(params, omega_s) - wavevector(params, omega_i)
    return _scalar_or_array(value, delta)
