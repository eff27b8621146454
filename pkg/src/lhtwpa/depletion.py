"""Four-tone coupled-mode propagation with pump depletion.

Tones 0 and 1 are pumps, tones 2 and 3 are the generated pair; in the
degenerate amplifier both pumps sit at ``w_p``, tone 2 is the idler at
``w_p (1 + delta)`` and tone 3 the signal at ``w_p (1 - delta)``.

Amplitudes are node-flux amplitudes in webers. The pump self- and
cross-phase terms are scaled by 2/3 (see :data:`PUMP_PHASE_CORRECTION`),
which makes the small-signal limit of this system coincide with the
stiff-pump rates of :mod:`lhtwpa.mixing` exactly; no further calibration
constant is needed.
"""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from . import line_model as lm
from . import mixing
from .errors import InvalidConfigurationError, InvalidParameterError, NumericFailure
from .kernels import STATUS_MAX_STEPS, STATUS_OK, dp45_fwm
from .kernels.fwm import tableau

log = logging.getLogger(__name__)

PUMP_PHASE_CORRECTION = 2.0 / 3.0
ENERGY_RTOL = 1e-9


@dataclass
class FourToneState:
    """Complex tone amplitudes (Wb) at position ``x`` (m)."""

    amplitudes: np.ndarray
    x: float = 0.0

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex).reshape(4)

    @property
    def powers(self):
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class IntegrationSettings:
    """Adaptive step control.

    ``atol`` is in webers. When left as ``None`` it is set to ``rtol * 1e-3``
    times the smallest non-zero input amplitude, because node-flux
    amplitudes are of order 1e-16 Wb and any fixed absolute floor would
    swamp the signal.
    """

    rtol: float = 1e-9
    atol: Optional[float] = None
    max_steps: int = 100_000

    def __post_init__(self):
        if not 0 < self.rtol < 1:
            raise InvalidParameterError(f"rtol must be in (0, 1), got {self.rtol!r}")
        if self.atol is not None and not self.atol > 0:
            raise InvalidParameterError(f"atol must be positive, got {self.atol!r}")
        if int(self.max_steps) != self.max_steps or self.max_steps < 1:
            raise InvalidParameterError("max_steps must be a positive integer")


@dataclass(frozen=True)
class FWMCoefficients:
    """Coupling coefficients of the four-tone system (SI units, per metre)."""

    frequencies: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    dk_linear: float

    def effective_alpha(self, correction=PUMP_PHASE_CORRECTION):
        a = np.array(self.alpha, dtype=float)
        a[:2, :2] *= correction
        return a


@dataclass
class Trajectory:
    x: np.ndarray
    amplitudes: np.ndarray
    n_accepted: int
    n_rejected: int
    complete: bool = True


def input_amplitude(params, omega, current):
    """Node-flux amplitude of a travelling wave carrying current ``current``.

    Left-handed lines: ``I Z_c / (sqrt(2) w)``. Right-handed lines use the
    junction flux ``I L_J / sqrt(2)``, matching the mixing coefficient of
    :func:`lhtwpa.mixing.mixing_coefficient`.
    """
    if params.is_left:
        return current * params.impedance / (np.sqrt(2.0) * omega)
    return current * params.junction_inductance / np.sqrt(2.0)


def depletion_coefficients(params, frequencies, rtol=ENERGY_RTOL):
    """Raw coefficients ``alpha_mn`` and ``beta_m`` for tones at ``frequencies``.

    ``alpha_mn = w_m (2 - delta_mn) / (16 I0^2 L_J^2 v_g,m)`` and
    ``beta_m = w_m / (8 I0^2 L_J^2 v_g,m)``, so ``alpha_mm / beta_m = 1/2``.
    """
    w = np.asarray(frequencies, dtype=float).reshape(4)
    if abs(w[0] + w[1] - w[2] - w[3]) > rtol * (w[0] + w[1]):
        raise InvalidConfigurationError(
            "tone frequencies violate energy conservation: w0 + w1 != w2 + w3"
        )
    for omega in w:
        lm.check_in_band(params, omega)
    vg = lm.group_velocity(params, w)
    scale = 16.0 * params.critical_current**2 * params.junction_inductance**2
    q = w / vg
    alpha = np.array([[q[m] * (2.0 - (m == n)) for n in range(4)] for m in range(4)]) / scale
    beta = 2.0 * q / scale
    k = lm.wavevector(params, w)
    dk = float(k[0] + k[1] - k[2] - k[3])
    return FWMCoefficients(frequencies=w, alpha=alpha, beta=beta, dk_linear=dk)


def fwm_rhs(state, coefficients, correction=PUMP_PHASE_CORRECTION):
    """Derivative ``dA/dx`` of the four-tone system (reference implementation)."""
    a = state.amplitudes
    alpha = coefficients.effective_alpha(correction)
    beta = coefficients.beta
    spm = alpha @ (np.abs(a) ** 2)
    ph = np.exp(1j * coefficients.dk_linear * state.x)
    return 1j * np.array(
        [
            beta[0] * np.conj(a[1]) * a[2] * a[3] / ph,
            beta[1] * np.conj(a[0]) * a[2] * a[3] / ph,
            beta[2] * a[0] * a[1] * np.conj(a[3]) * ph,
            beta[3] * a[0] * a[1] * np.conj(a[2]) * ph,
        ]
    ) + 1j * a * spm


def conserved_quantities(coefficients, amplitudes):
    """Manley-Rowe style invariants of the lossless system.

    Returns ``(pump_total, tone2 - tone3)`` built from ``|A_m|^2 / beta_m``;
    both stay constant along the line.
    """
    p = np.abs(np.atleast_2d(amplitudes)) ** 2 / coefficients.beta
    return p[:, 0] + p[:, 1] + p[:, 2] + p[:, 3], p[:, 2] - p[:, 3]


def propagate(coefficients, state0, length, settings=None, samples=None,
              correction=PUMP_PHASE_CORRECTION):
    """Integrate the four-tone system from ``state0.x`` over ``length`` metres.

    ``samples`` are positions relative to the start; by default only the
    end point is returned. Raises :class:`NumericFailure` carrying the
    partial :class:`Trajectory` if the step budget runs out.
    """
    settings = settings or IntegrationSettings()
    if not length >= 0:
        raise InvalidParameterError("length must be non-negative")
    y0 = np.asarray(state0.amplitudes, dtype=complex)
    xs = np.array([length] if samples is None else samples, dtype=float)
    if np.any(np.diff(xs) < 0) or np.any(xs < 0) or np.any(xs > length):
        raise InvalidParameterError("sample positions must be sorted and inside [0, length]")
    scale = np.max(np.abs(y0))
    if scale == 0 or length == 0:
        return Trajectory(xs, np.tile(y0, (len(xs), 1)), 0, 0)
    nonzero = np.abs(y0[y0 != 0])
    atol = settings.atol if settings.atol is not None else settings.rtol * 1e-3 * nonzero.min()
    # integrate in units of the largest input amplitude
    alpha = coefficients.effective_alpha(correction) * scale**2
    beta = coefficients.beta * scale**2
    phase0 = coefficients.dk_linear * state0.x
    y0n = y0 / scale
    rate = np.max(np.abs(alpha)) + np.max(np.abs(beta)) + abs(coefficients.dk_linear)
    h0 = min(length, 0.05 / rate) if rate > 0 else length
    c, a, e, p = tableau()
    out, _, x_end, n_acc, n_rej, status = dp45_fwm(
        _shift_phase(y0n, phase0), alpha, beta, float(coefficients.dk_linear), float(length), xs,
        float(settings.rtol), float(atol / scale), int(settings.max_steps), float(h0), c, a, e, p,
    )
    amps = _unshift_phase(out, phase0) * scale
    traj = Trajectory(xs + state0.x, amps, int(n_acc), int(n_rej), status == STATUS_OK)
    if status != STATUS_OK:
        why = "step budget exhausted" if status == STATUS_MAX_STEPS else "step size underflow"
        raise NumericFailure(
            f"four-tone integration stopped at x = {x_end:.6g} m of {length:.6g} m ({why})",
            partial=traj,
        )
    return traj


def _shift_phase(y, phase):
    # A_2, A_3 absorb exp(i dk x0) so the kernel can start at x = 0
    y = y.copy()
    if phase:
        y[2] *= np.exp(-0.5j * phase)
        y[3] *= np.exp(-0.5j * phase)
    return y


def _unshift_phase(out, phase):
    out = out.copy()
    if phase:
        out[:, 2] *= np.exp(0.5j * phase)
        out[:, 3] *= np.exp(0.5j * phase)
    return out


# -- degenerate amplifier ---------------------------------------------------


def degenerate_problem(params, pump, delta):
    """Coefficients and pump amplitude for the degenerate amplifier at ``delta``."""
    omega_s, omega_i = lm.tone_pair(pump.frequency, delta)
    w = [pump.frequency, pump.frequency, float(omega_i), float(omega_s)]
    coeffs = depletion_coefficients(params, w)
    current = pump.current_ratio * params.critical_current
    return coeffs, input_amplitude(params, pump.frequency, current)


def gain_with_depletion(params, pump, delta, n_cells, input_ratio, settings=None):
    """Signal gain in dB for a signal of amplitude ``input_ratio * A_p``."""
    if not input_ratio > 0:
        raise InvalidParameterError("input ratio must be positive")
    coeffs, a_p = degenerate_problem(params, pump, delta)
    if a_p == 0:
        return 0.0
    a_s = input_ratio * a_p
    state = FourToneState([a_p, a_p, 0.0, a_s])
    traj = propagate(coeffs, state, n_cells * params.cell_pitch, settings)
    return float(10 * np.log10(np.abs(traj.amplitudes[-1, 3]) ** 2 / a_s**2))


@dataclass(frozen=True)
class CompressionPoint:
    input_ratio: float
    small_signal_gain_db: float
    gain_db: float

    @property
    def compression_db(self):
        return self.small_signal_gain_db - self.gain_db


@dataclass
class CompressionResult:
    delta: float
    small_signal_gain_db: float
    points: list = field(default_factory=list)
    one_db_ratio: Optional[float] = None
    diagnostic: str = ""


SMALL_SIGNAL_RATIO = 1e-6


def default_ratio_grid(points=41, low=1e-4, high=0.5):
    return np.logspace(np.log10(low), np.log10(high), points)


def thread_count(threads=None):
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("LHTWPA_THREADS")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def compression_analysis(params, pump, n_cells, ratios=None, delta=None, settings=None,
                         threads=None):
    """Gain against input level and the 1-dB compression point.

    ``delta`` defaults to the numeric phase-matching detuning. Grid points
    run concurrently; results keep grid order and are identical for any
    thread count. The 1-dB point is located by bracketing on the grid and
    refining with Brent's method.
    """
    if delta is None:
        peak = mixing.peak_detuning(params, pump)
        delta = peak.numeric if peak.numeric is not None else peak.closed_form
        if delta is None:
            raise NumericFailure(f"no phase-matching detuning to probe: {peak.diagnostic}")
    ratios = default_ratio_grid() if ratios is None else np.asarray(ratios, dtype=float)
    if np.any(ratios <= 0) or np.any(np.diff(ratios) <= 0):
        raise InvalidParameterError("input ratios must be positive and increasing")

    def run(r):
        return gain_with_depletion(params, pump, delta, n_cells, r, settings)

    with ThreadPoolExecutor(max_workers=thread_count(threads)) as pool:
        gains = list(pool.map(run, [SMALL_SIGNAL_RATIO, *ratios]))
    g0 = gains[0]
    result = CompressionResult(delta=float(delta), small_signal_gain_db=g0)
    result.points = [CompressionPoint(float(r), g0, g) for r, g in zip(ratios, gains[1:])]
    target = g0 - 1.0
    below = [i for i, p in enumerate(result.points) if p.gain_db < target]
    if not below:
        result.diagnostic = (
            f"gain never drops 1 dB below {g0:.3f} dB for input ratios up to {ratios[-1]:.3g}"
        )
        return result
    i = below[0]
    if i == 0:
        result.diagnostic = f"already compressed at the smallest input ratio {ratios[0]:.3g}"
        return result
    result.one_db_ratio = float(
        brentq(lambda r: run(r) - target, ratios[i - 1], ratios[i], xtol=1e-12, rtol=1e-8)
    )
    log.debug("1-dB point at A_s/A_p = %.6g (small-signal %.3f dB)", result.one_db_ratio, g0)
    return result
