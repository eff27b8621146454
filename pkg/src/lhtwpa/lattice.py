"""Time-domain simulation of the discrete left-handed junction lattice.

Node ``n`` carries flux ``phi_n`` with junction current
``phi/L_J - phi^3 / (6 I0^2 L_J^3)`` to ground and series capacitors ``C``
to its neighbours. A Norton source (current source in parallel with the
termination resistor) drives node 0 and a resistor loads the last node.
Nothing here uses coupled-mode theory, so the results independently check
the dispersion relation and the small-signal gain.

Phasors follow ``phi_n(t) = Re(Phi_n exp(-i w t))``; a wave carrying energy
towards larger ``n`` on a left-handed line has ``Phi_n ~ exp(-i k n)``.
"""

import csv
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Optional, Sequence

import numpy as np

from . import line_model as lm
from .errors import InvalidConfigurationError, InvalidParameterError, NumericFailure
from .kernels import STATUS_NEWTON, STATUS_OK, STATUS_UNSTABLE, lattice_run

log = logging.getLogger(__name__)

TWO_PI = 2 * np.pi
MIN_MEASURE_CELLS = 8
DT_FRACTION = 0.05
COMMENSURATE_TOL = 1e-6


@dataclass(frozen=True)
class DriveTone:
    """Source current ``amplitude * cos(frequency t + phase)`` (A, rad/s)."""

    frequency: float
    amplitude: float
    phase: float = 0.0


@dataclass
class LatticeConfig:
    """Lattice geometry with its drive and time grid.

    Terminations are resistances in ohms; ``None`` leaves the end open.
    ``record_window`` must hold an integer number of periods of every drive
    tone and of ``dt``; the last two windows of the run are recorded.
    """

    params: lm.LineParameters
    n_cells: int
    tones: Sequence[DriveTone]
    dt: float
    total_time: float
    record_window: float
    termination_left: Optional[float] = None
    termination_right: Optional[float] = None
    ramp_time: float = 0.0
    initial_flux: Optional[np.ndarray] = None
    initial_velocity: Optional[np.ndarray] = None
    newton_tol: float = 1e-12
    max_newton: int = 50

    def __post_init__(self):
        if not self.params.is_left:
            raise InvalidParameterError("the lattice oracle models the left-handed cell only")
        if int(self.n_cells) != self.n_cells or self.n_cells < 1:
            raise InvalidConfigurationError(f"n_cells must be a positive integer, got {self.n_cells!r}")
        self.n_cells = int(self.n_cells)
        self.tones = tuple(self.tones)
        for r in (self.termination_left, self.termination_right):
            if r is not None and not r > 0:
                raise InvalidConfigurationError(f"termination resistance must be positive, got {r!r}")
        f_max = max([self.params.plasma_frequency] + [t.frequency for t in self.tones]) / TWO_PI
        if not 0 < self.dt < DT_FRACTION / f_max:
            raise InvalidConfigurationError(
                f"timestep {self.dt:.3g} s must be below {DT_FRACTION}/f_max = {DT_FRACTION / f_max:.3g} s"
            )
        if not 0 < 2 * self.record_window <= self.total_time * (1 + 1e-12):
            raise InvalidConfigurationError("record window must be positive and at most half the total time")
        if not _is_integer(self.record_window / self.dt):
            raise InvalidConfigurationError("record window must be an integer number of timesteps")
        for t in self.tones:
            if not _is_integer(self.record_window * t.frequency / TWO_PI):
                raise InvalidConfigurationError(
                    f"record window is not an integer number of periods of {t.frequency / TWO_PI / 1e9:.6g} GHz"
                )
        for name in ("initial_flux", "initial_velocity"):
            value = getattr(self, name)
            if value is not None:
                value = np.asarray(value, dtype=float)
                if value.shape != (self.n_cells,):
                    raise InvalidConfigurationError(f"{name} must have shape ({self.n_cells},)")
                setattr(self, name, value)

    @property
    def n_steps(self):
        return int(round(self.total_time / self.dt))

    @property
    def window_steps(self):
        return int(round(self.record_window / self.dt))


def _is_integer(x, tol=COMMENSURATE_TOL):
    return abs(x - round(x)) <= tol * max(1.0, abs(x))


def commensurate_window(frequencies, min_window, dt_max, max_window=1e-6):
    """Shortest window >= ``min_window`` holding whole periods of every tone.

    Frequencies are in rad/s and are rationalised to 1 mHz. Returns
    ``(window, dt)`` with ``dt <= dt_max`` dividing the window exactly.
    """
    hz = [Fraction(float(w) / TWO_PI).limit_denominator(1000) for w in frequencies]
    lcm_den = reduce(lambda a, b: a * b // math.gcd(a, b), [f.denominator for f in hz], 1)
    base = Fraction(reduce(math.gcd, [int(f * lcm_den) for f in hz]), lcm_den)
    period = 1.0 / float(base)
    if period > max_window:
        raise InvalidConfigurationError(
            f"tones share no common period below {max_window:.3g} s; choose commensurate frequencies"
        )
    window = period * max(1, math.ceil(min_window / period - 1e-9))
    steps = math.ceil(window / dt_max)
    return window, window / steps


@dataclass
class LatticeSystem:
    """Tridiagonal mass matrix plus the termination and junction constants."""

    mass_diag: np.ndarray
    mass_off: np.ndarray
    conductance: np.ndarray
    inv_lj: float
    cubic: float

    @property
    def n(self):
        return self.mass_diag.shape[0]

    def mass_matrix(self):
        m = np.diag(self.mass_diag)
        if self.n > 1:
            m += np.diag(self.mass_off, 1) + np.diag(self.mass_off, -1)
        return m

    def force(self, phi):
        """Junction restoring current ``-phi/L_J + phi^3/(6 I0^2 L_J^3)``."""
        return -self.inv_lj * phi + 4.0 * self.cubic * phi**3

    def energy(self, phi, v):
        kinetic = 0.5 * v @ (self.mass_matrix() @ v)
        potential = np.sum(0.5 * self.inv_lj * phi**2 - self.cubic * phi**4)
        return kinetic + potential


def assemble_lattice(config):
    p = config.params
    n = config.n_cells
    c = p.capacitance
    diag = np.full(n, p.junction_capacitance + 2 * c)
    diag[0] -= c
    diag[-1] -= c
    if n == 1:
        diag[0] = p.junction_capacitance
    off = np.full(n - 1, -c)
    cond = np.zeros(n)
    if config.termination_left is not None:
        cond[0] += 1.0 / config.termination_left
    if config.termination_right is not None:
        cond[-1] += 1.0 / config.termination_right
    system = LatticeSystem(
        mass_diag=diag,
        mass_off=off,
        conductance=cond,
        inv_lj=1.0 / p.junction_inductance,
        cubic=1.0 / (24.0 * p.critical_current**2 * p.junction_inductance**3),
    )
    # diagonally dominant with positive diagonal, hence SPD
    margin = diag - np.abs(np.concatenate([off, [0.0]])) - np.abs(np.concatenate([[0.0], off]))
    if not np.all(margin > 0):
        raise NumericFailure("assembled mass matrix is not positive definite")
    return system


@dataclass
class TimeTrace:
    times: np.ndarray
    flux: np.ndarray
    velocity: np.ndarray
    dt: float
    final_flux: np.ndarray = field(repr=False, default=None)
    final_velocity: np.ndarray = field(repr=False, default=None)


def simulate(config):
    """Integrate the lattice and return the last two record windows."""
    system = assemble_lattice(config)
    n = config.n_cells
    n_steps = config.n_steps
    n_rec = min(2 * config.window_steps, n_steps)
    phi0 = np.zeros(n) if config.initial_flux is None else config.initial_flux.copy()
    v0 = np.zeros(n) if config.initial_velocity is None else config.initial_velocity.copy()
    freqs = np.array([t.frequency for t in config.tones], dtype=float)
    amps = np.array([t.amplitude for t in config.tones], dtype=float)
    phases = np.array([t.phase for t in config.tones], dtype=float)
    flux_limit = 10.0 * config.params.junction_inductance * config.params.critical_current
    rec_phi, rec_v, phi, v, status, done = lattice_run(
        phi0, v0, system.mass_diag, system.mass_off, system.conductance, system.inv_lj, system.cubic,
        freqs, amps, phases, float(config.ramp_time), float(config.dt), int(n_steps),
        int(n_steps - n_rec), float(config.newton_tol), int(config.max_newton), float(flux_limit),
    )
    if status == STATUS_UNSTABLE:
        raise NumericFailure(
            f"lattice flux exceeded 10 L_J I_0 at step {done} (t = {done * config.dt:.4g} s); "
            "reduce the drive or the timestep"
        )
    if status == STATUS_NEWTON:
        raise NumericFailure(f"implicit step failed to converge at step {done}")
    assert status == STATUS_OK
    times = np.arange(n_steps - n_rec, n_steps) * config.dt
    if not (np.all(np.isfinite(rec_phi)) and np.all(np.isfinite(rec_v))):
        raise NumericFailure("non-finite values in the recorded trace")
    return TimeTrace(times, rec_phi, rec_v, config.dt, phi, v)


def extract_tone(trace, omega, nodes=None, discard_fraction=0.5):
    """Complex amplitude ``Phi_n`` at ``omega`` for each node.

    The first ``discard_fraction`` of the trace is dropped as transient and
    the rest must span whole periods of ``omega``.
    """
    start = int(round(discard_fraction * len(trace.times)))
    t = trace.times[start:]
    if len(t) < 2:
        raise InvalidConfigurationError("trace too short to extract a tone")
    span = len(t) * trace.dt
    if not _is_integer(span * omega / TWO_PI):
        raise InvalidConfigurationError(
            f"analysis window of {span:.6g} s is not commensurate with {omega / TWO_PI / 1e9:.6g} GHz"
        )
    flux = trace.flux[start:]
    if nodes is not None:
        flux = flux[:, nodes]
    kernel = np.exp(1j * omega * t)
    return (2.0 / len(t)) * (kernel @ flux)


# -- wave analysis ----------------------------------------------------------


@dataclass(frozen=True)
class WaveFit:
    """Standing-wave decomposition ``Phi_n = F e^{-i k n} + B e^{i k n}`` over a node window."""

    k_per_cell: float
    forward: complex
    backward: complex
    residual: float

    @property
    def reflection(self):
        return abs(self.backward) / abs(self.forward) if self.forward else np.inf


def fit_waves(phasors, nodes):
    """Recurrence estimate of ``k`` and least-squares forward/backward amplitudes.

    On a uniform linear lattice ``Phi_{n+1} + Phi_{n-1} = 2 cos(k) Phi_n``
    for any superposition of the two counter-propagating waves.
    """
    phasors = np.asarray(phasors)
    nodes = np.asarray(nodes)
    mid = phasors[1:-1]
    cos_k = np.real(np.vdot(mid, phasors[2:] + phasors[:-2])) / (2 * np.real(np.vdot(mid, mid)))
    k = float(np.arccos(np.clip(cos_k, -1.0, 1.0)))
    basis = np.column_stack([np.exp(-1j * k * nodes), np.exp(1j * k * nodes)])
    (fwd, bwd), *_ = np.linalg.lstsq(basis, phasors, rcond=None)
    resid = np.linalg.norm(basis @ np.array([fwd, bwd]) - phasors) / np.linalg.norm(phasors)
    return WaveFit(k, complex(fwd), complex(bwd), float(resid))


def phase_slope(phasors, nodes):
    """Least-squares slope (rad/cell) of the unwrapped phase, and its R^2."""
    phase = np.unwrap(np.angle(phasors))
    slope, intercept = np.polyfit(nodes, phase, 1)
    fitted = slope * nodes + intercept
    ss_res = np.sum((phase - fitted) ** 2)
    ss_tot = np.sum((phase - phase.mean()) ** 2)
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return float(slope), float(r2)


def power_flow(params, omega, phasors):
    """Time-averaged power through each series capacitor, positive towards larger n."""
    p = np.asarray(phasors)
    return 0.5 * omega**3 * params.capacitance * np.imag(p[:-1] * np.conj(p[1:]))


def discrete_wavevector(params, omega):
    """Exact phase per cell of the linear lattice, ``2 asin(k_cont a / 2)``."""
    ka = lm.wavevector(params, omega) * params.cell_pitch
    return 2.0 * np.arcsin(np.clip(ka / 2.0, -1.0, 1.0))


def transit_time(params, omega, n_cells):
    return n_cells * params.cell_pitch / abs(lm.group_velocity(params, omega))


def _edge_windows(n):
    if n < MIN_MEASURE_CELLS:
        raise InvalidConfigurationError(f"measurements need at least {MIN_MEASURE_CELLS} cells, got {n}")
    edge = 1 if n < 40 else 3
    width = min(12, n // 2 - edge)
    return np.arange(edge, edge + width), np.arange(n - edge - width, n - edge)


def driven_config(params, n_cells, tones, settle_transits=4.0, ramp_periods=10.0,
                  dt_target=0.25e-12, min_window=2e-9):
    """Matched-termination configuration driven by ``tones`` with a commensurate window."""
    freqs = [t.frequency for t in tones]
    f_max = max([params.plasma_frequency] + freqs) / TWO_PI
    window, dt = commensurate_window(freqs, min_window, min(dt_target, 0.5 * DT_FRACTION / f_max))
    ramp = ramp_periods * TWO_PI / min(freqs)
    settle = ramp + settle_transits * max(transit_time(params, w, n_cells) for w in freqs)
    n_windows = math.ceil(settle / window) + 2
    return LatticeConfig(
        params=params,
        n_cells=n_cells,
        tones=tones,
        dt=dt,
        total_time=n_windows * window,
        record_window=window,
        termination_left=params.impedance,
        termination_right=params.impedance,
        ramp_time=ramp,
    )


@dataclass(frozen=True)
class DispersionMeasurement:
    """Phase per cell measured on a driven linear lattice.

    ``phase_slope`` is the signed phase advance per cell; ``k_slope`` its
    magnitude. ``power_sign`` is the sign of the mean power flow (+1 towards
    the load), so left-handedness shows as ``phase_slope * power_sign < 0``.
    """

    omega: float
    phase_slope: float
    r_squared: float
    k_recurrence: float
    k_continuum: float
    k_discrete: float
    reflection: float
    power_sign: int

    @property
    def k_slope(self):
        return abs(self.phase_slope)

    @property
    def relative_error(self):
        return abs(self.k_slope - self.k_continuum) / self.k_continuum


def measure_dispersion(params, omega, n_cells=100, drive_ratio=1e-4, edge=5, min_r2=0.99):
    """Drive one weak tone through a matched lattice and fit its phase per cell."""
    tone = DriveTone(omega, 2.0 * drive_ratio * params.critical_current)
    trace = simulate(driven_config(params, n_cells, [tone]))
    phasors = extract_tone(trace, omega)
    nodes = np.arange(edge, n_cells - edge)
    slope, r2 = phase_slope(phasors[nodes], nodes)
    if r2 < min_r2:
        raise NumericFailure(f"phase fit R^2 = {r2:.4f} below {min_r2} at {omega / TWO_PI / 1e9:.4g} GHz")
    fit = fit_waves(phasors[nodes], nodes)
    flow = power_flow(params, omega, phasors[nodes])
    return DispersionMeasurement(
        omega=omega,
        phase_slope=slope,
        r_squared=r2,
        k_recurrence=fit.k_per_cell,
        k_continuum=float(lm.wavevector(params, omega) * params.cell_pitch),
        k_discrete=float(discrete_wavevector(params, omega)),
        reflection=fit.reflection,
        power_sign=int(np.sign(flow.mean())),
    )


@dataclass(frozen=True)
class TransferMeasurement:
    omega: float
    k_per_cell: float
    r_squared: float
    gain_db: float
    input_fit: WaveFit
    output_fit: WaveFit


def transfer_config(params, n_cells, signal_omega, pump=None, signal_ratio=1e-3, **kwargs):
    """Lattice driven by an optional pump and a weak signal.

    The Norton source current is twice the wave current so a matched line
    carries ``I_p`` (and ``signal_ratio * I_p`` for the signal, or
    ``signal_ratio * 0.1 I_0`` with no pump).
    """
    if signal_ratio > 1e-3:
        raise InvalidConfigurationError("signal must be at most 1e-3 of the pump")
    tones = []
    i0 = params.critical_current
    if pump is not None and pump.current_ratio > 0:
        i_p = pump.current_ratio * i0
        tones.append(DriveTone(pump.frequency, 2.0 * i_p))
        tones_extra = [2 * pump.frequency - signal_omega]
        i_s = signal_ratio * i_p
    else:
        tones_extra = []
        i_s = signal_ratio * 0.1 * i0
    tones.append(DriveTone(signal_omega, 2.0 * i_s))
    cfg = driven_config(params, n_cells, tones, **kwargs)
    for w in tones_extra:
        if not _is_integer(cfg.record_window * w / TWO_PI):
            raise InvalidConfigurationError("idler is not commensurate with the record window")
    return cfg


def measure_transfer(config, signal_omega, min_r2=0.99):
    """Signal phase per cell and forward-wave gain between the two ends."""
    trace = simulate(config)
    phasors = extract_tone(trace, signal_omega)
    n = config.n_cells
    inp, out = _edge_windows(n)
    nodes = np.arange(inp[0], out[-1] + 1)
    slope, r2 = phase_slope(phasors[nodes], nodes)
    if r2 < min_r2:
        raise NumericFailure(f"signal phase fit R^2 = {r2:.4f} below {min_r2}")
    fit_in = fit_waves(phasors[inp], inp)
    fit_out = fit_waves(phasors[out], out)
    gain = 20 * np.log10(abs(fit_out.forward) / abs(fit_in.forward))
    return TransferMeasurement(signal_omega, abs(slope), r2, float(gain), fit_in, fit_out)


def export_trace_csv(trace, path, nodes=None, max_rows=2_000_000):
    """Write ``time_s, node, flux_Wb`` rows; refuses traces larger than ``max_rows``."""
    flux = trace.flux if nodes is None else trace.flux[:, nodes]
    idx = np.arange(trace.flux.shape[1]) if nodes is None else np.asarray(nodes)
    rows = flux.size
    if rows > max_rows:
        raise InvalidConfigurationError(
            f"trace export would write {rows} rows (limit {max_rows}); select fewer nodes"
        )
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time_s", "node", "flux_Wb"])
        for t, row in zip(trace.times, flux):
            for node, value in zip(idx, row):
                writer.writerow([repr(float(t)), int(node), repr(float(value))])
    return rows
