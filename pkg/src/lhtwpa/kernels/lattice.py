"""Time stepping for the driven, terminated junction lattice.

Each step applies the implicit midpoint rule with the averaged-vector-field
discrete gradient of the junction potential,

    M d + (dt/2) G d + (dt^2/2) grad_V(phi, phi + d) = dt M v + (dt^2/2) B(t + dt/2),
    v' = 2 d / dt - v,

which conserves the energy exactly when undriven and lossless. The nonlinear
system is solved by a simplified Newton iteration whose tridiagonal matrix
``M + (dt/2) G + dt^2 / (4 L_J)`` is fixed for the whole run.
"""

import numpy as np
from scipy.linalg import solve_banded

from .._backend import kernel

STATUS_OK = 0
STATUS_UNSTABLE = 1
STATUS_NEWTON = 2


def _source(t, freqs, amps, phases, ramp):
    env = 1.0
    if t < ramp:
        env = 0.5 - 0.5 * np.cos(np.pi * t / ramp)
    total = 0.0
    for j in range(freqs.shape[0]):
        total += amps[j] * np.cos(freqs[j] * t + phases[j])
    return env * total


def _lattice_numpy(phi0, v0, m_diag, m_off, cond, inv_lj, cubic, freqs, amps, phases, ramp,
                   dt, n_steps, rec_start, newton_tol, max_newton, flux_limit):
    n = phi0.shape[0]
    n_rec = n_steps - rec_start
    rec_phi = np.zeros((n_rec, n))
    rec_v = np.zeros((n_rec, n))
    jac = np.zeros((3, n))
    jac[1] = m_diag + 0.5 * dt * cond + 0.25 * dt * dt * inv_lj
    jac[0, 1:] = m_off
    jac[2, :-1] = m_off

    def mass(x):
        out = m_diag * x
        out[:-1] += m_off * x[1:]
        out[1:] += m_off * x[:-1]
        return out

    phi = phi0.copy()
    v = v0.copy()
    for step in range(n_steps):
        if step >= rec_start:
            rec_phi[step - rec_start] = phi
            rec_v[step - rec_start] = v
        src = _source((step + 0.5) * dt, freqs, amps, phases, ramp)
        rhs = dt * mass(v)
        rhs[0] += 0.5 * dt * dt * src
        d = dt * v
        converged = False
        for _ in range(max_newton):
            p2 = phi + d
            s = phi + p2
            grad = 0.5 * inv_lj * s - cubic * s * (phi * phi + p2 * p2)
            res = rhs - mass(d) - 0.5 * dt * cond * d - 0.5 * dt * dt * grad
            corr = solve_banded((1, 1), jac, res, check_finite=False)
            d += corr
            if np.max(np.abs(corr)) <= newton_tol * (np.max(np.abs(d)) + 1e-300):
                converged = True
                break
        if not converged:
            return rec_phi, rec_v, phi, v, STATUS_NEWTON, step
        v = 2.0 * d / dt - v
        phi = phi + d
        if not np.all(np.abs(phi) <= flux_limit):
            return rec_phi, rec_v, phi, v, STATUS_UNSTABLE, step
    return rec_phi, rec_v, phi, v, STATUS_OK, n_steps


@kernel(fallback=_lattice_numpy)
def lattice_run(phi0, v0, m_diag, m_off, cond, inv_lj, cubic, freqs, amps, phases, ramp,
                dt, n_steps, rec_start, newton_tol, max_newton, flux_limit):
    """Advance the lattice ``n_steps`` steps from ``(phi0, v0)``.

    States at step indices ``rec_start .. n_steps-1`` (time ``m dt``) are
    recorded. The Norton source current drives node 0.

    Returns ``(rec_phi, rec_v, phi, v, status, steps_done)``.
    """
    n = phi0.shape[0]
    n_rec = n_steps - rec_start
    rec_phi = np.zeros((n_rec, n))
    rec_v = np.zeros((n_rec, n))
    # Thomas factorisation of the fixed Newton matrix
    jd = np.empty(n)
    for i in range(n):
        jd[i] = m_diag[i] + 0.5 * dt * cond[i] + 0.25 * dt * dt * inv_lj
    cp = np.zeros(n)
    inv_m = np.empty(n)
    inv_m[0] = 1.0 / jd[0]
    if n > 1:
        cp[0] = m_off[0] * inv_m[0]
    for i in range(1, n):
        denom = jd[i] - m_off[i - 1] * cp[i - 1]
        inv_m[i] = 1.0 / denom
        if i < n - 1:
            cp[i] = m_off[i] * inv_m[i]
    phi = phi0.copy()
    v = v0.copy()
    d = np.empty(n)
    rhs = np.empty(n)
    res = np.empty(n)
    for step in range(n_steps):
        if step >= rec_start:
            for i in range(n):
                rec_phi[step - rec_start, i] = phi[i]
                rec_v[step - rec_start, i] = v[i]
        t = (step + 0.5) * dt
        env = 1.0
        if t < ramp:
            env = 0.5 - 0.5 * np.cos(np.pi * t / ramp)
        src = 0.0
        for j in range(freqs.shape[0]):
            src += amps[j] * np.cos(freqs[j] * t + phases[j])
        src *= env
        for i in range(n):
            acc = m_diag[i] * v[i]
            if i > 0:
                acc += m_off[i - 1] * v[i - 1]
            if i < n - 1:
                acc += m_off[i] * v[i + 1]
            rhs[i] = dt * acc
            d[i] = dt * v[i]
        rhs[0] += 0.5 * dt * dt * src
        converged = False
        for _ in range(max_newton):
            for i in range(n):
                p1 = phi[i]
                p2 = p1 + d[i]
                s = p1 + p2
                grad = 0.5 * inv_lj * s - cubic * s * (p1 * p1 + p2 * p2)
                acc = m_diag[i] * d[i]
                if i > 0:
                    acc += m_off[i - 1] * d[i - 1]
                if i < n - 1:
                    acc += m_off[i] * d[i + 1]
                res[i] = rhs[i] - acc - 0.5 * dt * cond[i] * d[i] - 0.5 * dt * dt * grad
            # forward and back substitution, solution left in res
            res[0] = res[0] * inv_m[0]
            for i in range(1, n):
                res[i] = (res[i] - m_off[i - 1] * res[i - 1]) * inv_m[i]
            for i in range(n - 2, -1, -1):
                res[i] -= cp[i] * res[i + 1]
            big_c = 0.0
            big_d = 0.0
            for i in range(n):
                d[i] += res[i]
                big_c = max(big_c, abs(res[i]))
                big_d = max(big_d, abs(d[i]))
            if big_c <= newton_tol * (big_d + 1e-300):
                converged = True
                break
        if not converged:
            return rec_phi, rec_v, phi, v, STATUS_NEWTON, step
        stable = True
        for i in range(n):
            v[i] = 2.0 * d[i] / dt - v[i]
            phi[i] += d[i]
            if not abs(phi[i]) <= flux_limit:
                stable = False
        if not stable:
            return rec_phi, rec_v, phi, v, STATUS_UNSTABLE, step
    return rec_phi, rec_v, phi, v, STATUS_OK, n_steps
