"""Dormand-Prince 5(4) integrator specialised to the four-tone mixing system.

The right-hand side is written inline in the stage loop so the whole
integration compiles into one numba function with no Python callbacks.
"""

import numpy as np

from .._backend import kernel

STATUS_OK = 0
STATUS_MAX_STEPS = 1
STATUS_STEP_UNDERFLOW = 2

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = np.array(
    [
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [1 / 5, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3 / 40, 9 / 40, 0.0, 0.0, 0.0, 0.0],
        [44 / 45, -56 / 15, 32 / 9, 0.0, 0.0, 0.0],
        [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0.0, 0.0],
        [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0.0],
        [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
    ]
)
# difference between the 5th- and embedded 4th-order weights
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
# 4th-order continuous extension (Shampine): row j holds the theta^1..theta^4
# coefficients of stage j in y(x + theta h) = y + h sum_j k_j P_j(theta)
_P = np.array(
    [
        [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)


@kernel
def dp45_fwm(y0, alpha, beta, dk_linear, x_end, x_samples, rtol, atol, max_steps, h_init,
             c_nodes, a_table, e_weights, p_dense):
    """Integrate ``dA/dx`` for four tones from 0 to ``x_end``.

    Tones 0 and 1 are the pumps, 2 and 3 the two generated tones, with
    ``dk_linear = k0 + k1 - k2 - k3``. The state is sampled at the sorted
    positions ``x_samples`` with the 4th-order dense-output polynomial.

    Returns ``(samples, y_end, x_reached, n_accepted, n_rejected, status)``.
    Samples beyond ``x_reached`` are left as NaN when the run stops early.
    """
    n_samp = x_samples.shape[0]
    samples = np.full((n_samp, 4), np.nan + 0j)
    k = np.zeros((7, 4), dtype=np.complex128)
    y = y0.copy()
    ytmp = np.zeros(4, dtype=np.complex128)
    ynew = np.zeros(4, dtype=np.complex128)
    spm = np.zeros(4)
    x = 0.0
    h = h_init
    h_min = 1e-14 * x_end
    si = 0
    while si < n_samp and x_samples[si] <= 0.0:
        samples[si, :] = y
        si += 1
    n_acc = 0
    n_rej = 0
    need_k0 = True
    status = STATUS_OK
    while x < x_end:
        if n_acc + n_rej >= max_steps:
            status = STATUS_MAX_STEPS
            break
        if h < h_min:
            status = STATUS_STEP_UNDERFLOW
            break
        last = False
        if x + h >= x_end:
            h = x_end - x
            last = True
        start = 0 if need_k0 else 1
        for s in range(start, 7):
            for i in range(4):
                acc = y[i]
                for j in range(s):
                    acc += h * a_table[s, j] * k[j, i]
                ytmp[i] = acc
            xs = x + c_nodes[s] * h
            if s == 0:
                xs = x
            ph = np.exp(1j * dk_linear * xs)
            p0 = abs(ytmp[0]) ** 2
            p1 = abs(ytmp[1]) ** 2
            p2 = abs(ytmp[2]) ** 2
            p3 = abs(ytmp[3]) ** 2
            for m in range(4):
                spm[m] = alpha[m, 0] * p0 + alpha[m, 1] * p1 + alpha[m, 2] * p2 + alpha[m, 3] * p3
            k[s, 0] = 1j * (beta[0] * np.conj(ytmp[1]) * ytmp[2] * ytmp[3] / ph + ytmp[0] * spm[0])
            k[s, 1] = 1j * (beta[1] * np.conj(ytmp[0]) * ytmp[2] * ytmp[3] / ph + ytmp[1] * spm[1])
            k[s, 2] = 1j * (beta[2] * ytmp[0] * ytmp[1] * np.conj(ytmp[3]) * ph + ytmp[2] * spm[2])
            k[s, 3] = 1j * (beta[3] * ytmp[0] * ytmp[1] * np.conj(ytmp[2]) * ph + ytmp[3] * spm[3])
        need_k0 = False
        # stage 6 was evaluated at the 5th-order solution (FSAL)
        for i in range(4):
            ynew[i] = ytmp[i]
        err = 0.0
        for i in range(4):
            e = 0j
            for j in range(7):
                e += e_weights[j] * k[j, i]
            scale = atol + rtol * max(abs(y[i]), abs(ynew[i]))
            err += (abs(h * e) / scale) ** 2
        err = np.sqrt(err / 4.0)
        if not np.isfinite(err):
            h *= 0.2
            n_rej += 1
            continue
        if err <= 1.0:
            x_new = x_end if last else x + h
            while si < n_samp and x_samples[si] <= x_new:
                if x_samples[si] == x_new:
                    for i in range(4):
                        samples[si, i] = ynew[i]
                else:
                    theta = (x_samples[si] - x) / h
                    for i in range(4):
                        acc = 0j
                        for j in range(7):
                            w = theta * (p_dense[j, 0] + theta * (p_dense[j, 1] + theta * (
                                p_dense[j, 2] + theta * p_dense[j, 3])))
                            acc += w * k[j, i]
                        samples[si, i] = y[i] + h * acc
                si += 1
            for i in range(4):
                y[i] = ynew[i]
                k[0, i] = k[6, i]
            x = x_new
            n_acc += 1
            fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            h *= fac
        else:
            n_rej += 1
            h *= max(0.2, 0.9 * err ** -0.2)
    return samples, y, x, n_acc, n_rej, status


def tableau():
    """Coefficient arrays passed to :func:`dp45_fwm` (``c``, ``a``, ``e``, ``p``)."""
    return _C, _A, _E, _P
