"""Independent time-domain oracles for checking the transient engine.

Everything here goes through scipy's state-space simulator or plain
numerical integration of the impulse response; none of it shares code with
the closed-form evaluation in the package.
"""

from __future__ import annotations

import numpy as np
from scipy import signal


def rational_to_ss(model):
    """Real block-diagonal state space realizing the pole/residue sum (the
    d and e feedthrough terms are handled separately by the callers)."""
    blocks = []
    poles, res = model.poles, model.residues
    k = 0
    while k < len(poles):
        p, r = poles[k], res[k]
        if abs(p.imag) <= 1e-9 * max(abs(p), 1e-300):
            blocks.append((np.array([[p.real]]), np.array([1.0]),
                           np.array([r.real])))
            k += 1
        else:
            a = np.array([[p.real, p.imag], [-p.imag, p.real]])
            blocks.append((a, np.array([1.0, 0.0]),
                           np.array([2 * r.real, 2 * r.imag])))
            k += 2
    n = sum(b[0].shape[0] for b in blocks)
    a_full = np.zeros((n, n))
    b_full = np.zeros((n, 1))
    c_full = np.zeros((1, n))
    ofs = 0
    for a, b, c in blocks:
        m = a.shape[0]
        a_full[ofs:ofs + m, ofs:ofs + m] = a
        b_full[ofs:ofs + m, 0] = b
        c_full[0, ofs:ofs + m] = c
        ofs += m
    return a_full, b_full, c_full


def pwl_current(train, rise_time, t):
    """0/1 A level schedule rendered with linear ramps on a time grid."""
    i = np.zeros_like(t)
    level = 0.0
    for tau, new_level in train:
        seg = np.clip((t - tau) / rise_time, 0.0, 1.0)
        i = i + (new_level - level) * seg
        level = new_level
    return i


def simulate_pwl(model, train, rise_time, n_steps=400_000, tail=30.0):
    """Voltage response to the pulse train via scipy lsim; returns (t, v)."""
    t_end = train[-1][0] + tail * model.slowest_time_constant() + 2 * rise_time
    t = np.linspace(0.0, t_end, n_steps)
    i = pwl_current(train, rise_time, t)
    a, b, c = rational_to_ss(model)
    sys = signal.StateSpace(a, b, c, [[0.0]])
    _, y, _ = signal.lsim(sys, i, t)
    y = y + model.d * i + model.e * np.gradient(i, t)
    return t, y


def convolution_step_response(model, rise_time, times, n_steps=1_000_000):
    """Ramp-step response by brute numerical convolution of the pole-part
    impulse response with the ramp current on a uniform million-step grid;
    the d and e feedthrough terms act directly.  Returns values interpolated
    onto `times`."""
    times = np.asarray(times, dtype=float)
    horizon = max(float(times.max()) * 1.01, 10 * rise_time)
    t = np.linspace(0.0, horizon, n_steps)
    dt = t[1] - t[0]
    h = np.zeros(t.shape)
    for p, r in zip(model.poles, model.residues):
        h += (r * np.exp(p * t)).real
    i = np.clip(t / rise_time, 0.0, 1.0)
    v = signal.fftconvolve(h, i)[:n_steps] * dt
    v = v + model.d * i
    v = v + (model.e / rise_time) * (t < rise_time)
    return np.interp(times, t, v)
