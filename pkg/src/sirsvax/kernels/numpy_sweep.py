"""Pure-numpy fallback for the node sweep: all grid nodes advance through the
uncontrolled flow together, one vectorized RK4 step at a time.

Expressions mirror kernels.core lane for lane so either backend yields the
same field values.
"""

import numpy as np

from .core import CLAMP_BAND, FAIL_BAND
from ..grid import interp_field


def _drift_u0(s, i, beta, gamma, eta):
    si = s * i
    ds = -beta * si + eta * (1.0 - s - i)
    di = beta * si - gamma * i
    return ds, di


def _rk4_step_u0(s, i, dt, beta, gamma, eta):
    k1s, k1i = _drift_u0(s, i, beta, gamma, eta)
    s2 = s + 0.5 * dt * k1s
    i2 = i + 0.5 * dt * k1i
    k2s, k2i = _drift_u0(s2, i2, beta, gamma, eta)
    s3 = s + 0.5 * dt * k2s
    i3 = i + 0.5 * dt * k2i
    k3s, k3i = _drift_u0(s3, i3, beta, gamma, eta)
    s4 = s + dt * k3s
    i4 = i + dt * k3i
    k4s, k4i = _drift_u0(s4, i4, beta, gamma, eta)
    s_new = s + (dt / 6.0) * (k1s + 2.0 * k2s + 2.0 * k3s + k4s)
    i_new = i + (dt / 6.0) * (k1i + 2.0 * k2i + 2.0 * k3i + k4i)
    return s_new, i_new


def _clamp_vec(s, i, ok):
    np.logical_and(ok, s >= -FAIL_BAND, out=ok)
    np.logical_and(ok, i >= -FAIL_BAND, out=ok)
    s = np.where((s < 0.0) & (s >= -CLAMP_BAND), 0.0, s)
    i = np.where((i < 0.0) & (i >= -CLAMP_BAND), 0.0, i)
    tot = s + i
    np.logical_and(ok, tot <= 1.0 + FAIL_BAND, out=ok)
    sc = np.where((tot > 1.0) & (tot <= 1.0 + CLAMP_BAND), 1.0 / tot, 1.0)
    return s * sc, i * sc, ok


def _cstar_vec(s, i, p, a, b, u_max):
    with np.errstate(divide="ignore", invalid="ignore"):
        u = p / (b * s)
    u = np.minimum(np.maximum(u, 0.0), u_max)
    u = np.where(s > 0.0, u, 0.0)
    us = u * s
    return 0.5 * (a * (i * i) + b * (us * us)) - us * p


def _drift(s, i, u, beta, gamma, eta):
    si = s * i
    ds = -beta * si - u * s + eta * (1.0 - s - i)
    di = beta * si - gamma * i
    return ds, di


def _rk4_step(s, i, u, dt, beta, gamma, eta):
    k1s, k1i = _drift(s, i, u, beta, gamma, eta)
    s2 = s + 0.5 * dt * k1s
    i2 = i + 0.5 * dt * k1i
    k2s, k2i = _drift(s2, i2, u, beta, gamma, eta)
    s3 = s + 0.5 * dt * k2s
    i3 = i + 0.5 * dt * k2i
    k3s, k3i = _drift(s3, i3, u, beta, gamma, eta)
    s4 = s + dt * k3s
    i4 = i + dt * k3i
    k4s, k4i = _drift(s4, i4, u, beta, gamma, eta)
    s_new = s + (dt / 6.0) * (k1s + 2.0 * k2s + 2.0 * k3s + k4s)
    i_new = i + (dt / 6.0) * (k1i + 2.0 * k2i + 2.0 * k3i + k4i)
    return s_new, i_new


def _interp_lifted_vec(arr, n, h, s, i, lift_low_i):
    if lift_low_i:
        lift = (i > 0.0) & (i < h)
        ie = np.where(lift, np.minimum(h, 1.0 - s), i)
    else:
        ie = i
    return interp_field(arr, n, h, s, ie)


def _policy_control_vec(grad_s, n, h, s, i, b, u_max, lift_low_i):
    p = _interp_lifted_vec(grad_s, n, h, s, i, lift_low_i)
    with np.errstate(divide="ignore", invalid="ignore"):
        u = p / (b * s)
    u = np.minimum(np.maximum(u, 0.0), u_max)
    u = np.where(s > 0.0, u, 0.0)
    return u


def policy_value_sweep_quadratic(node_s, node_i, grad_s, values, n, h,
                                 beta, gamma, eta, q, a, b, u_max, dt,
                                 n_steps, lift_low_i):
    """Vectorized counterpart of core.policy_value_sweep_quadratic."""
    s = node_s.astype(np.float64, copy=True)
    i = node_i.astype(np.float64, copy=True)
    ok = np.ones(s.size, dtype=bool)
    lift = bool(lift_low_i)
    u = _policy_control_vec(grad_s, n, h, s, i, b, u_max, lift)
    us = u * s
    c = 0.5 * (a * (i * i) + b * (us * us))
    acc = 0.5 * c
    disc = 1.0
    for step in range(n_steps):
        s, i = _rk4_step(s, i, u, dt, beta, gamma, eta)
        s, i, ok = _clamp_vec(s, i, ok)
        disc = disc * q
        u = _policy_control_vec(grad_s, n, h, s, i, b, u_max, lift)
        us = u * s
        c = 0.5 * (a * (i * i) + b * (us * us))
        term = disc * c
        if step == n_steps - 1:
            term = 0.5 * term
        acc = acc + term
    v_tail = _interp_lifted_vec(values, n, h, s, i, lift)
    out = acc * dt + disc * v_tail
    status = 0 if bool(ok.all()) else 1
    return out, s, i, status


def bellman_sweep_quadratic(node_s, node_i, grad_s, values, n, h,
                            beta, gamma, eta, q, a, b, u_max, dt, n_steps):
    """Vectorized counterpart of core.bellman_sweep_quadratic."""
    s = node_s.astype(np.float64, copy=True)
    i = node_i.astype(np.float64, copy=True)
    ok = np.ones(s.size, dtype=bool)
    p = interp_field(grad_s, n, h, s, i)
    c = _cstar_vec(s, i, p, a, b, u_max)
    acc = 0.5 * c
    disc = 1.0
    for step in range(n_steps):
        s, i = _rk4_step_u0(s, i, dt, beta, gamma, eta)
        s, i, ok = _clamp_vec(s, i, ok)
        disc = disc * q
        p = interp_field(grad_s, n, h, s, i)
        c = _cstar_vec(s, i, p, a, b, u_max)
        term = disc * c
        if step == n_steps - 1:
            term = 0.5 * term
        acc = acc + term
    v_tail = interp_field(values, n, h, s, i)
    out = acc * dt + disc * v_tail
    status = 0 if bool(ok.all()) else 1
    return out, s, i, status
