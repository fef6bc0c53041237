"""Scalar hot kernels: RK4 stepping of the controlled SIRS drift, simplex
interpolation, the quadratic-cost pointwise minimum and the per-node value
sweep along the uncontrolled flow.

With numba active every function here is jit-compiled (the sweep in parallel
over nodes); otherwise they run as plain Python and the vectorized fallback in
`numpy_sweep` takes over the hot sweep. The arithmetic is written to match the
vectorized fallback expression for expression, so both backends produce the
same numbers lane by lane.
"""

import math

import numpy as np

from ._flags import USE_NUMBA

if USE_NUMBA:
    from numba import njit, prange
else:
    def njit(*args, **kwargs):  # identity decorator fallback
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def deco(fn):
            return fn

        return deco

    prange = range

# Boundary bands: drift this small is clamped back onto the simplex, beyond
# FAIL_BAND the step is reported as a failure (step size too coarse).
CLAMP_BAND = 1e-12
FAIL_BAND = 1e-6


@njit(cache=True, inline="always")
def interp_scalar(arr, n, h, s, i):
    """Piecewise-linear interpolation of an (n, n) node array at (s, i)."""
    if s < 0.0:
        s = 0.0
    elif s > 1.0:
        s = 1.0
    if i < 0.0:
        i = 0.0
    elif i > 1.0:
        i = 1.0
    if i > 1.0 - s:
        i = 1.0 - s
    j = int(math.floor(s / h))
    if j > n - 2:
        j = n - 2
    k = int(math.floor(i / h))
    if k > n - 2:
        k = n - 2
    if j + k > n - 2:
        if k > 0:
            k -= 1
        else:
            j -= 1
    xi = s / h - j
    ze = i / h - k
    f00 = arr[j, k]
    f10 = arr[j + 1, k]
    f01 = arr[j, k + 1]
    if j + k == n - 2:
        return f00 + xi * (f10 - f00) + ze * (f01 - f00)
    f11 = arr[j + 1, k + 1]
    return (f00 * (1.0 - xi) * (1.0 - ze) + f10 * xi * (1.0 - ze)
            + f01 * (1.0 - xi) * ze + f11 * xi * ze)


@njit(cache=True, inline="always")
def cstar_quadratic(s, i, p, a, b, u_max):
    """inf over u in [0, u_max] of C(s, i, u) - u*s*p for the quadratic cost."""
    if s > 0.0:
        u = p / (b * s)
        if u < 0.0:
            u = 0.0
        elif u > u_max:
            u = u_max
    else:
        u = 0.0
    us = u * s
    return 0.5 * (a * (i * i) + b * (us * us)) - us * p


@njit(cache=True, inline="always")
def rk4_step(s, i, u, dt, beta, gamma, eta):
    """One classical fourth-order step of the controlled drift."""
    si = s * i
    k1s = -beta * si - u * s + eta * (1.0 - s - i)
    k1i = beta * si - gamma * i
    s2 = s + 0.5 * dt * k1s
    i2 = i + 0.5 * dt * k1i
    si = s2 * i2
    k2s = -beta * si - u * s2 + eta * (1.0 - s2 - i2)
    k2i = beta * si - gamma * i2
    s3 = s + 0.5 * dt * k2s
    i3 = i + 0.5 * dt * k2i
    si = s3 * i3
    k3s = -beta * si - u * s3 + eta * (1.0 - s3 - i3)
    k3i = beta * si - gamma * i3
    s4 = s + dt * k3s
    i4 = i + dt * k3i
    si = s4 * i4
    k4s = -beta * si - u * s4 + eta * (1.0 - s4 - i4)
    k4i = beta * si - gamma * i4
    s_new = s + (dt / 6.0) * (k1s + 2.0 * k2s + 2.0 * k3s + k4s)
    i_new = i + (dt / 6.0) * (k1i + 2.0 * k2i + 2.0 * k3i + k4i)
    return s_new, i_new


@njit(cache=True, inline="always")
def clamp_state(s, i):
    """Clamp tiny boundary violations; report failure beyond FAIL_BAND."""
    ok = True
    if s < 0.0:
        if s >= -CLAMP_BAND:
            s = 0.0
        elif s < -FAIL_BAND:
            ok = False
    if i < 0.0:
        if i >= -CLAMP_BAND:
            i = 0.0
        elif i < -FAIL_BAND:
            ok = False
    tot = s + i
    if tot > 1.0:
        if tot <= 1.0 + CLAMP_BAND:
            sc = 1.0 / tot
            s = s * sc
            i = i * sc
        elif tot > 1.0 + FAIL_BAND:
            ok = False
    return s, i, ok


@njit(cache=True)
def path_constant_control(s0, i0, u, dt, n_steps, beta, gamma, eta):
    """Integrate under a constant control; returns (s, i) sample arrays and a
    status flag (0 ok, 1 left the simplex by more than FAIL_BAND)."""
    out_s = np.empty(n_steps + 1)
    out_i = np.empty(n_steps + 1)
    out_s[0] = s0
    out_i[0] = i0
    s = s0
    i = i0
    ok = True
    for j in range(n_steps):
        s, i = rk4_step(s, i, u, dt, beta, gamma, eta)
        s, i, ok1 = clamp_state(s, i)
        ok = ok and ok1
        out_s[j + 1] = s
        out_i[j + 1] = i
    status = 0
    if not ok:
        status = 1
    return out_s, out_i, status


@njit(cache=True, inline="always")
def cell_has_kink(kink_mask, n, h, s, i):
    """True when the interpolation cell of (s, i) touches a flagged node."""
    if s < 0.0:
        s = 0.0
    elif s > 1.0:
        s = 1.0
    if i < 0.0:
        i = 0.0
    elif i > 1.0:
        i = 1.0
    if i > 1.0 - s:
        i = 1.0 - s
    j = int(math.floor(s / h))
    if j > n - 2:
        j = n - 2
    k = int(math.floor(i / h))
    if k > n - 2:
        k = n - 2
    if j + k > n - 2:
        if k > 0:
            k -= 1
        else:
            j -= 1
    if kink_mask[j, k] or kink_mask[j + 1, k] or kink_mask[j, k + 1]:
        return True
    if j + k < n - 2 and kink_mask[j + 1, k + 1]:
        return True
    return False


@njit(cache=True)
def path_feedback(s0, i0, dt, n_steps, hold_every, u_grid, u_alt, kink_mask,
                  n, h, lift_low_i, u_max, beta, gamma, eta):
    """Sample-and-hold closed loop: every `hold_every` steps the control is
    re-read from the tabulated policy by interpolation and held constant.

    With lift_low_i, lookups at 0 < i < h use the first interior row i = h
    (the in-domain side of the value function's jump at the i = 0 face).
    Cells touching kink-flagged nodes read the conservative `u_alt` table and
    the sample is marked in the kink output array.
    """
    out_s = np.empty(n_steps + 1)
    out_i = np.empty(n_steps + 1)
    out_u = np.empty(n_steps + 1)
    out_kink = np.zeros(n_steps + 1, dtype=np.uint8)
    out_s[0] = s0
    out_i[0] = i0
    s = s0
    i = i0
    u = 0.0
    ok = True
    for j in range(n_steps):
        if j % hold_every == 0:
            se = s
            ie = i
            if lift_low_i and ie > 0.0 and ie < h:
                ie = h
                if ie > 1.0 - se:
                    ie = 1.0 - se
            if cell_has_kink(kink_mask, n, h, se, ie):
                u = interp_scalar(u_alt, n, h, se, ie)
                out_kink[j] = 1
            else:
                u = interp_scalar(u_grid, n, h, se, ie)
            if u < 0.0:
                u = 0.0
            elif u > u_max:
                u = u_max
        out_u[j] = u
        s, i = rk4_step(s, i, u, dt, beta, gamma, eta)
        s, i, ok1 = clamp_state(s, i)
        ok = ok and ok1
        out_s[j + 1] = s
        out_i[j + 1] = i
    out_u[n_steps] = u
    status = 0
    if not ok:
        status = 1
    return out_s, out_i, out_u, out_kink, status


@njit(cache=True, inline="always")
def bellman_flow(s0, i0, grad_s, values, n, h, beta, gamma, eta, q,
                 a, b, u_max, dt, n_steps):
    """Discounted quadrature of the control-minimized cost along the
    uncontrolled flow from one node, closed with the previous iterate's value
    at the truncation endpoint. q is the per-step discount exp(-r*dt)."""
    s = s0
    i = i0
    ok = True
    p = interp_scalar(grad_s, n, h, s, i)
    c = cstar_quadratic(s, i, p, a, b, u_max)
    acc = 0.5 * c
    disc = 1.0
    for step in range(n_steps):
        s, i = rk4_step(s, i, 0.0, dt, beta, gamma, eta)
        s, i, ok1 = clamp_state(s, i)
        ok = ok and ok1
        disc = disc * q
        p = interp_scalar(grad_s, n, h, s, i)
        c = cstar_quadratic(s, i, p, a, b, u_max)
        term = disc * c
        if step == n_steps - 1:
            term = 0.5 * term
        acc = acc + term
    v_tail = interp_scalar(values, n, h, s, i)
    return acc * dt + disc * v_tail, s, i, ok


@njit(cache=True, parallel=True)
def bellman_sweep_quadratic(node_s, node_i, grad_s, values, n, h,
                            beta, gamma, eta, q, a, b, u_max, dt, n_steps):
    """Full Jacobi sweep of bellman_flow over all nodes (parallel)."""
    m = node_s.size
    out = np.empty(m)
    end_s = np.empty(m)
    end_i = np.empty(m)
    fail = np.zeros(m, dtype=np.uint8)
    for idx in prange(m):
        v, es, ei, ok = bellman_flow(node_s[idx], node_i[idx], grad_s, values,
                                     n, h, beta, gamma, eta, q, a, b, u_max,
                                     dt, n_steps)
        out[idx] = v
        end_s[idx] = es
        end_i[idx] = ei
        if not ok:
            fail[idx] = 1
    status = 0
    if fail.any():
        status = 1
    return out, end_s, end_i, status


@njit(cache=True, inline="always")
def policy_control(grad_s, n, h, s, i, b, u_max, lift_low_i):
    """Feedback rate at (s, i): clipped p/(b*s) with p read from the gradient
    table; lookups at 0 < i < h optionally use the first interior row."""
    ie = i
    if lift_low_i and ie > 0.0 and ie < h:
        ie = h
        if ie > 1.0 - s:
            ie = 1.0 - s
    p = interp_scalar(grad_s, n, h, s, ie)
    if s > 0.0:
        u = p / (b * s)
        if u < 0.0:
            u = 0.0
        elif u > u_max:
            u = u_max
    else:
        u = 0.0
    return u


@njit(cache=True, inline="always")
def interp_lifted(arr, n, h, s, i, lift_low_i):
    """Field lookup that reads the first interior row for 0 < i < h, the
    in-domain side of the value jump along the i = 0 face."""
    ie = i
    if lift_low_i and ie > 0.0 and ie < h:
        ie = h
        if ie > 1.0 - s:
            ie = 1.0 - s
    return interp_scalar(arr, n, h, s, ie)


@njit(cache=True, inline="always")
def policy_value_flow(s0, i0, grad_s, values, n, h, beta, gamma, eta, q,
                      a, b, u_max, dt, n_steps, lift_low_i):
    """Discounted running cost along the flow driven by the feedback derived
    from grad_s (control re-read each step, held across the RK4 stages),
    closed with the tail value at the truncation endpoint."""
    s = s0
    i = i0
    ok = True
    u = policy_control(grad_s, n, h, s, i, b, u_max, lift_low_i)
    us = u * s
    c = 0.5 * (a * (i * i) + b * (us * us))
    acc = 0.5 * c
    disc = 1.0
    for step in range(n_steps):
        s, i = rk4_step(s, i, u, dt, beta, gamma, eta)
        s, i, ok1 = clamp_state(s, i)
        ok = ok and ok1
        disc = disc * q
        u = policy_control(grad_s, n, h, s, i, b, u_max, lift_low_i)
        us = u * s
        c = 0.5 * (a * (i * i) + b * (us * us))
        term = disc * c
        if step == n_steps - 1:
            term = 0.5 * term
        acc = acc + term
    v_tail = interp_lifted(values, n, h, s, i, lift_low_i)
    return acc * dt + disc * v_tail, s, i, ok


@njit(cache=True, parallel=True)
def policy_value_sweep_quadratic(node_s, node_i, grad_s, values, n, h,
                                 beta, gamma, eta, q, a, b, u_max, dt,
                                 n_steps, lift_low_i):
    """Policy-evaluation sweep: value of the feedback induced by grad_s."""
    m = node_s.size
    out = np.empty(m)
    end_s = np.empty(m)
    end_i = np.empty(m)
    fail = np.zeros(m, dtype=np.uint8)
    for idx in prange(m):
        v, es, ei, ok = policy_value_flow(
            node_s[idx], node_i[idx], grad_s, values, n, h, beta, gamma, eta,
            q, a, b, u_max, dt, n_steps, lift_low_i)
        out[idx] = v
        end_s[idx] = es
        end_i[idx] = ei
        if not ok:
            fail[idx] = 1
    status = 0
    if fail.any():
        status = 1
    return out, end_s, end_i, status
