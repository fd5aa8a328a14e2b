"""Compiled translational integrator for four robots plus the tether junction.

Bodies 0-3 are robots and body 4 is the junction node. Pinned bodies
(anchored robots) do not move. Everything is expressed in the slope frame.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .tether import link_tension_kernel

RUN_TO_END, UNTIL_TOUCHDOWN, UNTIL_ARREST = 0, 1, 2
REACHED_END, TOUCHDOWN, ARRESTED = 0, 1, 2

# aux slots shared with the caller
AUX_LIFTED, AUX_QUIET, AUX_MIN_Y, AUX_MAX_TENSION = 0, 1, 2, 3


@njit(cache=True)
def _accel(pos, vel, mass, pinned, offset, cdamp, links, rest, broken, k_t, c_t,
           g_vec, k_c, mu, v_eps, mover, thrust, thrust_on):
    n = pos.shape[0]
    f = np.zeros((n, 3))
    for b in range(n):
        if pinned[b]:
            continue
        for j in range(3):
            f[b, j] = mass[b] * g_vec[j]
        pen = -(pos[b, 2] + offset[b])
        if pen > 0.0:
            nf = k_c * pen - cdamp[b] * vel[b, 2]
            if nf > 0.0:
                f[b, 2] += nf
                vx = vel[b, 0]
                vy = vel[b, 1]
                s = math.sqrt(vx * vx + vy * vy)
                if s > 0.0:
                    scale = mu * nf * min(s / v_eps, 1.0) / s
                    f[b, 0] -= scale * vx
                    f[b, 1] -= scale * vy
    if thrust_on and mover >= 0:
        for j in range(3):
            f[mover, j] += thrust[j]
    for li in range(links.shape[0]):
        if broken[li]:
            continue
        a = links[li, 0]
        b = links[li, 1]
        t, u, _, _ = link_tension_kernel(pos[a], pos[b], vel[a], vel[b], k_t, c_t, rest[li])
        if t > 0.0:
            for j in range(3):
                f[a, j] += t * u[j]
                f[b, j] -= t * u[j]
    acc = np.zeros((n, 3))
    for b in range(n):
        if not pinned[b]:
            for j in range(3):
                acc[b, j] = f[b, j] / mass[b]
    return acc


@njit(cache=True)
def _rk4(pos, vel, h, mass, pinned, offset, cdamp, links, rest, broken, k_t, c_t,
         g_vec, k_c, mu, v_eps, mover, thrust, thrust_on):
    a1 = _accel(pos, vel, mass, pinned, offset, cdamp, links, rest, broken, k_t, c_t, g_vec, k_c, mu, v_eps, mover, thrust, thrust_on)
    p2 = pos + 0.5 * h * vel
    v2 = vel + 0.5 * h * a1
    a2 = _accel(p2, v2, mass, pinned, offset, cdamp, links, rest, broken, k_t, c_t, g_vec, k_c, mu, v_eps, mover, thrust, thrust_on)
    p3 = pos + 0.5 * h * v2
    v3 = vel + 0.5 * h * a2
    a3 = _accel(p3, v3, mass, pinned, offset, cdamp, links, rest, broken, k_t, c_t, g_vec, k_c, mu, v_eps, mover, thrust, thrust_on)
    p4 = pos + h * v3
    v4 = vel + h * a3
    a4 = _accel(p4, v4, mass, pinned, offset, cdamp, links, rest, broken, k_t, c_t, g_vec, k_c, mu, v_eps, mover, thrust, thrust_on)
    new_pos = pos + (h / 6.0) * (vel + 2.0 * v2 + 2.0 * v3 + v4)
    new_vel = vel + (h / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
    for b in range(pos.shape[0]):
        if pinned[b]:
            for j in range(3):
                new_pos[b, j] = pos[b, j]
                new_vel[b, j] = 0.0
    return new_pos, new_vel


@njit(cache=True)
def tensions(pos, vel, links, rest, broken, k_t, c_t):
    out = np.zeros(links.shape[0])
    for li in range(links.shape[0]):
        if not broken[li]:
            a = links[li, 0]
            b = links[li, 1]
            out[li] = link_tension_kernel(pos[a], pos[b], vel[a], vel[b], k_t, c_t, rest[li])[0]
    return out


@njit(cache=True)
def advance(pos, vel, mass, pinned, offset, cdamp, links, rest, broken, break_time, k_t, c_t, brk,
            g_vec, k_c, mu, v_eps, mover, thrust, thrust_until,
            t, t_end, dt, mode, lift_height, arrest_speed, arrest_hold, aux,
            sample_k, period, buf_t, buf_pos, buf_vel, buf_ten, record):
    """Advance ``pos``/``vel`` in place from ``t`` to ``t_end`` or an event.

    Returns ``(t, status, sample_k, n_samples)``. Samples are written at
    ``k * period`` for the first state at or after each sample time.
    """
    ns = 0
    status = REACHED_END
    while True:
        if record:
            while sample_k * period <= t + 1e-9 and ns < buf_t.shape[0]:
                buf_t[ns] = sample_k * period
                buf_pos[ns] = pos
                buf_vel[ns] = vel
                buf_ten[ns] = tensions(pos, vel, links, rest, broken, k_t, c_t)
                ns += 1
                sample_k += 1
        if t >= t_end - 1e-12:
            break
        h = min(dt, t_end - t)
        thrust_on = t < thrust_until - 1e-12
        if thrust_on and t + h > thrust_until:
            h = thrust_until - t
        new_pos, new_vel = _rk4(pos, vel, h, mass, pinned, offset, cdamp, links, rest, broken, k_t, c_t,
                                g_vec, k_c, mu, v_eps, mover, thrust, thrust_on)
        if mode == UNTIL_TOUCHDOWN:
            z0 = pos[mover, 2]
            z1 = new_pos[mover, 2]
            if aux[AUX_LIFTED] > 0.0 and z1 <= 0.0 and z0 > 0.0:
                # local quadratic through the step gives the crossing time
                vz0 = vel[mover, 2]
                a = (new_vel[mover, 2] - vz0) / h
                tau = h
                if abs(a) > 1e-12:
                    disc = vz0 * vz0 - 2.0 * a * z0
                    if disc >= 0.0:
                        sq = math.sqrt(disc)
                        for r in ((-vz0 - sq) / a, (-vz0 + sq) / a):
                            if 0.0 < r <= h and r < tau:
                                tau = r
                elif vz0 < 0.0:
                    tau = min(h, -z0 / vz0)
                new_pos, new_vel = _rk4(pos, vel, tau, mass, pinned, offset, cdamp, links, rest, broken, k_t, c_t,
                                        g_vec, k_c, mu, v_eps, mover, thrust, thrust_on)
                new_pos[mover, 2] = 0.0
                h = tau
                status = TOUCHDOWN
            if z1 > lift_height:
                aux[AUX_LIFTED] = 1.0
        pos[:, :] = new_pos
        vel[:, :] = new_vel
        t += h
        ten = tensions(pos, vel, links, rest, broken, k_t, c_t)
        for li in range(ten.shape[0]):
            if ten[li] > aux[AUX_MAX_TENSION]:
                aux[AUX_MAX_TENSION] = ten[li]
            if ten[li] > brk and not broken[li]:
                broken[li] = True
                break_time[li] = t
        if mover >= 0 and pos[mover, 1] < aux[AUX_MIN_Y]:
            aux[AUX_MIN_Y] = pos[mover, 1]
        if status == TOUCHDOWN:
            break
        if mode == UNTIL_ARREST:
            v = vel[mover]
            speed = math.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
            aux[AUX_QUIET] = aux[AUX_QUIET] + h if speed < arrest_speed else 0.0
            if aux[AUX_QUIET] >= arrest_hold - 1e-12:
                status = ARRESTED
                break
    return t, status, sample_k, ns
