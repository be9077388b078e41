"""Hot numeric kernels for the 7-joint arm chain: FK, Jacobian, DLS IK.

These run every simulation tick (warm-started) and thousands of times in the
solver tests, so they are compiled with numba when available. Setting
``BINPICK_PURE_NUMPY=1`` (or running without numba installed) selects a pure
NumPy/Python fallback with identical semantics; ``benchmarks/bench_kernels.py``
compares the two paths.

Chain model: joint i applies a fixed translation ``offsets[i]`` in the current
frame followed by a rotation of ``q[i]`` about the fixed local axis
``axes[i]``; the end effector sits at ``tip`` past the last joint. All arrays
are float64; axes are unit vectors.
"""

from __future__ import annotations

import os

import numpy as np

NUMBA_ENABLED = os.environ.get("BINPICK_PURE_NUMPY", "0") != "1"
if NUMBA_ENABLED:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        NUMBA_ENABLED = False

if not NUMBA_ENABLED:

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


@njit(cache=True)
def _axis_angle_matrix(axis, angle):
    """Rodrigues rotation matrix for a unit axis."""
    x, y, z = axis[0], axis[1], axis[2]
    c = np.cos(angle)
    s = np.sin(angle)
    t = 1.0 - c
    m = np.empty((3, 3), dtype=np.float64)
    m[0, 0] = t * x * x + c
    m[0, 1] = t * x * y - s * z
    m[0, 2] = t * x * z + s * y
    m[1, 0] = t * x * y + s * z
    m[1, 1] = t * y * y + c
    m[1, 2] = t * y * z - s * x
    m[2, 0] = t * x * z - s * y
    m[2, 1] = t * y * z + s * x
    m[2, 2] = t * z * z + c
    return m


@njit(cache=True)
def fk_point(axes, offsets, tip, q):
    """End-effector position of the chain in the chain-base frame."""
    n = q.shape[0]
    rot = np.eye(3, dtype=np.float64)
    pos = np.zeros(3, dtype=np.float64)
    for i in range(n):
        pos = pos + rot @ offsets[i]
        rot = rot @ _axis_angle_matrix(axes[i], q[i])
    return pos + rot @ tip


@njit(cache=True)
def fk_with_jacobian(axes, offsets, tip, q):
    """End-effector position and 3xN position Jacobian in one pass."""
    n = q.shape[0]
    rot = np.eye(3, dtype=np.float64)
    pos = np.zeros(3, dtype=np.float64)
    joint_pos = np.empty((n, 3), dtype=np.float64)
    joint_axis = np.empty((n, 3), dtype=np.float64)
    for i in range(n):
        pos = pos + rot @ offsets[i]
        joint_pos[i] = pos
        joint_axis[i] = rot @ axes[i]
        rot = rot @ _axis_angle_matrix(axes[i], q[i])
    ee = pos + rot @ tip
    jac = np.empty((3, n), dtype=np.float64)
    for i in range(n):
        ax = joint_axis[i]
        r = ee - joint_pos[i]
        jac[0, i] = ax[1] * r[2] - ax[2] * r[1]
        jac[1, i] = ax[2] * r[0] - ax[0] * r[2]
        jac[2, i] = ax[0] * r[1] - ax[1] * r[0]
    return ee, jac


@njit(cache=True)
def _solve3(a, b):
    """Solve the SPD 3x3 system a x = b by Gaussian elimination with pivoting."""
    m = np.empty((3, 4), dtype=np.float64)
    for i in range(3):
        for j in range(3):
            m[i, j] = a[i, j]
        m[i, 3] = b[i]
    for col in range(3):
        piv = col
        big = abs(m[col, col])
        for r in range(col + 1, 3):
            if abs(m[r, col]) > big:
                big = abs(m[r, col])
                piv = r
        if piv != col:
            for j in range(4):
                tmp = m[col, j]
                m[col, j] = m[piv, j]
                m[piv, j] = tmp
        inv = 1.0 / m[col, col]
        for r in range(col + 1, 3):
            f = m[r, col] * inv
            for j in range(col, 4):
                m[r, j] -= f * m[col, j]
    x = np.empty(3, dtype=np.float64)
    for i in range(2, -1, -1):
        s = m[i, 3]
        for j in range(i + 1, 3):
            s -= m[i, j] * x[j]
        x[i] = s / m[i, i]
    return x


@njit(cache=True)
def solve_ik_dls(axes, offsets, tip, q_seed, target, lower, upper,
                 damping, max_iters, tol, max_step):
    """Damped least-squares position IK with joint-limit clamping.

    Returns (q, err) where err is the final end-effector position error norm.
    Each iteration limits the Cartesian error step to ``max_step`` meters,
    which keeps far (unreachable) targets stable: the chain stretches toward
    the target instead of oscillating.
    """
    n = q_seed.shape[0]
    q = q_seed.copy()
    q_best = q_seed.copy()
    err_best = np.inf
    lam2 = damping * damping
    for _ in range(max_iters):
        ee, jac = fk_with_jacobian(axes, offsets, tip, q)
        e = target - ee
        err = np.sqrt(e[0] * e[0] + e[1] * e[1] + e[2] * e[2])
        if err < err_best:
            err_best = err
            q_best = q.copy()
        if err < tol:
            break
        if err > max_step:
            e = e * (max_step / err)
        a = jac @ jac.T
        for i in range(3):
            a[i, i] += lam2
        y = _solve3(a, e)
        dq = jac.T @ y
        for i in range(n):
            qi = q[i] + dq[i]
            if qi < lower[i]:
                qi = lower[i]
            elif qi > upper[i]:
                qi = upper[i]
            q[i] = qi
    ee = fk_point(axes, offsets, tip, q)
    d = target - ee
    err = np.sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2])
    if err < err_best:
        err_best = err
        q_best = q
    return q_best, err_best


def pure_python_variants():
    """The uncompiled implementations (for parity tests and benchmarks)."""
    if NUMBA_ENABLED:
        return {
            "fk_point": fk_point.py_func,
            "fk_with_jacobian": fk_with_jacobian.py_func,
            "solve_ik_dls": solve_ik_dls.py_func,
        }
    return {
        "fk_point": fk_point,
        "fk_with_jacobian": fk_with_jacobian,
        "solve_ik_dls": solve_ik_dls,
    }
