"""Cubic Lagrange interpolation and semi-Lagrangian transport on a chart.

The chart is the square [-h, h]^2 of a :class:`DomainSpec` of kind
``chart`` (nodes include both edges). Sides b2 = +-h are inflow sides: a
characteristic traced back across them picks up the inflow value. Sides
b1 = +-h are outflow sides, where back-traced points should not land; a
departure point up to one cell outside is handled by one-sided
extrapolation, anything further is a step-size error.
"""
from __future__ import annotations

import numpy as np

from ..errors import ConfigError, StepSizeError
from .grid import CHART, ScalarField2D


def _weights(t):
    t1 = t - 1.0
    t2 = t - 2.0
    t3 = t - 3.0
    a = t * t1
    b = t2 * t3
    return (-t1 * b / 6.0, t * b / 2.0, -a * t3 / 2.0, a * t2 / 6.0)


def _stencil(s, n, periodic):
    base = np.floor(s).astype(np.int64) - 1
    if not periodic:
        np.clip(base, 0, n - 4, out=base)
    t = s - base
    if periodic:
        idx = [(base + a) % n for a in range(4)]
    else:
        idx = [base + a for a in range(4)]
    return idx, _weights(t)


def cubic_interpolate(arrays, s1, s2, periodic: bool = False):
    """Bicubic (4x4 Lagrange) interpolation at fractional indices (s1, s2).

    ``arrays`` is one 2-D array or a sequence of equally shaped arrays; the
    stencil is shared between them.
    """
    single = isinstance(arrays, np.ndarray)
    stack = [arrays] if single else list(arrays)
    n1, n2 = stack[0].shape
    s1 = np.asarray(s1, dtype=float)
    s2 = np.asarray(s2, dtype=float)
    i_idx, wi = _stencil(s1, n1, periodic)
    j_idx, wj = _stencil(s2, n2, periodic)
    rows = [i * n2 for i in i_idx]
    flats = [arr.ravel() for arr in stack]
    accs = [np.zeros(s1.shape) for _ in stack]
    for a in range(4):
        inner = [np.zeros(s1.shape) for _ in stack]
        for b in range(4):
            idx = rows[a] + j_idx[b]
            for k, flat in enumerate(flats):
                inner[k] += wj[b] * flat[idx]
        for k in range(len(stack)):
            accs[k] += wi[a] * inner[k]
    return accs[0] if single else accs


def periodic_cubic_sampler(*fields: ScalarField2D):
    """Callable (x1, x2) -> list of interpolated values for periodic-box fields."""
    d = fields[0].domain
    if not d.periodic:
        raise ConfigError("periodic sampler needs a periodic box")
    arrays = [f.values for f in fields]

    def sample(x1, x2):
        s1 = (np.asarray(x1) - d.origin[0]) / d.dx
        s2 = (np.asarray(x2) - d.origin[1]) / d.dy
        return cubic_interpolate(arrays, s1, s2, periodic=True)

    return sample


def advect_semilagrangian(fields, velocity, t: float, dt: float, inflow=0.0):
    """Advance chart fields from ``t`` to ``t + dt``.

    Parameters
    ----------
    fields : ScalarField2D or list of them, all on the same chart grid.
    velocity : callable (b1, b2, time) -> (w1, w2) in chart coordinates.
    inflow : float, or callable (b1, b2, time) -> value, or a list with one
        entry per field. Used where the back-traced point crossed b2 = +-h;
        a callable receives the departure point and the departure time ``t``
        and returns the field value carried in along that characteristic.

    Characteristics are traced back with the midpoint rule.
    """
    single = isinstance(fields, ScalarField2D)
    flist = [fields] if single else list(fields)
    d = flist[0].domain
    if d.kind != CHART:
        raise ConfigError("semi-Lagrangian transport runs on a chart grid")
    if not dt > 0:
        raise StepSizeError("time step must be positive")
    half = d.length[0] / 2
    B1, B2 = d.mesh()
    w1, w2 = velocity(B1, B2, t + dt)
    m1 = B1 - 0.5 * dt * w1
    m2 = B2 - 0.5 * dt * w2
    w1, w2 = velocity(m1, m2, t + 0.5 * dt)
    p1 = B1 - dt * w1
    p2 = B2 - dt * w2

    if np.any(np.abs(p1) > half + d.dx):
        raise StepSizeError("back-trace left the chart through an outflow side; reduce dt")
    crossed = np.abs(p2) > half
    s1 = (p1 - d.origin[0]) / d.dx
    s2 = (np.clip(p2, -half, half) - d.origin[1]) / d.dy
    vals = cubic_interpolate([f.values for f in flist], s1, s2)

    inflows = inflow if isinstance(inflow, (list, tuple)) else [inflow] * len(flist)
    out = []
    for f, v, src in zip(flist, vals, inflows):
        if np.any(crossed):
            if callable(src):
                fill = src(p1[crossed], p2[crossed], t)
            else:
                fill = float(src)
            v = v.copy()
            v[crossed] = fill
        out.append(f.with_values(v, t + dt))
    return out[0] if single else out
