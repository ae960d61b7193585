"""Pure-Python/numpy versions of the compiled kernels (same API)."""

from __future__ import annotations

import math

import numpy as np


def _rhs(u: float, sg: float) -> tuple[float, float, float]:
    return math.cos(sg), 0.5 * math.sqrt(4.0 + u * u) * math.sin(sg), math.sin(sg) / u


def rk4_profile(u0, v0, s0, sg0, h, smax, nmax):
    out = np.empty((nmax, 4))
    u, v, s, sg = float(u0), float(v0), float(s0), float(sg0)
    out[0] = s, u, v, sg
    n = 1
    status = 1
    while n < nmax and s + h <= smax:
        a1, b1, c1 = _rhs(u, sg)
        a2, b2, c2 = _rhs(u + 0.5 * h * a1, sg + 0.5 * h * c1)
        a3, b3, c3 = _rhs(u + 0.5 * h * a2, sg + 0.5 * h * c2)
        a4, b4, c4 = _rhs(u + h * a3, sg + h * c3)
        un = u + h / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4)
        vn = v + h / 6.0 * (b1 + 2 * b2 + 2 * b3 + b4)
        sgn = sg + h / 6.0 * (c1 + 2 * c2 + 2 * c3 + c4)
        if not (math.isfinite(un) and math.isfinite(sgn)) or un <= 0.0 or sgn >= math.pi:
            status = 0
            break
        u, v, sg, s = un, vn, sgn, s + h
        out[n] = s, u, v, sg
        n += 1
    res = out[:n]
    return res[:, 0].copy(), res[:, 1].copy(), res[:, 2].copy(), res[:, 3].copy(), status


def tree_products(Su, Sv, f0, left):
    nu, nv = Sv.shape[0], Su.shape[1]
    f = np.empty((nu, nv) + f0.shape, dtype=complex)
    f[0, 0] = f0
    for iu in range(nu - 1):
        f[iu + 1, 0] = Su[iu, 0] @ f[iu, 0] if left else f[iu, 0] @ Su[iu, 0]
    # columns are independent once the first row is known; vectorise across iu
    for iv in range(nv - 1):
        f[:, iv + 1] = Sv[:, iv] @ f[:, iv] if left else f[:, iv] @ Sv[:, iv]
    return f


def plaquette_holonomy(Su, Sv, left):
    if left:
        p1 = Sv[1:] @ Su[:, :-1]
        p2 = Su[:, 1:] @ Sv[:-1]
    else:
        p1 = Su[:, :-1] @ Sv[1:]
        p2 = Sv[:-1] @ Su[:, 1:]
    return np.sqrt(np.sum(np.abs(p1 - p2) ** 2, axis=(-2, -1)))
