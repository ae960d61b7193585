"""Analytic test surfaces: spinors and measures with known geometry."""

from __future__ import annotations

import numpy as np

from .spinfield import Grid2D, SpinorField

__all__ = [
    "enneper_spinor",
    "enneper_coordinates",
    "sphere_spinor",
    "sphere_coordinates",
    "cylinder_spinor",
    "gmu_vertical_plane_spinor",
    "spheroid_data",
    "torus_data",
]


def enneper_spinor(grid: Grid2D, chart: str = "z") -> SpinorField:
    """Weierstrass data (f, g) = (1, z): psi1 = f, conj(psi2) = g.

    ``chart="exp"`` uses the conformal coordinate w with z = e^w; the spinor
    picks up the factor sqrt(dz/dw) = e^{w/2} and is no longer polynomial.
    """
    w = grid.z
    if chart == "z":
        return SpinorField(np.ones_like(w), np.conj(w), 0.0)
    if chart == "exp":
        return SpinorField(np.exp(0.5 * w), np.conj(np.exp(1.5 * w)), 0.0)
    raise ValueError(f"unknown chart {chart!r}")


def enneper_coordinates(z: np.ndarray) -> np.ndarray:
    """Closed-form integrals of the Weierstrass formulas for (f, g) = (1, z)."""
    return np.stack([np.real(1j * (z + z**3 / 3)), np.real(z**3 / 3 - z), np.real(z**2)], axis=-1)


def sphere_spinor(grid: Grid2D) -> SpinorField:
    """Unit sphere by inverse stereographic projection; H = 1 for this orientation."""
    z = grid.z
    D = 1.0 + np.abs(z) ** 2
    w = np.exp(0.25j * np.pi)
    return SpinorField(w * np.sqrt(2) * np.conj(z) / D, w * np.sqrt(2) / D, 1.0)


def sphere_coordinates(z: np.ndarray) -> np.ndarray:
    D = 1.0 + np.abs(z) ** 2
    return np.stack([2 * z.real / D, 2 * z.imag / D, (np.abs(z) ** 2 - 1) / D], axis=-1)


def cylinder_spinor(grid: Grid2D, R: float = 1.0) -> SpinorField:
    """Cylinder x = (R cos(v/R), R sin(v/R), u): H = 1/(2R), e^alpha = 1."""
    v = np.broadcast_to(grid.v[None, :], grid.shape)
    p1 = np.sqrt(0.5j) * np.exp(-0.5j * v / R)
    p2b = np.sqrt(-0.5j) * np.exp(0.5j * v / R)
    return SpinorField(p1, np.conj(p2b), 1.0 / (2 * R))


def gmu_vertical_plane_spinor(grid: Grid2D) -> SpinorField:
    """Minimal vertical plane x1 = const in every G_mu, half-plane model (y > 0)."""
    y = np.broadcast_to(grid.v[None, :], grid.shape)
    if np.any(y <= 0):
        raise ValueError("the vertical-plane spinor lives on y > 0")
    s = 1.0 / np.sqrt(2 * y)
    return SpinorField(1j * s, -s, 0.0)


def spheroid_data(a: float, c: float, ntheta: int = 200, nphi: int = 64):
    """Spheroid (a, a, c) on Gauss-Legendre latitude nodes.

    Returns ``(kappa1, kappa2, dmu)`` sample arrays of shape (ntheta, nphi).
    """
    x, w = np.polynomial.legendre.leggauss(ntheta)
    th = 0.5 * np.pi * (x + 1)
    wt = 0.5 * np.pi * w
    W = np.sqrt(a**2 * np.cos(th) ** 2 + c**2 * np.sin(th) ** 2)
    k_mer = a * c / W**3
    k_par = c / (a * W)
    dmu = (a * np.sin(th) * W * wt)[:, None] * np.full(nphi, 2 * np.pi / nphi)[None, :]
    shape = (ntheta, nphi)
    return np.broadcast_to(k_mer[:, None], shape), np.broadcast_to(k_par[:, None], shape), dmu


def torus_data(R: float, r: float, n1: int = 64, n2: int = 64):
    """Torus of revolution: principal curvatures and area weights on a periodic grid."""
    t = 2 * np.pi * np.arange(n1) / n1
    k1 = np.full(n1, 1.0 / r)
    k2 = np.cos(t) / (R + r * np.cos(t))
    dmu = (r * (R + r * np.cos(t)) * (2 * np.pi / n1))[:, None] * np.full(n2, 2 * np.pi / n2)[None, :]
    shape = (n1, n2)
    return np.broadcast_to(k1[:, None], shape), np.broadcast_to(k2[:, None], shape), dmu
