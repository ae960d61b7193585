"""Surfaces of revolution in Nil.

The rotation action about the vertical axis has orbit space the half-plane
``u >= 0`` with metric ``du^2 + 4 dv^2 / (4 + u^2)``.  A profile curve is
parameterised by arc length ``s`` with ``u' = cos(sigma)`` and
``v' = sqrt(4 + u^2) sin(sigma) / 2``; the revolved surface has mean
curvature ``H = (sigma' + sin(sigma)/u) / 2``.

Group coordinates: ``X = u cos(t)``, ``Y = u sin(t)`` and vertical
coordinate ``v`` (canonical coordinates of the first kind), where the
angle ``t = theta + phi(s)`` carries the twist ``phi' = sin(sigma)/sqrt(4+u^2)``
that makes ``(s, theta)`` orthogonal.  The conformal chart is
``x = int ds / rho`` with ``rho = u sqrt(4 + u^2) / 2``, ``y = theta``.
"""

from __future__ import annotations

import csv
import dataclasses
from pathlib import Path

import numpy as np
import scipy.integrate
import scipy.interpolate
import scipy.optimize

from . import kernels
from .functionals import SurfaceMeasure, energy_geometric, measure_from_metric, spinor_energy, willmore
from .liegeo import LieAlgebra3, nil, plane_curvature
from .recon import FrameField, frame_from_tangents, mean_curvature, unit_normal
from .spinfield import Grid2D, SpinorField, potentials, spinor_from_Z

__all__ = [
    "ProfileError",
    "ProfileCurve",
    "cmc_profile",
    "random_profile",
    "perturbed_profile",
    "revolve_to_surface",
    "revolution_points",
    "spinor_energy_revolution",
    "willmore_cmc_sphere",
    "willmore_quadrature",
    "energy_first_variation",
    "measured_mean_curvature",
    "calibrate_k",
    "surface_energies",
    "write_profile_csv",
    "read_profile_csv",
    "READINGS",
]

READINGS = ("denominator", "printed")


class ProfileError(ValueError):
    """Profile integration failed (negative u, no closure, degenerate data)."""


@dataclasses.dataclass(frozen=True, eq=False)
class ProfileCurve:
    """Arc-length samples of a profile in the orbit half-plane.

    ``sigma_dot`` is the exact derivative of ``sigma`` when the generator
    knows it; otherwise it is estimated from the samples.
    """

    s: np.ndarray
    u: np.ndarray
    v: np.ndarray
    sigma: np.ndarray
    closed_pole_to_pole: bool = False
    periodic: bool = False
    sigma_dot: np.ndarray | None = None
    k: float | None = None

    def __post_init__(self) -> None:
        arrs = [np.asarray(a, float) for a in (self.s, self.u, self.v, self.sigma)]
        n = arrs[0].shape
        if any(a.shape != n or a.ndim != 1 for a in arrs) or n[0] < 5:
            raise ProfileError("profile arrays must be 1-D of equal length >= 5")
        if np.any(np.diff(arrs[0]) <= 0):
            raise ProfileError("arc length must increase")
        if np.min(arrs[1]) < -1e-12:
            raise ProfileError("u < 0 encountered")
        for name, a in zip(("s", "u", "v", "sigma"), arrs):
            object.__setattr__(self, name, a)
        if self.sigma_dot is not None:
            object.__setattr__(self, "sigma_dot", np.asarray(self.sigma_dot, float))

    @property
    def length(self) -> float:
        return float(self.s[-1] - self.s[0])

    def sdot(self) -> np.ndarray:
        if self.sigma_dot is not None:
            return self.sigma_dot
        return np.gradient(self.sigma, self.s, edge_order=2)

    def ratio(self) -> np.ndarray:
        """``sin(sigma)/u`` with the pole limit ``sigma'`` at ``u = 0``."""
        sd = self.sdot()
        pole = self.u < 1e-12
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.sin(self.sigma) / self.u
        return np.where(pole, sd, r)

    def mean_curvature(self) -> np.ndarray:
        return 0.5 * (self.sdot() + self.ratio())

    def speed_residual(self) -> float:
        """Max deviation from unit speed in the half-plane metric (finite differences)."""
        ud = np.gradient(self.u, self.s, edge_order=2)
        vd = np.gradient(self.v, self.s, edge_order=2)
        return float(np.max(np.abs(ud**2 + 4 * vd**2 / (4 + self.u**2) - 1)))


# --------------------------------------------------------------------------
# profiles


def _rk4_from_pole(k, h, smax, impl):
    u0 = h - k**2 * h**3 / 6 + k**4 * h**5 / 120
    v0 = k * h**2 / 2 + h**4 * (k / 32 - k**3 / 24)
    nmax = int(smax / h) + 2
    return kernels.rk4_profile(u0, v0, h, k * h, h, smax, nmax, impl=impl)


def cmc_profile(k: float, smax: float | None = None, h: float | None = None, impl=None) -> ProfileCurve:
    """Integrate ``sigma' = sin(sigma)/u`` from the pole with slope ``sigma/u -> k``.

    Classical RK4 with a fixed step, started one step off the axis from the
    series ``u = s - k^2 s^3/6 + k^4 s^5/120``, ``sigma = k s``,
    ``v = k s^2/2 + s^4 (k/32 - k^3/24)``.  Integrating into the second pole
    amplifies errors (the ODE is singular there), so the integration stops
    at the equator ``sigma = pi/2`` and the profile is completed by the
    reversal symmetry ``s -> L - s``, ``sigma -> pi - sigma``,
    ``v -> 2 v_eq - v`` of the ODE.  A first pass locates the equator; the
    second pass uses a step that lands on it.  ``h`` is the requested step
    (default ``pi / (2000 k)``).
    """
    if not k > 0:
        raise ProfileError("pole slope k must be positive")
    L0 = np.pi / k
    h = L0 / 2000 if h is None else float(h)
    if not h > 0:
        raise ProfileError("step must be positive")
    smax = 2 * L0 if smax is None else float(smax)
    s, u, v, sg, status = _rk4_from_pole(k, h, smax, impl)
    if np.any(u <= 0):
        raise ProfileError("u < 0 encountered")
    idx = np.flatnonzero(sg >= np.pi / 2)
    if idx.size == 0 or idx[0] < 3:
        raise ProfileError(f"no closure before smax={smax:g}")
    i = idx[0]
    seq = scipy.interpolate.CubicSpline(sg[i - 3 : i + 1], s[i - 3 : i + 1])(np.pi / 2)
    n = max(int(round(seq / h)), 4)
    h2 = seq / n
    s, u, v, sg, _ = _rk4_from_pole(k, h2, seq + 0.5 * h2, impl)
    if s.size != n or abs(sg[-1] - np.pi / 2) > 1e-6:
        raise ProfileError("equator not reached on the refined pass")
    s = np.concatenate([[0.0], s])
    u = np.concatenate([[0.0], u])
    v = np.concatenate([[0.0], v])
    sg = np.concatenate([[0.0], sg])
    sg[-1] = np.pi / 2
    L = 2 * s[-1]
    s = np.concatenate([s, L - s[-2::-1]])
    u = np.concatenate([u, u[-2::-1]])
    v = np.concatenate([v, 2 * v[-1] - v[-2::-1]])
    sg = np.concatenate([sg, np.pi - sg[-2::-1]])
    with np.errstate(divide="ignore", invalid="ignore"):
        sd = np.sin(sg) / u
    sd[0] = sd[-1] = k
    return ProfileCurve(s, u, v, sg, True, False, sd, k)


def _modal_sigma(t, a):
    m = np.arange(1, len(a) + 1)
    arg = np.pi * np.outer(t, m)
    return np.pi * t + np.sin(arg) @ a, np.pi + (np.pi * m * np.cos(arg)) @ a


def random_profile(rng: np.random.Generator, L: float = np.pi, nmodes: int = 4, amplitude: float = 0.15,
                   n: int = 4001, amplitudes=None) -> ProfileCurve:
    """Smooth pole-to-pole profile ``sigma = pi s/L + sum_m a_m sin(m pi s/L)``.

    ``a_2..a_M`` are drawn uniformly in ``[-amplitude, amplitude]`` (or given
    via ``amplitudes``); ``a_1`` is solved so that ``u(L) = 0``.  Profiles
    whose ``u`` touches zero in the interior are rejected with
    :class:`ProfileError`.  All ``a_m = 0`` gives the CMC sphere ``k = pi/L``.
    """
    if amplitudes is None:
        amps = rng.uniform(-amplitude, amplitude, size=max(nmodes - 1, 0))
    else:
        amps = np.asarray(amplitudes, float)
    s = np.linspace(0.0, L, n)
    t = s / L

    def sig(a1):
        return _modal_sigma(t, np.concatenate([[a1], amps]))

    def uend(a1):
        return scipy.integrate.simpson(np.cos(sig(a1)[0]), x=s)

    if np.all(amps == 0):
        a1 = 0.0
    else:
        a1 = scipy.optimize.brentq(uend, -1.5, 1.5, xtol=1e-15)
    sigma, sd_t = sig(a1)
    sd = sd_t / L
    u = scipy.integrate.cumulative_simpson(np.cos(sigma), x=s, initial=0.0)
    u[-1] = 0.0
    if np.any(u[1:-1] <= 0):
        raise ProfileError("profile touches the axis in the interior")
    v = scipy.integrate.cumulative_simpson(0.5 * np.sqrt(4 + u**2) * np.sin(sigma), x=s, initial=0.0)
    return ProfileCurve(s, u, v, sigma, True, False, sd, None)


def perturbed_profile(p: ProfileCurve, eps: float, shape) -> tuple[np.ndarray, np.ndarray]:
    """Normal displacement ``(u, v) + eps phi n`` with ``n = (-sin sigma, sqrt(4+u^2) cos sigma / 2)``.

    ``phi = sin^2(pi s / L) g(s/L)`` vanishes at both poles.  Returns the
    displaced ``(u, v)`` samples (no longer unit speed in ``s``).
    """
    t = (p.s - p.s[0]) / p.length
    g = _shape(shape)(t)
    phi = np.sin(np.pi * t) ** 2 * g
    du = -eps * phi * np.sin(p.sigma)
    dv = eps * phi * np.cos(p.sigma) * np.sqrt(4 + p.u**2) / 2
    return p.u + du, p.v + dv


def _shape(shape):
    if callable(shape):
        return shape
    m = int(shape)
    return lambda t: np.cos(m * np.pi * t)


# --------------------------------------------------------------------------
# energies


def _energy_integrand(sd, ratio, u):
    return (sd - ratio) ** 2 * np.sqrt(4 * u**2 + u**4)


def spinor_energy_revolution(p: ProfileCurve, chi: int = 2, reading: str = "validated") -> float:
    """``E = c int (sigma' - sin(sigma)/u)^2 sqrt(4u^2 + u^4) ds + pi chi / 2``.

    ``reading="validated"`` uses ``c = pi/16`` (the value that equals the
    geometric energy of the revolved surface); ``reading="printed"`` uses
    ``c = pi/8``.
    """
    if chi == 2 and not p.closed_pole_to_pole:
        raise ProfileError("sphere energy needs a pole-to-pole profile")
    if chi == 0 and not p.periodic:
        raise ProfileError("torus energy needs a periodic profile")
    if chi not in (0, 2):
        raise ValueError("chi must be 0 or 2")
    c = {"validated": np.pi / 16, "printed": np.pi / 8}[reading]
    f = _energy_integrand(p.sdot(), p.ratio(), p.u)
    return float(c * scipy.integrate.simpson(f, x=p.s) + np.pi * chi / 2)


def _energy_parametric(t, u, v, chi: int = 2) -> float:
    # same integral for a curve given at arbitrary parameter t
    ut = np.gradient(u, t, edge_order=2)
    vt = np.gradient(v, t, edge_order=2)
    w = 2 * vt / np.sqrt(4 + u**2)
    st = np.hypot(ut, w)
    sigma = np.unwrap(np.arctan2(w, ut))
    sd = np.gradient(sigma, t, edge_order=2) / st
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.sin(sigma) / u
        f = np.where(u > 1e-12, _energy_integrand(sd, ratio, u), 0.0)
    return float(np.pi / 16 * scipy.integrate.simpson(f * st, x=t) + np.pi * chi / 2)


def energy_first_variation(p: ProfileCurve, eps: float = 1e-3, shape=0, n: int = 20001) -> float:
    """Central difference ``(E(eps) - E(-eps)) / (2 eps)`` under a normal perturbation.

    The profile is resampled on ``n`` uniform arc-length samples by cubic
    interpolation before perturbing.
    """
    s = np.linspace(p.s[0], p.s[-1], n)
    q = ProfileCurve(
        s,
        np.clip(scipy.interpolate.CubicSpline(p.s, p.u)(s), 0, None),
        scipy.interpolate.CubicSpline(p.s, p.v)(s),
        scipy.interpolate.CubicSpline(p.s, p.sigma)(s),
        p.closed_pole_to_pole,
        p.periodic,
    )
    ep = _energy_parametric(s, *perturbed_profile(q, eps, shape))
    em = _energy_parametric(s, *perturbed_profile(q, -eps, shape))
    return (ep - em) / (2 * eps)


def willmore_cmc_sphere(H: float, reading: str = "denominator") -> float:
    """Closed-form Willmore value of the CMC sphere with mean curvature ``H``.

    ``W = 10 pi + pi/(2H^2) - pi C(H) (pi/2 - arctan((4H^2-1)/(4H)))`` with
    ``C = (1+4H^2)(3H^2-1/4)/(2H^3)`` (``reading="denominator"``) or
    ``C = (1+4H^2)(3H^2-1/4) H^3/2`` (``reading="printed"``, also accepted
    as ``"numerator"``).
    """
    if not H > 0:
        raise ValueError("H must be positive")
    base = (1 + 4 * H**2) * (3 * H**2 - 0.25)
    if reading == "denominator":
        C = base / (2 * H**3)
    elif reading in ("printed", "numerator"):
        C = base * H**3 / 2
    else:
        raise ValueError(f"unknown reading {reading!r}")
    return float(10 * np.pi + np.pi / (2 * H**2) - np.pi * C * (np.pi / 2 - np.arctan((4 * H**2 - 1) / (4 * H))))


# --------------------------------------------------------------------------
# revolved surfaces


def _splines(p: ProfileCurve):
    return (scipy.interpolate.CubicSpline(p.s, p.u), scipy.interpolate.CubicSpline(p.s, p.v),
            scipy.interpolate.CubicSpline(p.s, p.sigma))


def revolve_to_surface(p: ProfileCurve, ntheta: int = 64, nx: int = 257, s_cut: float | None = None,
                       H=None) -> tuple[FrameField, SpinorField]:
    """Revolve a pole-to-pole profile and sample it on the conformal chart.

    The chart ``(x, theta)`` covers ``s`` in ``[s_cut, L - s_cut]`` with
    ``nx`` uniform samples in ``x`` and ``ntheta + 1`` samples in
    ``theta in [0, 2 pi]`` (end point duplicated, since the spinor changes
    sign around the axis).  Returns the Nil frame field (analytic group
    samples, ``Psi`` in the left-invariant frame) and the spinor.  ``H``
    defaults to the profile's mean curvature.
    """
    if ntheta < 8:
        raise ValueError("ntheta must be at least 8")
    if not p.closed_pole_to_pole:
        raise ProfileError("revolve_to_surface needs a pole-to-pole profile")
    L = p.length
    s_cut = 1e-4 * L if s_cut is None else float(s_cut)
    su, sv, ss = _splines(p)
    s0 = p.s[0]
    smid = s0 + L / 2

    def rhs(x, y):
        u = su(y[0])
        sg = ss(y[0])
        rho = u * np.sqrt(4 + u**2) / 2
        return [rho, rho * np.sin(sg) / np.sqrt(4 + u**2)]

    ends = []
    for direction, target in ((1, s0 + L - s_cut), (-1, s0 + s_cut)):
        ev = lambda x, y, tgt=target: y[0] - tgt
        ev.terminal = True
        sol = scipy.integrate.solve_ivp(rhs, [0, direction * 1e3], [smid, 0.0], events=ev,
                                        rtol=1e-12, atol=1e-14, dense_output=True)
        if not sol.t_events[0].size:
            raise ProfileError("conformal chart did not reach the cut-off")
        ends.append((sol.t_events[0][0], sol))
    (xhi, solp), (xlo, solm) = ends
    x = np.linspace(xlo, xhi, nx)
    y = np.empty((2, nx))
    pos = x >= 0
    y[:, pos] = solp.sol(x[pos])
    y[:, ~pos] = solm.sol(x[~pos])
    s = y[0]
    phi = y[1]
    u, v, sg = su(s), sv(s), ss(s)
    if np.any(u <= 0):
        raise ProfileError("degenerate profile (u <= 0 inside the chart)")
    theta = np.linspace(0, 2 * np.pi, ntheta + 1)
    grid = Grid2D(nx, ntheta + 1, float(x[1] - x[0]), 2 * np.pi / ntheta, origin=complex(xlo, 0.0))
    rho = (u * np.sqrt(4 + u**2) / 2)[:, None]
    U = u[:, None]
    th = theta[None, :] + phi[:, None]
    c, sn = np.cos(th), np.sin(th)
    pd = (np.sin(sg) / np.sqrt(4 + u**2))[:, None]
    vd = (0.5 * np.sqrt(4 + u**2) * np.sin(sg))[:, None]
    cs = np.cos(sg)[:, None]
    S = np.stack(np.broadcast_arrays(cs * c - U * pd * sn, cs * sn + U * pd * c, vd - U**2 * pd / 2), -1)
    T = np.stack(np.broadcast_arrays(-U * sn, U * c, -(U**2) / 2 + 0 * c), -1)
    Z = 0.5 * (rho[..., None] * S - 1j * T)
    if H is None:
        q = ProfileCurve(p.s, p.u, p.v, p.sigma, True, False, p.sigma_dot, p.k)
        Hs = scipy.interpolate.CubicSpline(p.s, q.mean_curvature())(s)
        H = np.broadcast_to(Hs[:, None], grid.shape)
    psi = spinor_from_Z(Z, H)
    X, Y = U * c, U * sn
    m = np.zeros(grid.shape + (3, 3))
    m[..., 0, 0] = m[..., 1, 1] = m[..., 2, 2] = 1.0
    m[..., 0, 1] = X
    m[..., 1, 2] = Y
    m[..., 0, 2] = v[:, None] + X * Y / 2
    ff = frame_from_tangents(m, Z, nil(), grid, H=psi.H)
    return ff, psi


def revolution_points(p: ProfileCurve, ntheta: int = 64) -> np.ndarray:
    """Group coordinates ``(X, Y, v)`` on the arc-length grid, poles included.

    Pole rows collapse to single points.  Shape ``(len(s), ntheta + 1, 3)``.
    """
    dphi = np.sin(p.sigma) / np.sqrt(4 + p.u**2)
    phi = scipy.integrate.cumulative_trapezoid(dphi, p.s, initial=0.0)
    th = np.linspace(0, 2 * np.pi, ntheta + 1)[None, :] + phi[:, None]
    out = np.empty((p.s.size, ntheta + 1, 3))
    out[..., 0] = p.u[:, None] * np.cos(th)
    out[..., 1] = p.u[:, None] * np.sin(th)
    out[..., 2] = p.v[:, None]
    return out


def _interior(grid: Grid2D, margin: int) -> np.ndarray:
    m = np.zeros(grid.shape, bool)
    m[margin:-margin] = True
    return m


def measured_mean_curvature(p: ProfileCurve, ntheta: int = 32, nx: int = 257, margin: int = 2):
    """Mean curvature of the revolved surface measured by recon.

    Returns ``(mean, spread)`` over samples at least ``margin`` rows away
    from the chart ends.
    """
    ff, _ = revolve_to_surface(p, ntheta, nx)
    Hm = mean_curvature(ff, nil())[_interior(ff.grid, margin)]
    return float(np.mean(Hm)), float(np.max(Hm) - np.min(Hm))


def calibrate_k(H: float, lo: float = 1e-2, hi: float = 1e2, **kw) -> float:
    """Pole slope whose CMC sphere has measured mean curvature ``H`` (bisection)."""
    f = lambda k: measured_mean_curvature(cmc_profile(k), **kw)[0] - H
    return float(scipy.optimize.brentq(f, lo, hi, xtol=1e-10))


def surface_energies(p: ProfileCurve, ntheta: int = 64, nx: int = 513, alg: LieAlgebra3 | None = None) -> dict:
    """Energies of the revolved surface computed on the conformal chart.

    Keys: ``E_spinor`` (complex, ``int U V dx dy``), ``E_geometric``
    (``1/4 int (H^2 + K/4 - 1/16) dmu``, ``H`` measured by recon), ``E_normal``
    (``1/4 int (H^2 - n3^2/4) dmu`` with the profile's ``H``), ``W``
    (``int (H^2 + K) dmu``, measured ``H``), ``area`` and ``Khat``.
    """
    alg = nil() if alg is None else alg
    ff, psi = revolve_to_surface(p, ntheta, nx)
    grid = ff.grid
    Hm = mean_curvature(ff, alg)
    n = unit_normal(ff)
    K = plane_curvature(alg, n)
    meas = measure_from_metric(np.sqrt(ff.e2alpha), grid, chi=2)
    pot = potentials(psi, "Nil")
    E = spinor_energy(pot, grid, closed=True)
    return {
        "E_spinor": E,
        "E_geometric": energy_geometric(Hm, K, meas, "Nil"),
        "E_normal": 0.25 * float(np.sum((psi.H**2 - n[..., 2] ** 2 / 4) * meas.dmu)),
        "W": willmore(Hm, K, meas),
        "area": meas.area,
        "Khat": K,
        "H_measured": Hm,
        "grid": grid,
    }


def willmore_quadrature(p: ProfileCurve, alg: LieAlgebra3 | None = None, ntheta: int = 64, nx: int = 513) -> float:
    """``W = int (H^2 + K) dmu`` with ``H`` from recon and ``K`` the Nil plane curvature."""
    return surface_energies(p, ntheta, nx, alg)["W"]


# --------------------------------------------------------------------------
# profile CSV


def write_profile_csv(p: ProfileCurve, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["s", "u", "v", "sigma"])
        for row in zip(p.s, p.u, p.v, p.sigma):
            w.writerow(["%.17g" % x for x in row])


def read_profile_csv(path: str | Path, closed_pole_to_pole: bool = True) -> ProfileCurve:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return ProfileCurve(data[:, 0], data[:, 1], data[:, 2], data[:, 3], closed_pole_to_pole)
