"""Elliptic sinh-Gordon solvers and the Nil Lax-type linear system.

``u_{z zbar} = Laplacian(u) / 4``.  The discrete Laplacian is the 5-point
stencil (``mode="fd"``) or the Fourier one (``mode="spectral"``, dense
Newton, small grids only).
"""

from __future__ import annotations

import dataclasses
import json

import numpy as np
import scipy.integrate
import scipy.linalg
import scipy.optimize
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels
from .spinfield import Grid2D, SpinorField, d_z, d_zbar

__all__ = [
    "ScalarField",
    "SolveReport",
    "NewtonDivergence",
    "laplacian_matrix",
    "laplacian",
    "sinh_gordon_solve",
    "berdinsky_solve",
    "compatibility_residual",
    "sinh_gordon_residual",
    "nil_lax_integrate",
    "lax_steps",
    "pendulum_profile",
    "berdinsky_profile",
    "rescale",
]


class NewtonDivergence(RuntimeError):
    def __init__(self, msg: str, history: list[float]):
        super().__init__(f"{msg}; residual history {history}")
        self.history = history


@dataclasses.dataclass(frozen=True, eq=False)
class ScalarField:
    vals: np.ndarray
    grid: Grid2D

    def __post_init__(self) -> None:
        self.grid.check(self.vals)


@dataclasses.dataclass
class SolveReport:
    iterations: int
    residuals: list[float]
    converged: bool
    residual_re: float = 0.0
    residual_im: float = 0.0

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True, indent=2, default=float)


def _lap1d(n: int, h: float, periodic: bool, mode: str):
    if mode == "spectral":
        if not periodic:
            raise ValueError("spectral Laplacian needs periodic directions")
        k = 2 * np.pi * np.fft.fftfreq(n, d=h)
        F = np.fft.fft(np.eye(n), axis=0)
        return np.real(np.fft.ifft(-(k**2)[:, None] * F, axis=0))
    main = -2.0 * np.ones(n)
    off = np.ones(n - 1)
    L = sp.diags([off, main, off], [-1, 0, 1], format="lil")
    if periodic:
        L[0, n - 1] = 1.0
        L[n - 1, 0] = 1.0
    else:
        # ghost-free second-order closure at open ends
        L[0, :4] = [2.0, -5.0, 4.0, -1.0]
        L[n - 1, n - 4 :] = [-1.0, 4.0, -5.0, 2.0]
    return L.tocsr() / h**2


def laplacian_matrix(grid: Grid2D, mode: str = "fd"):
    """Discrete Laplacian on the flattened (row-major) grid."""
    Lu = _lap1d(grid.nu, grid.du, grid.periodic_u, mode)
    Lv = _lap1d(grid.nv, grid.dv, grid.periodic_v, mode)
    if mode == "spectral":
        return np.kron(Lu, np.eye(grid.nv)) + np.kron(np.eye(grid.nu), Lv)
    return (sp.kron(Lu, sp.identity(grid.nv)) + sp.kron(sp.identity(grid.nu), Lv)).tocsr()


def laplacian(vals, grid: Grid2D, mode: str = "fd") -> np.ndarray:
    vals = grid.check(vals)
    if mode == "spectral":
        ku = 2 * np.pi * np.fft.fftfreq(grid.nu, d=grid.du)
        kv = 2 * np.pi * np.fft.fftfreq(grid.nv, d=grid.dv)
        out = np.fft.ifft2(-(ku[:, None] ** 2 + kv[None, :] ** 2) * np.fft.fft2(vals))
        return out if np.iscomplexobj(vals) else out.real
    return (laplacian_matrix(grid) @ vals.ravel()).reshape(grid.shape)


def _newton(F, J, x0, grid: Grid2D, tol: float, maxit: int, mode: str):
    x = np.array(x0, dtype=np.result_type(x0, float)).ravel()
    hist = []
    dense = mode == "spectral"
    if dense and x.size > 4096:
        raise ValueError("spectral Newton is dense; use at most 4096 samples")
    for it in range(maxit + 1):
        r = F(x)
        hist.append(float(np.max(np.abs(r))))
        if not np.isfinite(hist[-1]) or hist[-1] > 1e12:
            raise NewtonDivergence("Newton diverged", hist)
        if hist[-1] < tol:
            return x, SolveReport(it, hist, True)
        Jx = J(x)
        if dense:
            # minimum-norm step: translations of periodic solutions make J nearly singular
            dx = scipy.linalg.lstsq(Jx, -r, cond=1e-10)[0]
        else:
            dx = spla.spsolve(Jx.tocsc(), -r)
        x = x + dx
    raise NewtonDivergence(f"no convergence in {maxit} iterations", hist)


def sinh_gordon_residual(u, grid: Grid2D, mode: str = "fd") -> np.ndarray:
    return 0.25 * laplacian(u, grid, mode) + np.sinh(u)


def sinh_gordon_solve(seed: ScalarField, tol: float = 1e-10, maxit: int = 50, mode: str = "fd"):
    """Newton iteration for ``Laplacian(u)/4 + sinh u = 0`` on a doubly periodic grid.

    Returns ``(ScalarField, SolveReport)``.
    """
    grid = seed.grid
    if not (grid.periodic_u and grid.periodic_v):
        raise ValueError("sinh-Gordon solver needs a doubly periodic grid")
    u0 = np.asarray(seed.vals)
    if np.iscomplexobj(u0):
        raise ValueError("sinh-Gordon seed must be real")
    L = 0.25 * laplacian_matrix(grid, mode)
    F = lambda x: L @ x + np.sinh(x)
    if mode == "spectral":
        J = lambda x: L + np.diag(np.cosh(x))
    else:
        J = lambda x: L + sp.diags(np.cosh(x))
    x, rep = _newton(F, J, u0, grid, tol, maxit, mode)
    return ScalarField(x.reshape(grid.shape), grid), rep


def compatibility_residual(v: ScalarField, B: ScalarField, mode: str = "fd") -> np.ndarray:
    """Pointwise ``|v_{z zbar} + e^{2v} - |B|^2 e^{-2v}|``."""
    vv = np.asarray(v.vals)
    b2 = np.abs(np.asarray(B.vals)) ** 2
    return np.abs(0.25 * laplacian(vv, v.grid, mode) + np.exp(2 * vv) - b2 * np.exp(-2 * vv))


def berdinsky_solve(seed: ScalarField, B: ScalarField, tol: float = 1e-10, maxit: int = 50, mode: str = "fd"):
    """Newton iteration for ``v_{z zbar} + e^{2v} - |B|^2 e^{-2v} = 0``.

    Real seeds stay on the real branch; complex seeds are solved in complex
    arithmetic (the equation is holomorphic in v) and both residual parts are
    reported.
    """
    grid = seed.grid
    if not (grid.periodic_u and grid.periodic_v):
        raise ValueError("the Nil potential equation needs a doubly periodic grid")
    b2 = (np.abs(np.asarray(B.vals)) ** 2).ravel()
    if np.any(b2 < 1e-28):
        raise ValueError("B vanishes on the grid")
    L = 0.25 * laplacian_matrix(grid, mode)
    F = lambda x: L @ x + np.exp(2 * x) - b2 * np.exp(-2 * x)
    diag = lambda x: 2 * np.exp(2 * x) + 2 * b2 * np.exp(-2 * x)
    if mode == "spectral":
        J = lambda x: L + np.diag(diag(x))
    else:
        J = lambda x: (L + sp.diags(diag(x))).astype(np.result_type(x, float))
    x, rep = _newton(F, J, np.asarray(seed.vals), grid, tol, maxit, mode)
    r = F(x)
    rep.residual_re = float(np.max(np.abs(r.real)))
    rep.residual_im = float(np.max(np.abs(r.imag))) if np.iscomplexobj(r) else 0.0
    return ScalarField(x.reshape(grid.shape), grid), rep


def lax_steps(v: ScalarField, B: ScalarField, mode: str = "fd", vz=None):
    """Edge propagators of the Nil linear system (left action on psi).

    ``d psi = [[v_z, B e^{-v}], [-e^v, 0]] psi``,
    ``dbar psi = [[0, e^v], [-conj(B) e^{-v}, v_zbar]] psi``.
    """
    g = v.grid
    vv = np.asarray(v.vals, dtype=complex)
    b = np.broadcast_to(np.asarray(B.vals, dtype=complex), g.shape)
    if vz is None:
        vz = d_z(vv, g, mode)
        vzb = d_zbar(vv, g, mode)
    else:
        vz, vzb = vz
    A = np.zeros(g.shape + (2, 2), complex)
    A[..., 0, 0] = vz
    A[..., 0, 1] = b * np.exp(-vv)
    A[..., 1, 0] = -np.exp(vv)
    Bm = np.zeros_like(A)
    Bm[..., 0, 1] = np.exp(vv)
    Bm[..., 1, 0] = -np.conj(b) * np.exp(-vv)
    Bm[..., 1, 1] = vzb
    Mu = A + Bm
    Mv = 1j * (A - Bm)
    Mu_mid = 0.5 * (Mu[1:] + Mu[:-1])
    Mv_mid = 0.5 * (Mv[:, 1:] + Mv[:, :-1])
    return scipy.linalg.expm(g.du * Mu_mid), scipy.linalg.expm(g.dv * Mv_mid)


def nil_lax_integrate(v: ScalarField, B: ScalarField, H: float, psi0=(1.0, 0.0), mode: str = "fd", vz=None):
    """Integrate the linear system along the row-then-column tree.

    ``H`` must be constant (its derivative terms vanish).  Returns
    ``(SpinorField, holonomy)`` where ``holonomy[iu, iv]`` is the per-cell
    transport mismatch.
    """
    Su, Sv = lax_steps(v, B, mode, vz)
    col = np.asarray(psi0, dtype=complex).reshape(2, 1)
    f = kernels.tree_products(Su, Sv, col, left=True)[..., 0]
    if np.max(np.abs(f)) > 1e12:
        raise FloatingPointError("linear system blew up (|psi| > 1e12)")
    hol = kernels.plaquette_holonomy(Su, Sv, left=True)
    return SpinorField(f[..., 0], f[..., 1], H), hol


def pendulum_profile(period: float, x: np.ndarray, coef: float = 4.0):
    """Even periodic solution of ``u'' + coef sinh u = 0`` with the given period.

    Found by shooting on the amplitude (``u(0) = a, u'(0) = 0``); returns
    ``u(x)`` evaluated with a dense ODE solution.
    """
    lin = 2 * np.pi / np.sqrt(coef)
    if not period < lin:
        raise ValueError(f"nontrivial solutions need period < {lin:.6g}")

    def half_period(a):
        ev = lambda t, y: y[1]
        ev.terminal = True
        ev.direction = 1
        sol = scipy.integrate.solve_ivp(
            lambda t, y: [y[1], -coef * np.sinh(y[0])], [0, 10 * lin], [a, 0.0],
            events=ev, rtol=1e-12, atol=1e-14, first_step=1e-6,
        )
        return sol.t_events[0][0]

    a = scipy.optimize.brentq(lambda a: 2 * half_period(a) - period, 1e-3, 20.0, xtol=1e-14)
    sol = scipy.integrate.solve_ivp(
        lambda t, y: [y[1], -coef * np.sinh(y[0])], [0, period / 2], [a, 0.0],
        dense_output=True, rtol=1e-12, atol=1e-14,
    )
    xr = np.mod(np.asarray(x, float), period)
    xr = np.where(xr > period / 2, period - xr, xr)
    return sol.sol(xr)[0]


def berdinsky_profile(b: float, x: np.ndarray, amplitude: float = 0.3, with_derivative: bool = False):
    """1-D solution of ``v''/4 + e^{2v} - b^2 e^{-2v} = 0`` with ``v(0) = log(b)/2 + amplitude``."""
    v0 = 0.5 * np.log(b) + amplitude
    rhs = lambda t, y: [y[1], -4.0 * (np.exp(2 * y[0]) - b * b * np.exp(-2 * y[0]))]
    x = np.asarray(x, float)
    lo, hi = min(0.0, x.min()), max(0.0, x.max())
    out = np.empty_like(x)
    dout = np.empty_like(x)
    for a, bnd in ((x >= 0, hi), (x < 0, lo)):
        if not np.any(a):
            continue
        sol = scipy.integrate.solve_ivp(rhs, [0.0, bnd if bnd != 0 else 1e-12], [v0, 0.0],
                                        dense_output=True, rtol=1e-12, atol=1e-14)
        y = sol.sol(x[a])
        out[a], dout[a] = y[0], y[1]
    return (out, dout) if with_derivative else out


def rescale(v: ScalarField, B: ScalarField, lam: float):
    """``w(z) = v(lam z) + log lam`` with ``B -> lam^2 B`` on the grid scaled by ``1/lam``."""
    g = v.grid
    g2 = dataclasses.replace(g, du=g.du / lam, dv=g.dv / lam, origin=g.origin / lam)
    return ScalarField(np.asarray(v.vals) + np.log(lam), g2), ScalarField(lam**2 * np.asarray(B.vals), g2)
