"""Reconstruction of immersions from tangent data and frame-level diagnostics."""

from __future__ import annotations

import dataclasses
from pathlib import Path

import numpy as np
import scipy.linalg

from . import kernels
from .liegeo import GroupElement, LieAlgebra3, algebra_components, christoffel, model_exp, representation
from .spinfield import DegenerateImmersionError, Grid2D, SpinorField, d_z, d_zbar, write_binary

__all__ = [
    "FrameField",
    "MaskError",
    "frame_integrate",
    "frame_from_tangents",
    "tangent_from_frames",
    "derivational_residual",
    "mean_curvature",
    "unit_normal",
    "group_coordinates",
    "write_obj",
    "export_mesh",
    "dump_frames",
]


class MaskError(ValueError):
    """Invalid samples lie on the integration tree."""


@dataclasses.dataclass(frozen=True, eq=False)
class FrameField:
    """Reconstructed immersion ``f`` with its tangent data ``Psi = f^{-1} f_z``."""

    f: GroupElement
    Psi: np.ndarray
    grid: Grid2D
    valid: np.ndarray
    holonomy: np.ndarray | None = None
    H: np.ndarray | None = None
    layout: tuple = ()

    @property
    def PsiStar(self) -> np.ndarray:
        """``f^{-1} f_zbar``: the componentwise conjugate since ``f`` is real-group-valued."""
        return np.conj(self.Psi)

    @property
    def e2alpha(self) -> np.ndarray:
        return 2.0 * np.sum(np.abs(self.Psi) ** 2, axis=-1)


def _edge_elements(Psi: np.ndarray):
    # f_u = f (Psi + conj Psi), f_v = f i (Psi - conj Psi); midpoint averages per edge
    Xu = 2.0 * Psi.real
    Xv = -2.0 * Psi.imag
    return 0.5 * (Xu[1:] + Xu[:-1]), 0.5 * (Xv[:, 1:] + Xv[:, :-1])


def frame_integrate(
    Z,
    alg: LieAlgebra3,
    grid: Grid2D,
    f0: GroupElement | None = None,
    valid=None,
    H=None,
) -> FrameField:
    """Integrate ``f_z = f Psi`` along the row-then-column spanning tree.

    Each edge contributes one group exponential of the algebra element
    evaluated at the edge midpoint.  Plaquette holonomy is recorded, never
    averaged away.
    """
    Z = grid.check(np.asarray(Z, dtype=complex))
    valid = np.ones(grid.shape, bool) if valid is None else np.asarray(valid, bool)
    if not _tree_ok(valid):
        raise MaskError("invalid samples on the integration tree")
    model = representation(alg)
    Xu, Xv = _edge_elements(Z)
    Su = model_exp(alg, Xu, grid.du, model).m
    Sv = model_exp(alg, Xv, grid.dv, model).m
    n = model.gens.shape[-1]
    m0 = np.eye(n) if f0 is None else np.asarray(f0.m)
    f = kernels.tree_products(Su, Sv, m0, left=False)
    hol = kernels.plaquette_holonomy(Su, Sv, left=False)
    if model.chart != "su2":
        f = f.real
    return FrameField(GroupElement(f, model.chart), Z, grid, valid, hol, None if H is None else np.broadcast_to(H, grid.shape), model.layout)


def _tree_ok(valid: np.ndarray) -> bool:
    # the tree visits every sample; all of them must be valid
    return bool(valid.all())


def frame_from_tangents(f: np.ndarray, Psi: np.ndarray, alg: LieAlgebra3, grid: Grid2D, H=None, valid=None) -> FrameField:
    """Wrap analytically known immersion samples as a FrameField."""
    model = representation(alg)
    valid = np.ones(grid.shape, bool) if valid is None else valid
    return FrameField(GroupElement(np.asarray(f), model.chart), np.asarray(Psi, complex), grid, valid, None,
                      None if H is None else np.broadcast_to(H, grid.shape), model.layout)


def tangent_from_frames(ff: FrameField, alg: LieAlgebra3, mode: str = "fd") -> FrameField:
    """Recompute ``Psi = f^{-1} f_z`` from the reconstructed group samples.

    Diagnostics evaluated on the result measure the reconstructed surface
    itself rather than the input tangent data.
    """
    model = representation(alg)
    m = np.asarray(ff.f.m)
    fz = d_z(m, ff.grid, mode)
    X = np.linalg.solve(m, fz)
    Psi = algebra_components(model, X)
    if model.chart == "su2":
        # d_z of a unitary frame mixes the complexified generators; components are complex here
        Psi = _su2_components(model, X)
    return dataclasses.replace(ff, Psi=np.asarray(Psi, complex))


def _su2_components(model, X: np.ndarray) -> np.ndarray:
    # generators are anti-Hermitian multiples of Pauli matrices: project with the trace form
    G = model.gens
    norms = np.einsum("kab,kba->k", G, G)
    return np.einsum("...ab,kba->...k", X, G) / norms


def _nabla_terms(Psi: np.ndarray, alg: LieAlgebra3):
    conn = christoffel(alg)
    Ps = np.conj(Psi)
    return conn.nabla(Psi, Ps), conn.nabla(Ps, Psi)


def unit_normal(ff: FrameField) -> np.ndarray:
    """Unit normal ``x_u x x_v / |.|`` in the orthonormal frame."""
    tu = 2.0 * ff.Psi.real
    tv = -2.0 * ff.Psi.imag
    n = np.cross(tu, tv)
    nn = np.linalg.norm(n, axis=-1, keepdims=True)
    if np.any((nn[..., 0] < 1e-14) & ff.valid):
        raise DegenerateImmersionError("degenerate tangent plane")
    with np.errstate(invalid="ignore", divide="ignore"):
        return n / nn


def derivational_residual(ff: FrameField, alg: LieAlgebra3, H=None, mode: str = "fd"):
    """Left sides of the two derivational equations.

    ``r_minus = d Psi* - dbar Psi + nabla_Psi Psi* - nabla_Psi* Psi`` and
    ``r_plus = d Psi* + dbar Psi + nabla_Psi Psi* + nabla_Psi* Psi - e^{2a} H n``.
    """
    g = ff.grid
    Ps = ff.PsiStar
    a, b = _nabla_terms(ff.Psi, alg)
    dPs = d_z(Ps, g, mode)
    dbP = d_zbar(ff.Psi, g, mode)
    r_minus = dPs - dbP + a - b
    if H is None:
        H = ff.H if ff.H is not None else 0.0
    n = unit_normal(ff)
    r_plus = dPs + dbP + a + b - (ff.e2alpha * np.asarray(H))[..., None] * n
    return r_minus, r_plus


def mean_curvature(ff: FrameField, alg: LieAlgebra3, mode: str = "fd", return_residual: bool = False):
    """Mean curvature from the second derivational equation.

    ``H = <d Psi* + dbar Psi + nabla_Psi Psi* + nabla_Psi* Psi, n> / e^{2a}``.
    With ``return_residual`` the tangential part (relative to ``e^{2a}``) is
    also returned as a diagnostic.
    """
    e2a = ff.e2alpha
    if np.any((e2a <= 1e-12) & ff.valid):
        raise DegenerateImmersionError("degenerate metric")
    g = ff.grid
    a, b = _nabla_terms(ff.Psi, alg)
    lhs = d_z(ff.PsiStar, g, mode) + d_zbar(ff.Psi, g, mode) + a + b
    n = unit_normal(ff)
    proj = np.einsum("...i,...i", lhs, n)
    with np.errstate(invalid="ignore", divide="ignore"):
        H = proj.real / e2a
        if not return_residual:
            return H
        tang = lhs - proj[..., None] * n
        res = np.sqrt(np.sum(np.abs(tang) ** 2, axis=-1) + proj.imag**2) / e2a
    return H, res


# --------------------------------------------------------------------------
# coordinates and export


def group_coordinates(f: GroupElement, alg: LieAlgebra3) -> np.ndarray:
    """Three real coordinates read off the matrix model (chart-specific).

    unipotent: canonical coordinates of the first kind; affine: translation
    part plus the extension parameter; su2: stereographic projection of the
    first column; sl2r / adjoint: matrix entries.
    """
    m = np.asarray(f.m)
    model = representation(alg)
    chart = model.chart
    out = np.zeros(m.shape[:-2] + (3,))
    if chart == "unipotent":
        i, j, k, lam = model.layout
        x, y = m[..., 0, 1].real, m[..., 1, 2].real
        out[..., i] = x
        out[..., j] = y
        out[..., k] = lam * (m[..., 0, 2].real - 0.5 * x * y)
    elif chart == "affine5":
        if model.layout == ("abelian",):
            out[..., 0] = m[..., 0, 2]
            out[..., 1] = m[..., 1, 2]
            out[..., 2] = m[..., 3, 4]
        else:
            p, q, r = model.layout
            out[..., p] = m[..., 3, 4]
            out[..., q] = m[..., 0, 2]
            out[..., r] = m[..., 1, 2]
    elif chart == "affine":
        p, q, r = model.layout
        A = model.gens[p, :2, :2]
        out[..., q] = m[..., 0, 2]
        out[..., r] = m[..., 1, 2]
        blocks = m[..., :2, :2].reshape(-1, 2, 2)
        t = np.empty(blocks.shape[0])
        tr = np.trace(A)
        if abs(tr) > 1e-12:
            t[:] = np.log(np.linalg.det(blocks)) / tr
        else:
            AA = np.sum(A * A)
            for idx, blk in enumerate(blocks):
                L = scipy.linalg.logm(blk).real
                t[idx] = np.sum(L * A) / AA
        out[..., p] = t.reshape(m.shape[:-2])
    elif chart == "su2":
        a, b = m[..., 0, 0], m[..., 1, 0]
        den = 1.0 + a.real
        out[..., 0] = b.real / den
        out[..., 1] = b.imag / den
        out[..., 2] = a.imag / den
    else:
        out[..., 0] = m[..., 0, 0].real
        out[..., 1] = m[..., 0, 1].real
        out[..., 2] = m[..., 1, 0].real
    return out


def write_obj(coords: np.ndarray, path: str | Path, valid=None) -> tuple[int, int]:
    """Triangulated grid as Wavefront OBJ; faces touching invalid samples are omitted.

    Vertices are written in ``(iu, iv)`` row-major order.  Returns the
    vertex and face counts.
    """
    coords = np.asarray(coords, dtype=float)
    nu, nv = coords.shape[:2]
    valid = np.ones((nu, nv), bool) if valid is None else np.asarray(valid, bool)
    idx = np.arange(nu * nv).reshape(nu, nv) + 1
    faces = []
    for iu in range(nu - 1):
        for iv in range(nv - 1):
            a, b, c, d = idx[iu, iv], idx[iu + 1, iv], idx[iu + 1, iv + 1], idx[iu, iv + 1]
            if valid[iu, iv] and valid[iu + 1, iv] and valid[iu + 1, iv + 1]:
                faces.append((a, b, c))
            if valid[iu, iv] and valid[iu + 1, iv + 1] and valid[iu, iv + 1]:
                faces.append((a, c, d))
    with open(path, "w") as fh:
        for p in coords.reshape(-1, 3):
            fh.write("v %.17g %.17g %.17g\n" % tuple(np.nan_to_num(p)))
        for f in faces:
            fh.write("f %d %d %d\n" % f)
    return nu * nv, len(faces)


def export_mesh(ff: FrameField, alg: LieAlgebra3, path: str | Path) -> tuple[int, int]:
    return write_obj(group_coordinates(ff.f, alg), path, ff.valid)


def dump_frames(ff: FrameField, psi: SpinorField, path: str | Path) -> None:
    """Spinor binary dump with the frame matrix appended to every record."""
    write_binary(psi, ff.grid, path, matrices=ff.f.m)
