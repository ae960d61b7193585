"""Hopf-type quadratic differentials and their holomorphicity diagnostics."""

from __future__ import annotations

import dataclasses

import numpy as np

from .liegeo import LieAlgebra3, christoffel, nil, sl2r
from .spinfield import Grid2D, SpinorField, d_z, d_zbar, factorize_Z, normalize_group

__all__ = [
    "QuadDifferential",
    "hopf_A",
    "tilde_A",
    "abresch_rosenberg",
    "holomorphicity_residual",
    "gauss_codazzi_residual",
]


@dataclasses.dataclass(frozen=True, eq=False)
class QuadDifferential:
    """Coefficient of dz^2 in the grid chart."""

    A: np.ndarray
    kind: str
    valid: np.ndarray | None = None


def _spinor_normal(Z: np.ndarray) -> np.ndarray:
    n = np.cross(2.0 * Z.real, -2.0 * Z.imag)
    with np.errstate(invalid="ignore", divide="ignore"):
        return n / np.linalg.norm(n, axis=-1, keepdims=True)


def hopf_A(psi: SpinorField, grid: Grid2D, variant: str = "corrected", mode: str = "fd",
           alg: LieAlgebra3 | None = None) -> QuadDifferential:
    """Hopf differential ``<nabla_{f_z} f_z, N>`` from the spinor.

    ``variant="corrected"``: ``conj(psi2) d psi1 - psi1 d conj(psi2)``, which
    equals ``<d Z, N>`` (the full coefficient ``<x_zz, N>`` in R^3).
    ``variant="printed"``: the same with ``psi2 d conj(psi2)`` as the second
    term.  With an ambient algebra ``alg`` the connection part
    ``<nabla_Z Z, N>`` of the left-invariant metric is added (for Nil in
    its standard basis this is ``Z3 (Z2 N1 - Z1 N2)``).
    """
    p2b = np.conj(psi.psi2)
    d1 = d_z(psi.psi1, grid, mode)
    d2b = d_z(p2b, grid, mode)
    if variant == "corrected":
        A = p2b * d1 - psi.psi1 * d2b
    elif variant == "printed":
        A = p2b * d1 - psi.psi2 * d2b
    else:
        raise ValueError(f"unknown variant {variant!r}")
    if alg is not None:
        Z = factorize_Z(psi)
        A = A + np.einsum("...i,...i", christoffel(alg).nabla(Z, Z), _spinor_normal(Z))
    return QuadDifferential(A, "hopf", psi.valid)


def tilde_A(psi: SpinorField, grid: Grid2D, group: str, H=None, variant: str = "corrected", mode: str = "fd") -> QuadDifferential:
    """Generalised differential: Nil ``A + Z3^2/(2H+i)``; SL(2,R)~ ``A + 5 Z3^2/(2(H-i))``.

    ``A`` is the Hopf coefficient in the ambient metric (:func:`hopf_A` with
    the group's algebra).
    """
    g = normalize_group(group)
    H = psi.H if H is None else np.broadcast_to(np.asarray(H, float), psi.shape)
    Z3 = factorize_Z(psi)[..., 2]
    if g == "Nil":
        A = hopf_A(psi, grid, variant, mode, nil()).A
        At = A + Z3**2 / (2 * H + 1j)
    elif g == "SL2R":
        A = hopf_A(psi, grid, variant, mode, sl2r()).A
        At = A + 5 * Z3**2 / (2 * (H - 1j))
    else:
        raise ValueError(f"no generalised Hopf differential for {group!r}")
    return QuadDifferential(At, "tildeA", psi.valid)


def abresch_rosenberg(tA: QuadDifferential, H, tau: float = 0.5) -> QuadDifferential:
    """``A_AR = (H + i tau) tilde_A``.  ``tau`` is the bundle curvature (caller supplied)."""
    if tA.kind != "tildeA":
        raise ValueError("abresch_rosenberg expects a tildeA differential")
    return QuadDifferential((np.asarray(H) + 1j * tau) * tA.A, "AR", tA.valid)


def holomorphicity_residual(qd: QuadDifferential, grid: Grid2D, margin: int = 1, mode: str = "fd") -> float:
    """Max of ``|dbar A|`` over valid samples at least ``margin`` away from open edges."""
    r = np.abs(d_zbar(qd.A, grid, mode))
    mask = np.ones(grid.shape, bool) if qd.valid is None else qd.valid.copy()
    if margin:
        if not grid.periodic_u:
            mask[:margin] = mask[-margin:] = False
        if not grid.periodic_v:
            mask[:, :margin] = mask[:, -margin:] = False
    return float(np.max(r[mask], initial=0.0))


def gauss_codazzi_residual(alpha, U, A, grid: Grid2D, mode: str = "fd"):
    """R^3 Gauss and Codazzi residuals.

    gauss = ``alpha_{z zbar} + U^2 - |A|^2 e^{-2 alpha}``,
    codazzi = ``A_zbar - (U_z - alpha_z U) e^alpha``.
    """
    alpha = np.asarray(alpha, dtype=float)
    U = np.asarray(U)
    if np.iscomplexobj(U):
        U = U.real
    A = np.asarray(A, dtype=complex)
    a_zzb = d_z(d_zbar(alpha, grid, mode), grid, mode).real
    gauss = a_zzb + U**2 - np.abs(A) ** 2 * np.exp(-2 * alpha)
    codazzi = d_zbar(A, grid, mode) - (d_z(U, grid, mode) - d_z(alpha, grid, mode) * U) * np.exp(alpha)
    return gauss, codazzi
