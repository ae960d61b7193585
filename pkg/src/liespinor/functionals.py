"""Spinor energy, geometric energy forms, Willmore functional, Gauss-Bonnet split.

The spinor energy integrates ``U V`` against the *coordinate* measure
``dx dy``; the geometric forms integrate against the induced area ``dmu``.
"""

from __future__ import annotations

import dataclasses
import json
import warnings

import numpy as np

from .spinfield import Grid2D, PotentialField, normalize_group, trapezoid_weights

__all__ = [
    "SurfaceMeasure",
    "Report",
    "OpenSurfaceWarning",
    "measure_from_metric",
    "spinor_energy",
    "energy_geometric",
    "willmore",
    "gauss_bonnet_decomposition",
    "principal_curvatures",
]


class OpenSurfaceWarning(UserWarning):
    pass


@dataclasses.dataclass(frozen=True, eq=False)
class SurfaceMeasure:
    dmu: np.ndarray
    chi: int | None = None

    def __post_init__(self) -> None:
        if np.any(np.asarray(self.dmu) < 0):
            raise ValueError("area weights must be non-negative")
        if self.chi is not None and self.chi not in (0, 2):
            raise ValueError("only spheres (chi=2) and tori (chi=0) are supported")

    @property
    def area(self) -> float:
        return float(np.sum(self.dmu))


@dataclasses.dataclass
class Report:
    group: str
    E_re: float
    E_im: float
    E_geometric: float | None = None
    W: float | None = None
    chi: int | None = None
    area: float | None = None
    grid: dict | None = None
    tolerances: dict | None = None
    extra: dict = dataclasses.field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True, indent=2, default=float)


def measure_from_metric(e_alpha, grid: Grid2D, chi: int | None = None, valid=None) -> SurfaceMeasure:
    """``dmu = e^{2 alpha} dx dy`` with trapezoid weights."""
    w = trapezoid_weights(grid) * np.asarray(e_alpha) ** 2
    if valid is not None:
        w = np.where(valid, w, 0.0)
    return SurfaceMeasure(w, chi)


def spinor_energy(pot: PotentialField, grid: Grid2D, closed: bool | None = None) -> complex:
    """``E = int U V dx dy`` (coordinate measure).

    ``closed`` defaults to double periodicity of the grid; otherwise the value
    is still returned but an :class:`OpenSurfaceWarning` is emitted.
    """
    if closed is None:
        closed = grid.periodic_u and grid.periodic_v
    if not closed:
        warnings.warn("spinor energy of an open patch", OpenSurfaceWarning, stacklevel=2)
    integrand = pot.U * pot.V
    if pot.valid is not None:
        integrand = np.where(pot.valid, integrand, 0.0)
    return complex(np.sum(integrand * trapezoid_weights(grid)))


def energy_geometric(H, Khat, meas: SurfaceMeasure, group: str) -> float:
    """Nil: ``1/4 int (H^2 + K/4 - 1/16)``; SL(2,R)~: ``1/4 int (H^2 + 5K/16 - 1/4)``;
    R^3: ``1/4 int H^2``."""
    g = normalize_group(group)
    H = np.asarray(H, float)
    K = np.asarray(Khat, float)
    if g == "R3":
        f = H**2
    elif g == "Nil":
        f = H**2 + K / 4 - 1.0 / 16
    elif g == "SL2R":
        f = H**2 + 5 * K / 16 - 0.25
    else:
        raise ValueError(f"no geometric energy form for {group!r}")
    return 0.25 * float(np.sum(f * meas.dmu))


def willmore(H, Khat, meas: SurfaceMeasure) -> float:
    """``W = int (H^2 + K) dmu`` with K the ambient sectional curvature of the tangent plane."""
    return float(np.sum((np.asarray(H, float) ** 2 + np.asarray(Khat, float)) * meas.dmu))


def principal_curvatures(H, A, e_alpha):
    """R^3 principal curvatures from H and the Hopf coefficient: ``H +- 2|A| e^{-2 alpha}``."""
    d = 2 * np.abs(A) / np.asarray(e_alpha) ** 2
    return np.asarray(H) + d, np.asarray(H) - d


def gauss_bonnet_decomposition(kappa1, kappa2, meas: SurfaceMeasure) -> tuple[float, float]:
    """``(1/4 int ((k1-k2)/2)^2 dmu, pi chi / 2)``; their sum is the R^3 spinor energy."""
    if meas.chi is None:
        raise ValueError("Euler characteristic unknown")
    defect = 0.25 * float(np.sum(((np.asarray(kappa1) - np.asarray(kappa2)) / 2) ** 2 * meas.dmu))
    return defect, np.pi * meas.chi / 2
