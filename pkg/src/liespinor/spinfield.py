"""Conformal grids, complex derivatives, generating spinors and Dirac potentials.

Samples are stored with shape ``(nu, nv)`` (optionally with trailing axes),
sample ``[iu, iv]`` sitting at ``z = origin + iu*du + 1j*iv*dv``.
"""

from __future__ import annotations

import dataclasses
from pathlib import Path

import numpy as np

from .liegeo import LieAlgebra3, christoffel

__all__ = [
    "Grid2D",
    "SpinorField",
    "PotentialField",
    "DegenerateImmersionError",
    "MaskedDomainError",
    "CsvParseError",
    "GROUPS",
    "d_u",
    "d_v",
    "d_z",
    "d_zbar",
    "factorize_Z",
    "induced_metric",
    "potentials",
    "connection_potentials",
    "dirac_residual",
    "quaternion_flip",
    "spinor_from_Z",
    "trapezoid_weights",
    "write_csv",
    "read_csv",
    "write_binary",
    "read_binary",
]

GROUPS = ("R3", "SU2", "Nil", "SL2R", "Sol", "Gmu")
_GROUP_ALIASES = {
    "r3": "R3",
    "e3": "R3",
    "i": "R3",
    "su2": "SU2",
    "s3": "SU2",
    "ix": "SU2",
    "nil": "Nil",
    "ii": "Nil",
    "sl2r": "SL2R",
    "viii": "SL2R",
    "sol": "Sol",
    "vi0": "Sol",
    "gmu": "Gmu",
}


def normalize_group(group: str) -> str:
    key = str(group).strip().lower().replace("_", "").replace("(", "").replace(")", "")
    if key not in _GROUP_ALIASES:
        raise ValueError(f"unknown group tag {group!r}")
    return _GROUP_ALIASES[key]


class DegenerateImmersionError(ValueError):
    """The induced metric vanishes somewhere it is required to be positive."""


class MaskedDomainError(ValueError):
    """An operation needs psi1 * psi2 != 0 but the data leave that domain."""


class CsvParseError(ValueError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


@dataclasses.dataclass(frozen=True)
class Grid2D:
    nu: int
    nv: int
    du: float
    dv: float
    periodic_u: bool = False
    periodic_v: bool = False
    origin: complex = 0j

    def __post_init__(self) -> None:
        if self.nu < 4 or self.nv < 4:
            raise ValueError("grids need at least 4 samples per direction")
        if not (self.du > 0 and self.dv > 0):
            raise ValueError("grid spacings must be positive")

    @classmethod
    def box(cls, u0: float, u1: float, v0: float, v1: float, nu: int, nv: int) -> "Grid2D":
        """Non-periodic grid including both end points."""
        return cls(nu, nv, (u1 - u0) / (nu - 1), (v1 - v0) / (nv - 1), origin=complex(u0, v0))

    @classmethod
    def torus(cls, lu: float, lv: float, nu: int, nv: int, origin: complex = 0j) -> "Grid2D":
        """Doubly periodic grid of periods ``lu``, ``lv`` (end point excluded)."""
        return cls(nu, nv, lu / nu, lv / nv, True, True, origin)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nu, self.nv)

    @property
    def u(self) -> np.ndarray:
        return self.origin.real + self.du * np.arange(self.nu)

    @property
    def v(self) -> np.ndarray:
        return self.origin.imag + self.dv * np.arange(self.nv)

    @property
    def z(self) -> np.ndarray:
        return self.u[:, None] + 1j * self.v[None, :]

    def check(self, field: np.ndarray) -> np.ndarray:
        field = np.asarray(field)
        if field.shape[:2] != self.shape:
            raise ValueError(f"field shape {field.shape[:2]} does not match grid {self.shape}")
        return field

    def refined(self, factor: int = 2) -> "Grid2D":
        """Same domain with spacing divided by ``factor``."""
        nu = self.nu * factor if self.periodic_u else (self.nu - 1) * factor + 1
        nv = self.nv * factor if self.periodic_v else (self.nv - 1) * factor + 1
        return dataclasses.replace(self, nu=nu, nv=nv, du=self.du / factor, dv=self.dv / factor)


def _diff(field: np.ndarray, h: float, axis: int, periodic: bool, mode: str) -> np.ndarray:
    if mode == "spectral":
        if not periodic:
            raise ValueError("spectral derivatives need a periodic direction")
        n = field.shape[axis]
        k = 2j * np.pi * np.fft.fftfreq(n, d=h)
        if n % 2 == 0:
            k[n // 2] = 0.0
        shape = [1] * field.ndim
        shape[axis] = n
        out = np.fft.ifft(np.fft.fft(field, axis=axis) * k.reshape(shape), axis=axis)
        return out if np.iscomplexobj(field) else out.real
    if mode != "fd":
        raise ValueError(f"unknown derivative mode {mode!r}")
    if periodic:
        return (np.roll(field, -1, axis) - np.roll(field, 1, axis)) / (2 * h)
    f = np.moveaxis(field, axis, 0)
    out = np.empty_like(f, dtype=np.result_type(f, float))
    out[1:-1] = (f[2:] - f[:-2]) / (2 * h)
    # central difference against a cubically extrapolated ghost sample: one-sided,
    # with the same leading error as the interior so nested derivatives stay O(h^2)
    out[0] = (-4 * f[0] + 7 * f[1] - 4 * f[2] + f[3]) / (2 * h)
    out[-1] = (4 * f[-1] - 7 * f[-2] + 4 * f[-3] - f[-4]) / (2 * h)
    return np.moveaxis(out, 0, axis)


def d_u(field, grid: Grid2D, mode: str = "fd") -> np.ndarray:
    f = grid.check(field)
    return _diff(f, grid.du, 0, grid.periodic_u, mode)


def d_v(field, grid: Grid2D, mode: str = "fd") -> np.ndarray:
    f = grid.check(field)
    return _diff(f, grid.dv, 1, grid.periodic_v, mode)


def d_z(field, grid: Grid2D, mode: str = "fd") -> np.ndarray:
    """``(d_u - i d_v) / 2``; central differences, one-sided at open edges."""
    return 0.5 * (d_u(field, grid, mode) - 1j * d_v(field, grid, mode))


def d_zbar(field, grid: Grid2D, mode: str = "fd") -> np.ndarray:
    """``(d_u + i d_v) / 2``."""
    return 0.5 * (d_u(field, grid, mode) + 1j * d_v(field, grid, mode))


def trapezoid_weights(grid: Grid2D) -> np.ndarray:
    """Cell weights for integrating over the grid with the coordinate measure."""
    wu = np.full(grid.nu, grid.du)
    wv = np.full(grid.nv, grid.dv)
    if not grid.periodic_u:
        wu[[0, -1]] *= 0.5
    if not grid.periodic_v:
        wv[[0, -1]] *= 0.5
    return wu[:, None] * wv[None, :]


@dataclasses.dataclass(frozen=True, eq=False)
class SpinorField:
    """Generating spinor samples with pointwise mean curvature and validity mask."""

    psi1: np.ndarray
    psi2: np.ndarray
    H: np.ndarray | float = 0.0
    valid: np.ndarray | None = None

    def __post_init__(self) -> None:
        p1 = np.asarray(self.psi1, dtype=complex)
        p2 = np.asarray(self.psi2, dtype=complex)
        if p1.shape != p2.shape:
            raise ValueError("psi1 and psi2 must have the same shape")
        H = np.broadcast_to(np.asarray(self.H, dtype=float), p1.shape).copy()
        valid = np.ones(p1.shape, bool) if self.valid is None else np.asarray(self.valid, bool)
        object.__setattr__(self, "psi1", p1)
        object.__setattr__(self, "psi2", p2)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "valid", np.broadcast_to(valid, p1.shape).copy())

    @property
    def shape(self) -> tuple[int, ...]:
        return self.psi1.shape

    def with_H(self, H) -> "SpinorField":
        return SpinorField(self.psi1, self.psi2, H, self.valid)


@dataclasses.dataclass(frozen=True, eq=False)
class PotentialField:
    U: np.ndarray
    V: np.ndarray
    group: str
    valid: np.ndarray | None = None

    def symmetry_residual(self) -> float:
        """Violation of the group's U/V symmetry (0 when the invariant holds)."""
        m = np.ones(np.shape(self.U), bool) if self.valid is None else self.valid
        U, V = self.U[m], self.V[m]
        if self.group == "R3":
            return float(max(np.max(np.abs(U - V), initial=0), np.max(np.abs(U.imag), initial=0)))
        if self.group == "Nil":
            return float(np.max(np.abs(U - V), initial=0))
        if self.group == "SU2":
            return float(np.max(np.abs(U - np.conj(V)), initial=0))
        return 0.0


def factorize_Z(psi: SpinorField) -> np.ndarray:
    """Tangent data ``Z = f^{-1} f_z`` in the frame, stacked on a trailing axis of length 3."""
    p1, p2b = psi.psi1, np.conj(psi.psi2)
    return np.stack([0.5j * (p2b**2 + p1**2), 0.5 * (p2b**2 - p1**2), p1 * p2b], axis=-1)


def induced_metric(psi: SpinorField, check: bool = True) -> np.ndarray:
    """Conformal factor ``e^alpha = |psi1|^2 + |psi2|^2``."""
    ea = np.abs(psi.psi1) ** 2 + np.abs(psi.psi2) ** 2
    if check:
        bad = (ea < 1e-12) & psi.valid
        if np.any(bad):
            idx = tuple(int(i) for i in np.argwhere(bad)[0])
            raise DegenerateImmersionError(f"e^alpha < 1e-12 at sample {idx}")
    return ea


def _sol_domain(psi: SpinorField) -> np.ndarray:
    return psi.valid & (np.abs(psi.psi1) > 1e-12) & (np.abs(psi.psi2) > 1e-12)


def potentials(psi: SpinorField, group: str, mu: float | None = None) -> PotentialField:
    """Dirac potentials ``(U, V)`` of the surface in the given group.

    Groups use their Weierstrass bases: Nil ``[e1,e2]=e3``; SU(2) the unit
    sphere; SL(2,R)~ the metric with Milnor constants (1/2, 1/2, -2); Sol and
    ``Gmu`` the family ``[e3,e1]=mu e1, [e3,e2]=e2``.  For Sol and Gmu the
    potentials are set to zero outside ``psi1 * psi2 != 0``, which is recorded
    in the returned validity mask.
    """
    g = normalize_group(group)
    p1, p2 = psi.psi1, psi.psi2
    a1, a2 = np.abs(p1) ** 2, np.abs(p2) ** 2
    ea = a1 + a2
    h = 0.5 * psi.H * ea
    valid = psi.valid.copy()
    if g == "R3":
        U = h.astype(complex)
        V = U.copy()
    elif g == "SU2":
        U = 0.5 * (psi.H - 1j) * ea
        V = np.conj(U)
    elif g == "Nil":
        U = h + 0.25j * (a2 - a1)
        V = U.copy()
    elif g == "SL2R":
        U = h + 1j * (0.5 * a1 - 0.75 * a2)
        V = h + 1j * (0.75 * a1 - 0.5 * a2)
    else:
        if g == "Sol":
            mu = -1.0
        if mu is None:
            raise ValueError("Gmu potentials need mu")
        valid = _sol_domain(psi)
        with np.errstate(divide="ignore", invalid="ignore"):
            U = h + (mu + 1) / 4 * a1 + (mu - 1) / 4 * np.conj(p2) ** 2 * np.conj(p1) / p1
            V = h - (mu + 1) / 4 * a2 - (mu - 1) / 4 * np.conj(p1) ** 2 * np.conj(p2) / p2
        U = np.where(valid, U, 0.0)
        V = np.where(valid, V, 0.0)
    return PotentialField(np.asarray(U, complex), np.asarray(V, complex), g, valid)


def connection_potentials(psi: SpinorField, alg: LieAlgebra3) -> PotentialField:
    """Potentials derived directly from the derivational equations of ``alg``.

    Independent of the closed-form table in :func:`potentials`: ``dbar Z`` is
    read off the second derivational equation and the potentials follow from
    ``dbar psi1 = V psi2`` and ``d psi2 = -U psi1``.  Defined where
    ``psi1 * psi2 != 0``.
    """
    Z = factorize_Z(psi)
    G = christoffel(alg).gamma
    c = alg.c
    ea = induced_metric(psi, check=False)
    n = -np.cross(Z.real, Z.imag)
    nn = np.linalg.norm(n, axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        n = n / nn
    sym = G + np.transpose(G, (0, 2, 1))
    S = np.einsum("ijk,...k,...j->...i", sym, Z, np.conj(Z))
    br = np.einsum("ikj,...k,...j->...i", c, Z, np.conj(Z))
    dbz = 0.5 * ((ea**2 * psi.H)[..., None] * n - S + br)
    valid = _sol_domain(psi)
    den = np.where(valid, 2 * psi.psi1 * psi.psi2, 1.0)
    V = (-1j * dbz[..., 0] - dbz[..., 1]) / den
    U = -(1j * np.conj(dbz[..., 0]) + np.conj(dbz[..., 1])) / den
    return PotentialField(np.where(valid, U, 0), np.where(valid, V, 0), alg.label, valid)


def dirac_residual(psi: SpinorField, pot: PotentialField, grid: Grid2D, mode: str = "fd"):
    """Rows of the Dirac equation: ``(d psi2 + U psi1, -dbar psi1 + V psi2)``.

    Samples outside the validity mask are NaN.
    """
    r1 = d_z(psi.psi2, grid, mode) + pot.U * psi.psi1
    r2 = -d_zbar(psi.psi1, grid, mode) + pot.V * psi.psi2
    mask = psi.valid if pot.valid is None else psi.valid & pot.valid
    return np.where(mask, r1, np.nan), np.where(mask, r2, np.nan)


def quaternion_flip(psi: SpinorField) -> SpinorField:
    """``psi* = (-conj psi2, conj psi1)``; applying it twice gives ``-psi``."""
    return SpinorField(-np.conj(psi.psi2), np.conj(psi.psi1), psi.H, psi.valid)


def _track(root: np.ndarray) -> np.ndarray:
    """Choose overall signs continuously along the row-then-column tree.

    ``root`` holds scalars or vectors (trailing axis) defined up to sign.
    """
    r = root.copy()

    def dist(a, b):
        return np.sum(np.abs(np.atleast_1d(a - b)) ** 2)

    def fix_line(line: np.ndarray) -> None:
        for k in range(1, line.shape[0]):
            pred = line[k - 1] if k == 1 else 2 * line[k - 1] - line[k - 2]
            if dist(line[k], pred) > dist(-line[k], pred):
                line[k] = -line[k]

    fix_line(r[:, 0])
    for iu in range(r.shape[0]):
        fix_line(r[iu])
    return r


def spinor_from_Z(Z: np.ndarray, H=0.0, valid=None) -> SpinorField:
    """Invert :func:`factorize_Z` with continuous branch choice.

    ``psi1^2 = -i Z1 - Z2`` and ``conj(psi2)^2 = Z2 - i Z1``; the relative sign
    is fixed pointwise by ``Z3 = psi1 conj(psi2)``.
    """
    Z = np.asarray(Z, dtype=complex)
    p1 = np.sqrt(-1j * Z[..., 0] - Z[..., 1])
    q = np.sqrt(Z[..., 1] - 1j * Z[..., 0])
    # relative sign pointwise from Z3, then the pair is tracked as one vector
    flip = np.abs(p1 * q + Z[..., 2]) < np.abs(p1 * q - Z[..., 2])
    q = np.where(flip, -q, q)
    pair = _track(np.stack([p1, q], axis=-1))
    p1, q = pair[..., 0], pair[..., 1]
    return SpinorField(p1, np.conj(q), H, valid)


# --------------------------------------------------------------------------
# serialization

_CSV_HEADER = "iu,iv,re_psi1,im_psi1,re_psi2,im_psi2,H,valid"


def write_csv(psi: SpinorField, grid: Grid2D, path: str | Path) -> None:
    grid.check(psi.psi1)
    iu, iv = np.meshgrid(np.arange(grid.nu), np.arange(grid.nv), indexing="ij")
    with open(path, "w") as fh:
        fh.write(
            "# grid %d %d %.17g %.17g %d %d %.17g %.17g\n"
            % (
                grid.nu,
                grid.nv,
                grid.du,
                grid.dv,
                grid.periodic_u,
                grid.periodic_v,
                grid.origin.real,
                grid.origin.imag,
            )
        )
        fh.write(_CSV_HEADER + "\n")
        for a, b in zip(iu.ravel(), iv.ravel()):
            p1, p2 = psi.psi1[a, b], psi.psi2[a, b]
            fh.write(
                "%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n"
                % (a, b, p1.real, p1.imag, p2.real, p2.imag, psi.H[a, b], psi.valid[a, b])
            )


def read_csv(path: str | Path) -> tuple[SpinorField, Grid2D]:
    """Read a spinor CSV; errors carry the offending line number."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith("# grid"):
        raise CsvParseError(1, "missing '# grid' metadata line")
    try:
        meta = lines[0].split()[2:]
        nu, nv = int(meta[0]), int(meta[1])
        grid = Grid2D(
            nu, nv, float(meta[2]), float(meta[3]), bool(int(meta[4])), bool(int(meta[5])),
            complex(float(meta[6]), float(meta[7])),
        )
    except (IndexError, ValueError) as exc:
        raise CsvParseError(1, f"bad grid metadata ({exc})") from None
    if len(lines) < 2 or lines[1].strip() != _CSV_HEADER:
        raise CsvParseError(2, "unexpected column header")
    data = np.zeros((nu, nv, 6))
    seen = np.zeros((nu, nv), bool)
    for lineno, line in enumerate(lines[2:], start=3):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 8:
            raise CsvParseError(lineno, f"expected 8 columns, found {len(parts)}")
        try:
            a, b = int(parts[0]), int(parts[1])
            vals = [float(x) for x in parts[2:]]
        except ValueError as exc:
            raise CsvParseError(lineno, str(exc)) from None
        if not (0 <= a < nu and 0 <= b < nv):
            raise CsvParseError(lineno, f"index ({a}, {b}) outside the grid")
        data[a, b] = vals
        seen[a, b] = True
    if not seen.all():
        raise CsvParseError(len(lines), "missing samples")
    psi = SpinorField(
        data[..., 0] + 1j * data[..., 1], data[..., 2] + 1j * data[..., 3], data[..., 4], data[..., 5] != 0
    )
    return psi, grid


_MAGIC = b"SPN1"


def _grid_header(grid: Grid2D, extra: float = 0.0) -> np.ndarray:
    return np.array(
        [grid.nu, grid.nv, grid.du, grid.dv, grid.periodic_u, grid.periodic_v,
         grid.origin.real, grid.origin.imag, extra],
        dtype="<f8",
    )


def write_binary(psi: SpinorField, grid: Grid2D, path: str | Path, matrices: np.ndarray | None = None) -> None:
    """Compact dump: ``SPN1`` magic, a 9-double header, then per-sample records.

    Each record holds Re/Im psi1, Re/Im psi2, H and valid; when ``matrices``
    (shape ``(nu, nv, n, n)``) is given, Re/Im of the matrix follow row-major.
    """
    n = 0 if matrices is None else matrices.shape[-1]
    rec = [psi.psi1.real, psi.psi1.imag, psi.psi2.real, psi.psi2.imag, psi.H, psi.valid.astype(float)]
    body = np.stack(rec, axis=-1)
    if matrices is not None:
        m = np.asarray(matrices, dtype=complex).reshape(grid.nu, grid.nv, n * n)
        body = np.concatenate([body, m.real, m.imag], axis=-1)
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(_grid_header(grid, n).tobytes())
        fh.write(np.ascontiguousarray(body, dtype="<f8").tobytes())


def read_binary(path: str | Path):
    """Inverse of :func:`write_binary`; returns ``(psi, grid, matrices or None)``."""
    raw = Path(path).read_bytes()
    if raw[:4] != _MAGIC:
        raise ValueError("not an SPN1 file")
    head = np.frombuffer(raw[4 : 4 + 72], dtype="<f8")
    nu, nv, n = int(head[0]), int(head[1]), int(head[8])
    grid = Grid2D(nu, nv, head[2], head[3], bool(head[4]), bool(head[5]), complex(head[6], head[7]))
    width = 6 + 2 * n * n
    body = np.frombuffer(raw[76:], dtype="<f8")
    if body.size != nu * nv * width:
        raise ValueError("truncated SPN1 file")
    body = body.reshape(nu, nv, width)
    psi = SpinorField(body[..., 0] + 1j * body[..., 1], body[..., 2] + 1j * body[..., 3], body[..., 4], body[..., 5] != 0)
    mats = None
    if n:
        mats = (body[..., 6 : 6 + n * n] + 1j * body[..., 6 + n * n :]).reshape(nu, nv, n, n)
    return psi, grid, mats
