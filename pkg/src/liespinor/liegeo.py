"""Three-dimensional real Lie algebras with left-invariant metrics.

Structure constants are stored as ``c[k, i, j] = c^k_{ij}`` so that
``[e_i, e_j] = sum_k c[k, i, j] e_k`` in an orthonormal basis.  The
Levi-Civita connection is ``nabla_{e_k} e_j = gamma[i, j, k] e_i``.

Every algebra carries a faithful matrix model used for reconstruction:

* Heisenberg-type algebras use 3x3 unipotent matrices,
* algebras with a two-dimensional abelian ideal use affine matrices
  ``[[exp(tA), s], [0, 1]]`` (with an extra 2x2 block tracking ``t`` when
  ``exp(tA)`` is not injective),
* semisimple algebras in a Milnor frame use 2x2 matrices (SU(2) or SL(2, R)),
  and fall back to the adjoint representation otherwise.
"""

from __future__ import annotations

import dataclasses
import warnings
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.linalg

__all__ = [
    "BIANCHI_TABLE",
    "LieAlgebra3",
    "Connection3",
    "GroupElement",
    "UnknownAlgebraError",
    "DegeneratePlaneError",
    "bianchi_algebra",
    "gmu_algebra",
    "adjoint_extension",
    "from_brackets",
    "euclidean",
    "nil",
    "su2",
    "sl2r",
    "sol",
    "hyperbolic",
    "weierstrass_basis",
    "permuted",
    "christoffel",
    "curvature_tensor",
    "sectional_curvature",
    "plane_curvature",
    "representation",
    "model_exp",
    "algebra_components",
    "classify",
    "load_algebra",
]


class UnknownAlgebraError(ValueError):
    """Raised for unknown classification tags or out-of-range parameters."""


class DegeneratePlaneError(ValueError):
    """Raised when a sectional curvature is requested on a degenerate plane."""


# type: (a, b1, b2, b3); a=None marks the parametrised rows
BIANCHI_TABLE: dict[str, tuple[float | None, int, int, int]] = {
    "I": (0.0, 0, 0, 0),
    "II": (0.0, 1, 0, 0),
    "III": (1.0, 0, 1, -1),
    "IV": (1.0, 0, 0, 1),
    "V": (1.0, 0, 0, 0),
    "VI0": (0.0, 1, -1, 0),
    "VIa": (None, 0, 1, -1),
    "VII0": (0.0, 1, 1, 0),
    "VIIa": (None, 0, 1, 1),
    "VIII": (0.0, 1, 1, -1),
    "IX": (0.0, 1, 1, 1),
}

_TAG_ALIASES = {
    "R3": "I",
    "E3": "I",
    "NIL": "II",
    "SOL": "VI0",
    "E2": "VII0",
    "SL2R": "VIII",
    "SU2": "IX",
}


def _normalize_tag(tag: str) -> str:
    t = str(tag).strip().upper().replace("_", "").replace(" ", "")
    t = _TAG_ALIASES.get(t, t)
    if t in ("VIA", "VIIA"):
        t = t[:-1] + "a"
    if t not in BIANCHI_TABLE:
        raise UnknownAlgebraError(f"unknown Bianchi type {tag!r}")
    return t


@dataclasses.dataclass(frozen=True, eq=False)
class LieAlgebra3:
    """Structure constants of a 3D Lie algebra in an orthonormal basis."""

    c: np.ndarray
    label: str
    scale: float = 1.0
    basis: str = "table"
    params: dict = dataclasses.field(default_factory=dict)
    notes: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        c = np.array(self.c, dtype=float)
        if c.shape != (3, 3, 3):
            raise ValueError("structure constants must have shape (3, 3, 3)")
        c.setflags(write=False)
        object.__setattr__(self, "c", c)

    def bracket(self, x, y) -> np.ndarray:
        """Lie bracket of frame vectors (broadcasts over leading axes)."""
        return np.einsum("kij,...i,...j->...k", self.c, np.asarray(x), np.asarray(y))

    def ad(self, i: int) -> np.ndarray:
        return self.c[:, i, :].copy()

    def antisymmetry_residual(self) -> float:
        return float(np.max(np.abs(self.c + np.transpose(self.c, (0, 2, 1)))))

    def jacobi_residual(self) -> float:
        e = np.eye(3)
        worst = 0.0
        for i in range(3):
            for j in range(3):
                for k in range(3):
                    x, y, z = e[i], e[j], e[k]
                    r = (
                        self.bracket(x, self.bracket(y, z))
                        + self.bracket(y, self.bracket(z, x))
                        + self.bracket(z, self.bracket(x, y))
                    )
                    worst = max(worst, float(np.max(np.abs(r))))
        return worst

    def is_abelian(self) -> bool:
        return not np.any(self.c)

    def scaled(self, factor: float) -> "LieAlgebra3":
        return dataclasses.replace(self, c=self.c * factor, scale=self.scale * factor)

    def __repr__(self) -> str:
        nz = {
            (i + 1, j + 1): tuple(np.round(self.c[:, i, j], 12))
            for i in range(3)
            for j in range(i + 1, 3)
            if np.any(self.c[:, i, j])
        }
        return f"LieAlgebra3(label={self.label!r}, basis={self.basis!r}, brackets={nz})"


def from_brackets(brackets: dict, label: str = "custom", **kw) -> LieAlgebra3:
    """Build an algebra from ``{(i, j): vector}`` with zero-based indices."""
    c = np.zeros((3, 3, 3))
    for (i, j), v in brackets.items():
        v = np.asarray(v, dtype=float)
        c[:, i, j] += v
        c[:, j, i] -= v
    return LieAlgebra3(c, label, **kw)


def bianchi_algebra(tag: str, a: float | None = None, scale: float = 1.0) -> LieAlgebra3:
    """Table representative of a Bianchi type.

    ``a`` is only used for ``VIa`` (0 < a, a != 1) and ``VIIa`` (a > 0).
    """
    t = _normalize_tag(tag)
    a0, b1, b2, b3 = BIANCHI_TABLE[t]
    if a0 is None:
        if a is None:
            raise UnknownAlgebraError(f"type {t} needs the parameter a")
        a = float(a)
        if t == "VIa" and not (0 < a < np.inf and a != 1):
            raise UnknownAlgebraError("VI_a requires 0 < a < inf, a != 1")
        if t == "VIIa" and not a > 0:
            raise UnknownAlgebraError("VII_a requires a > 0")
        a0 = a
    alg = from_brackets(
        {
            (0, 1): [0.0, a0, b3],
            (0, 2): [0.0, -b2, a0],
            (1, 2): [b1, 0.0, 0.0],
        },
        label=t,
        params={"a": a0},
    )
    return alg.scaled(scale) if scale != 1.0 else alg


def gmu_algebra(mu: float) -> LieAlgebra3:
    """The family ``[e1,e2]=0, [e3,e1]=mu e1, [e3,e2]=e2``."""
    mu = float(mu)
    notes: tuple[str, ...] = ()
    if not -1.0 <= mu <= 1.0:
        warnings.warn(f"G_mu with mu={mu} outside [-1, 1]; groups are no longer pairwise distinct")
        notes = ("mu-out-of-range",)
    return from_brackets(
        {(2, 0): [mu, 0.0, 0.0], (2, 1): [0.0, 1.0, 0.0]},
        label="Gmu",
        basis="weierstrass",
        params={"mu": mu},
        notes=notes,
    )


def adjoint_extension(A) -> LieAlgebra3:
    """Semidirect product R^2 x_A R with orthonormal basis (d/dt, d/ds1, d/ds2)."""
    A = np.asarray(A, dtype=float)
    if A.shape != (2, 2):
        raise ValueError("A must be 2x2")
    alg = from_brackets(
        {(0, 1): [0.0, A[0, 0], A[1, 0]], (0, 2): [0.0, A[0, 1], A[1, 1]]},
        label="ext",
        params={"A": A.tolist()},
    )
    return dataclasses.replace(alg, label=classify(alg))


def euclidean() -> LieAlgebra3:
    return dataclasses.replace(bianchi_algebra("I"), basis="weierstrass")


def nil() -> LieAlgebra3:
    """Nil with ``[e1, e2] = e3``; e3 is the rotation axis."""
    return from_brackets({(0, 1): [0.0, 0.0, 1.0]}, label="II", basis="weierstrass")


def su2(radius: float = 1.0) -> LieAlgebra3:
    """SU(2) as the round sphere of the given radius, ``[e_i, e_j] = (2/r) e_k``."""
    return dataclasses.replace(bianchi_algebra("IX", scale=2.0 / radius), basis="weierstrass")


def sl2r() -> LieAlgebra3:
    """SL(2,R)~ with the E(-1, 1) metric (Milnor constants 1/2, 1/2, -2)."""
    return from_brackets(
        {(1, 2): [0.5, 0.0, 0.0], (2, 0): [0.0, 0.5, 0.0], (0, 1): [0.0, 0.0, -2.0]},
        label="VIII",
        basis="weierstrass",
    )


def sol() -> LieAlgebra3:
    return dataclasses.replace(gmu_algebra(-1.0), label="VI0")


def hyperbolic() -> LieAlgebra3:
    return dataclasses.replace(gmu_algebra(1.0), label="V")


def permuted(alg: LieAlgebra3, perm: Sequence[int], signs: Sequence[int] = (1, 1, 1), **kw) -> LieAlgebra3:
    """Relabel the basis: new ``e'_a = signs[a] * e_{perm[a]}``."""
    Q = np.zeros((3, 3))
    for a in range(3):
        Q[perm[a], a] = signs[a]
    Qi = np.linalg.inv(Q)
    c = np.einsum("ak,kij,ib,jc->abc", Qi, alg.c, Q, Q)
    return dataclasses.replace(alg, c=c, **kw)


def weierstrass_basis(alg: LieAlgebra3) -> tuple[LieAlgebra3, tuple[int, int, int]]:
    """Move the distinguished (rotation-axis) direction of a table algebra to e3.

    Returns the relabelled algebra and the permutation ``perm`` with
    ``e^W_a = e^table_{perm[a]}``.
    """
    if alg.basis == "weierstrass":
        return alg, (0, 1, 2)
    if alg.label in ("II", "VI0", "VII0"):
        # the table puts the distinguished direction in e1 ([e2,e3] = b1 e1)
        perm = (1, 2, 0)
    else:
        perm = (0, 1, 2)
    return permuted(alg, perm, basis="weierstrass"), perm


# --------------------------------------------------------------------------
# connection and curvature


@dataclasses.dataclass(frozen=True, eq=False)
class Connection3:
    """Christoffel symbols with ``nabla_{e_k} e_j = gamma[i, j, k] e_i``."""

    gamma: np.ndarray

    def nabla(self, x, y) -> np.ndarray:
        """``nabla_x y`` for constant-coefficient frame vectors (complex-linear)."""
        return np.einsum("ijk,...k,...j->...i", self.gamma, np.asarray(x), np.asarray(y))

    def compatibility_residual(self) -> float:
        return float(np.max(np.abs(self.gamma + np.transpose(self.gamma, (1, 0, 2)))))


def christoffel(alg: LieAlgebra3) -> Connection3:
    c = alg.c
    # gamma^i_{jk} = (c^i_{kj} + c^j_{ik} + c^k_{ij}) / 2
    g = 0.5 * (
        np.transpose(c, (0, 2, 1))  # c[i,k,j] at [i,j,k]
        + np.transpose(c, (1, 0, 2))  # c[j,i,k] at [i,j,k]
        + np.transpose(c, (1, 2, 0))  # c[k,i,j] at [i,j,k]
    )
    return Connection3(g)


def curvature_tensor(alg: LieAlgebra3) -> np.ndarray:
    """``R[i, j, k, l] = <R(e_i, e_j) e_k, e_l>`` with
    ``R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z``."""
    g = christoffel(alg).gamma
    # N[a][m, b]: coefficient of e_m in nabla_{e_a} e_b
    N = np.transpose(g, (2, 0, 1))
    R = np.empty((3, 3, 3, 3))
    for i in range(3):
        for j in range(3):
            op = N[i] @ N[j] - N[j] @ N[i] - np.einsum("m,mab->ab", alg.c[:, i, j], N)
            R[i, j] = op.T
    return R


def sectional_curvature(alg: LieAlgebra3, X, Y, R: np.ndarray | None = None) -> np.ndarray:
    """Sectional curvature of span(X, Y); broadcasts over leading axes."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if R is None:
        R = curvature_tensor(alg)
    num = np.einsum("ijkl,...i,...j,...k,...l->...", R, X, Y, Y, X)
    den = np.einsum("...i,...i", X, X) * np.einsum("...i,...i", Y, Y) - np.einsum("...i,...i", X, Y) ** 2
    if np.any(den < 1e-14):
        raise DegeneratePlaneError("plane spanned by X, Y is degenerate")
    out = num / den
    return out if out.ndim else float(out)


def plane_curvature(alg: LieAlgebra3, normal, R: np.ndarray | None = None) -> np.ndarray:
    """Sectional curvature of the plane orthogonal to ``normal``."""
    n = np.asarray(normal, dtype=float)
    n = n / np.linalg.norm(n, axis=-1, keepdims=True)
    helper = np.where(np.abs(n[..., :1]) < 0.9, np.array([1.0, 0, 0]), np.array([0, 1.0, 0]))
    X = np.cross(n, helper)
    X /= np.linalg.norm(X, axis=-1, keepdims=True)
    Y = np.cross(n, X)
    return sectional_curvature(alg, X, Y, R=R)


# --------------------------------------------------------------------------
# matrix models


@dataclasses.dataclass(frozen=True, eq=False)
class GroupElement:
    """Group element(s) in a faithful matrix model; ``m`` may be batched."""

    m: np.ndarray
    chart: str
    winding: int | np.ndarray = 0

    def check(self, tol: float = 1e-12) -> float:
        """Largest violation of the model-subgroup invariant."""
        return _model_violation(self.m, self.chart)


def _model_violation(m: np.ndarray, chart: str) -> float:
    m = np.asarray(m)
    n = m.shape[-1]
    eye = np.eye(n)
    if chart == "unipotent":
        low = np.tril(m, 0) - eye
        return float(np.max(np.abs(low)))
    if chart == "affine":
        return float(np.max(np.abs(m[..., -1, :] - eye[-1])))
    if chart == "affine5":
        mask = np.ones((5, 5), bool)
        mask[:3, :3] = False
        mask[3:, 3:] = False
        bad = np.max(np.abs(m[..., mask]))
        rows = np.max(np.abs(m[..., 2, :3] - eye[2, :3]))
        unip = np.max(np.abs(m[..., 3:, 3:] - np.array([[1.0, m[..., 3, 4].flat[0]], [0, 1]])))
        return float(max(bad, rows, unip)) if m.ndim == 2 else float(max(bad, rows))
    if chart == "su2":
        u = m @ np.conj(np.swapaxes(m, -1, -2)) - eye
        return float(max(np.max(np.abs(u)), np.max(np.abs(np.linalg.det(m) - 1))))
    if chart in ("sl2r", "adjoint"):
        return float(np.max(np.abs(np.linalg.det(m) - 1)))
    raise UnknownAlgebraError(f"no invariant registered for chart {chart!r}")


@dataclasses.dataclass(frozen=True, eq=False)
class _Model:
    gens: np.ndarray  # (3, n, n)
    chart: str
    layout: tuple = ()


def _heisenberg(alg: LieAlgebra3):
    nz = np.argwhere(np.abs(alg.c) > 0)
    for k, i, j in nz:
        if i < j and k not in (i, j):
            lam = alg.c[k, i, j]
            expect = np.zeros_like(alg.c)
            expect[k, i, j] = lam
            expect[k, j, i] = -lam
            if np.allclose(alg.c, expect, atol=0):
                return int(i), int(j), int(k), float(lam)
    return None


def _abelian_ideal(alg: LieAlgebra3):
    c = alg.c
    for p in range(3):
        q, r = [x for x in range(3) if x != p]
        if np.any(c[:, q, r]) or c[p, p, q] or c[p, p, r]:
            continue
        A = np.array([[c[q, p, q], c[q, p, r]], [c[r, p, q], c[r, p, r]]])
        return p, q, r, A
    return None


def _milnor(alg: LieAlgebra3):
    c = alg.c
    lam = np.array([c[0, 1, 2], c[1, 2, 0], c[2, 0, 1]])
    expect = from_brackets(
        {(1, 2): [lam[0], 0, 0], (2, 0): [0, lam[1], 0], (0, 1): [0, 0, lam[2]]}
    ).c
    if np.allclose(c, expect, atol=0) and np.all(lam != 0):
        return lam
    return None


def representation(alg: LieAlgebra3) -> _Model:
    """Faithful matrix generators ``R_k`` with ``[R_i, R_j] = c^k_{ij} R_k``."""
    if alg.is_abelian():
        gens = np.zeros((3, 5, 5))
        # translations in the affine block, third direction tracked in the 2x2 block
        gens[0, 0, 2] = 1.0
        gens[1, 1, 2] = 1.0
        gens[2, 3, 4] = 1.0
        return _Model(gens, "affine5", ("abelian",))
    h = _heisenberg(alg)
    if h is not None:
        i, j, k, lam = h
        gens = np.zeros((3, 3, 3))
        gens[i, 0, 1] = 1.0
        gens[j, 1, 2] = 1.0
        gens[k, 0, 2] = 1.0 / lam
        return _Model(gens, "unipotent", (i, j, k, lam))
    ideal = _abelian_ideal(alg)
    if ideal is not None:
        p, q, r, A = ideal
        ev = np.linalg.eigvals(A)
        periodic = np.allclose(ev.real, 0.0) and not np.allclose(ev, 0.0)
        n = 5 if periodic else 3
        gens = np.zeros((3, n, n))
        gens[p, :2, :2] = A
        gens[q, 0, 2] = 1.0
        gens[r, 1, 2] = 1.0
        if periodic:
            gens[p, 3, 4] = 1.0
        return _Model(gens, "affine5" if periodic else "affine", (p, q, r))
    lam = _milnor(alg)
    if lam is not None:
        s = np.sign(lam)
        if np.all(s == s[0]):
            pauli = np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]], dtype=complex)
            a = np.array(
                [np.sqrt(lam[1] * lam[2]), np.sqrt(lam[0] * lam[2]), np.sqrt(lam[0] * lam[1])]
            ) * s[0]
            gens = np.array([a[k] * (-0.5j) * pauli[k] for k in range(3)])
            return _Model(gens, "su2", tuple(lam))
        # exactly one sign differs: put it in the slot of the rotation generator
        odd = int(np.argmax(s != np.median(s)))
        base = {
            "sym": np.array([[1.0, 0], [0, -1]]) / 2,
            "off": np.array([[0.0, 1], [1, 0]]) / 2,
            "rot": np.array([[0.0, -1], [1, 0]]) / 2,
        }
        i1, i2 = [x for x in range(3) if x != odd]
        # base relations: [sym, off] = -rot, [off, rot] = sym, [rot, sym] = off
        l1, l2, l3 = lam[i1], lam[i2], lam[odd]
        orient = 1.0 if (i1, i2, odd) in ((0, 1, 2), (1, 2, 0), (2, 0, 1)) else -1.0
        l3 = l3 * orient
        a3 = np.sqrt(l1 * l2)
        a2 = np.sqrt(-l1 * l3)
        a1 = np.sqrt(-l2 * l3)
        if l1 < 0:
            a3 = -a3
        gens = np.zeros((3, 2, 2))
        gens[i1] = a1 * base["sym"]
        gens[i2] = a2 * base["off"]
        gens[odd] = orient * a3 * base["rot"]
        if _rep_residual(alg, gens) < 1e-12:
            return _Model(gens, "sl2r", tuple(lam))
    gens = np.array([alg.ad(k) for k in range(3)])
    if np.linalg.matrix_rank(gens.reshape(3, -1)) == 3:
        return _Model(gens, "adjoint", ())
    raise UnknownAlgebraError(f"no matrix model registered for {alg.label!r}")


def _rep_residual(alg: LieAlgebra3, gens: np.ndarray) -> float:
    worst = 0.0
    for i in range(3):
        for j in range(3):
            lhs = gens[i] @ gens[j] - gens[j] @ gens[i]
            rhs = np.einsum("k,kab->ab", alg.c[:, i, j], gens)
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst


def model_exp(alg: LieAlgebra3, xi, h: float = 1.0, model: _Model | None = None) -> GroupElement:
    """``exp(h * xi)`` in the matrix model; ``xi`` may be batched ``(..., 3)``."""
    model = model or representation(alg)
    xi = np.asarray(xi)
    X = h * np.einsum("...k,kab->...ab", xi, model.gens)
    return GroupElement(scipy.linalg.expm(X), model.chart)


def algebra_components(model: _Model, M: np.ndarray) -> np.ndarray:
    """Frame components of algebra matrices ``M`` (least squares on the generators)."""
    G = model.gens.reshape(3, -1).T
    flat = np.asarray(M).reshape(*np.shape(M)[:-2], -1)
    sol, *_ = np.linalg.lstsq(G, flat.reshape(-1, G.shape[0]).T, rcond=None)
    out = sol.T.reshape(*np.shape(M)[:-2], 3)
    if model.chart == "su2":
        return out.real if np.allclose(out.imag, 0, atol=1e-10) else out
    return out


def classify(alg: LieAlgebra3) -> str:
    """Bianchi type of an algebra, from invariants of its structure."""
    if alg.is_abelian():
        return "I"
    ideal = _abelian_ideal(alg)
    if ideal is None:
        # Killing form B(x,y) = tr(ad x ad y)
        ads = np.array([alg.ad(k) for k in range(3)])
        B = np.einsum("iab,jba->ij", ads, ads)
        ev = np.linalg.eigvalsh(B)
        if np.all(ev < 0):
            return "IX"
        if np.all(np.abs(ev) > 1e-12):
            return "VIII"
        raise UnknownAlgebraError("could not classify algebra")
    _, _, _, A = ideal
    tr, det = np.trace(A), np.linalg.det(A)
    tol = 1e-12
    if np.allclose(A, 0):
        return "I"
    if abs(tr) < tol:
        if abs(det) < tol:
            return "II"
        return "VI0" if det < 0 else "VII0"
    if abs(det) < tol:
        return "III"
    disc = tr * tr - 4 * det
    if abs(disc) < tol:
        return "V" if np.allclose(A, A[0, 0] * np.eye(2)) else "IV"
    if disc > 0:
        l1, l2 = sorted(np.linalg.eigvals(A).real, key=abs)
        mu = l1 / l2
        return f"VIa(a={(1 + mu) / (1 - mu):.12g})"
    lr = tr / 2
    li = np.sqrt(-disc) / 2
    return f"VIIa(a={abs(lr) / li:.12g})"


def load_algebra(path: str | Path) -> LieAlgebra3:
    """Read an algebra from a YAML/JSON mapping with keys type, a, mu, scale, basis."""
    import yaml

    cfg = yaml.safe_load(Path(path).read_text()) or {}
    return algebra_from_config(cfg)


def algebra_from_config(cfg: dict) -> LieAlgebra3:
    scale = float(cfg.get("scale", 1.0))
    basis = cfg.get("basis", "table")
    if cfg.get("mu") is not None and cfg.get("type") in (None, "Gmu", "gmu"):
        alg = gmu_algebra(cfg["mu"])
        return alg.scaled(scale) if scale != 1.0 else alg
    tag = cfg.get("type")
    if tag is None:
        raise UnknownAlgebraError("configuration needs 'type' or 'mu'")
    named = {"nil": nil, "sl2r": sl2r, "sol": sol, "r3": euclidean, "su2": su2, "h3": hyperbolic}
    key = str(tag).lower()
    if basis == "weierstrass" and key in named:
        alg = named[key]()
    else:
        alg = bianchi_algebra(tag, cfg.get("a"), scale=1.0)
        if basis == "weierstrass":
            alg, _ = weierstrass_basis(alg)
    return alg.scaled(scale) if scale != 1.0 else alg
