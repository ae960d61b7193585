"""Minimal-surface spinor systems in Nil, SL(2,R)~, Sol and the G_mu family.

With ``H = 0`` the Dirac equation reads ``d psi2 = -U psi1`` and
``dbar psi1 = V psi2`` with the group potentials of
:func:`liespinor.spinfield.potentials`.  The residual rows follow
:func:`liespinor.spinfield.dirac_residual`:
``r1 = d psi2 + U psi1`` and ``r2 = -dbar psi1 + V psi2``.

``form="printed"`` keeps an alternative Nil reading whose right sides use
``psi1`` in the ``dbar psi1`` equation and ``psi2`` in the ``d psi2``
equation; for the other groups both forms coincide.
"""

from __future__ import annotations

import dataclasses
import json

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .spinfield import (
    DegenerateImmersionError,
    Grid2D,
    MaskedDomainError,
    SpinorField,
    d_z,
    d_zbar,
    dirac_residual,
    normalize_group,
    potentials,
)

__all__ = [
    "MinimalSystem",
    "MinimalReport",
    "minimal_residual",
    "minimal_solve",
    "mu_sweep",
]

FORMS = ("dirac", "printed")


@dataclasses.dataclass(frozen=True)
class MinimalSystem:
    group: str
    form: str = "dirac"
    mu: float | None = None

    def __post_init__(self) -> None:
        g = normalize_group(self.group)
        if g in ("R3", "SU2"):
            raise ValueError(f"no minimal system for {self.group!r} here")
        if g == "Gmu" and self.mu is None:
            raise ValueError("Gmu system needs mu")
        if self.form not in FORMS:
            raise ValueError(f"form must be one of {FORMS}")
        object.__setattr__(self, "group", g)
        if g == "Sol":
            object.__setattr__(self, "mu", -1.0)

    def with_mu(self, mu: float) -> "MinimalSystem":
        return MinimalSystem("Gmu", self.form, float(mu))


@dataclasses.dataclass
class MinimalReport:
    iterations: int
    residuals: list[float]
    converged: bool
    group: str
    mu: float | None
    form: str
    e_alpha_range: tuple[float, float] = (0.0, 0.0)
    message: str = ""

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True, indent=2)


def _pointwise(psi1, psi2, sys: MinimalSystem):
    """Zero-order terms ``(U psi1, V psi2)`` (or the printed Nil variant) and the validity mask."""
    psi = SpinorField(psi1, psi2, 0.0)
    if sys.form == "printed" and sys.group == "Nil":
        w = 0.25j * (np.abs(psi2) ** 2 - np.abs(psi1) ** 2)
        return w * psi2, w * psi1, psi.valid
    pot = potentials(psi, sys.group, sys.mu)
    return pot.U * psi1, pot.V * psi2, pot.valid


def minimal_residual(psi: SpinorField, sys: MinimalSystem, grid: Grid2D, mode: str = "fd"):
    """Residual rows ``(r1, r2)``; NaN outside the domain of the potentials."""
    if sys.form == "dirac":
        return dirac_residual(psi.with_H(0.0), potentials(psi.with_H(0.0), sys.group, sys.mu), grid, mode)
    n1, n2, valid = _pointwise(psi.psi1, psi.psi2, sys)
    r1 = d_z(psi.psi2, grid, mode) + n1
    r2 = -d_zbar(psi.psi1, grid, mode) + n2
    mask = valid & psi.valid
    return np.where(mask, r1, np.nan), np.where(mask, r2, np.nan)


# --------------------------------------------------------------------------
# Levenberg-Marquardt relaxation with Dirichlet data on the four edges


def _central(n: int, h: float):
    # interior rows of the central difference on n samples
    m = n - 2
    return sp.diags([-np.ones(m), np.ones(m)], [0, 2], shape=(m, n)) / (2 * h)


def _select(n: int):
    return sp.eye(n - 2, n, k=1)


def _unit(c: int, d: int):
    e = np.zeros((4, 4))
    e[c, d] = 1.0
    return sp.csr_matrix(e)


def _linear_operator(grid: Grid2D):
    """Real 4-component form of ``(d psi2, -dbar psi1)`` at interior samples.

    Components per sample: ``(Re psi1, Im psi1, Re psi2, Im psi2)`` on input
    and ``(Re r1, Im r1, Re r2, Im r2)`` on output, sample-major ordering.
    """
    Du = sp.kron(_central(grid.nu, grid.du), _select(grid.nv))
    Dv = sp.kron(_select(grid.nu), _central(grid.nv, grid.dv))
    # d = (Du - i Dv)/2 on psi2 -> rows 0, 1; -dbar = -(Du + i Dv)/2 on psi1 -> rows 2, 3
    terms = [
        (Du, 0, 2, 0.5), (Dv, 0, 3, 0.5), (Du, 1, 3, 0.5), (Dv, 1, 2, -0.5),
        (Du, 2, 0, -0.5), (Dv, 2, 1, 0.5), (Du, 3, 1, -0.5), (Dv, 3, 0, -0.5),
    ]
    L = sum(c * sp.kron(D, _unit(o, i)) for D, o, i, c in terms)
    return L.tocsr()


def _pack(psi1, psi2):
    return np.stack([psi1.real, psi1.imag, psi2.real, psi2.imag], axis=-1).ravel()


def _unpack(x, shape):
    a = x.reshape(shape + (4,))
    return a[..., 0] + 1j * a[..., 1], a[..., 2] + 1j * a[..., 3]


def _block_jacobian(p1, p2, sys: MinimalSystem, h: float = 1e-7):
    base = np.stack(_split(*_pointwise(p1, p2, sys)[:2]), -1)
    cols = []
    for d in range(4):
        q1, q2 = p1.copy(), p2.copy()
        if d == 0:
            q1 = q1 + h
        elif d == 1:
            q1 = q1 + 1j * h
        elif d == 2:
            q2 = q2 + h
        else:
            q2 = q2 + 1j * h
        cols.append((np.stack(_split(*_pointwise(q1, q2, sys)[:2]), -1) - base) / h)
    B = np.stack(cols, -1).reshape(-1, 4, 4)
    return sp.block_diag(list(B), format="csr")


def _split(n1, n2):
    return n1.real, n1.imag, n2.real, n2.imag


def minimal_solve(seed: SpinorField, sys: MinimalSystem, grid: Grid2D, tol: float = 1e-10,
                  maxit: int = 50) -> tuple[SpinorField, MinimalReport]:
    """Relax the interior samples of ``seed``; its edge samples are the Dirichlet data.

    Levenberg-Marquardt on the real four-component unknowns per interior
    sample with a sparse Jacobian (central-difference stencil plus pointwise
    blocks).  The residual is the max modulus over interior samples.
    Non-convergence is reported in the returned report, not raised.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if grid.periodic_u or grid.periodic_v:
        raise ValueError("minimal_solve uses Dirichlet data on a non-periodic box")
    p1 = np.array(seed.psi1, complex)
    p2 = np.array(seed.psi2, complex)
    _, _, valid = _pointwise(p1, p2, sys)
    if not np.all(valid):
        idx = tuple(int(i) for i in np.argwhere(~valid)[0])
        raise MaskedDomainError(f"seed leaves the domain of the {sys.group} potentials at sample {idx}")
    ea = np.abs(p1) ** 2 + np.abs(p2) ** 2
    if np.any(ea < 1e-12):
        raise DegenerateImmersionError("degenerate metric in the seed")
    inner = (slice(1, -1), slice(1, -1))
    ishape = (grid.nu - 2, grid.nv - 2)
    L_full = _linear_operator(grid)
    # split the stencil into interior unknowns and fixed edge data
    interior = np.zeros(grid.shape, bool)
    interior[inner] = True
    cols = np.repeat(interior.ravel(), 4)
    L_in = L_full[:, cols]
    L_bd = L_full[:, ~cols]
    bd = np.stack([p1.real, p1.imag, p2.real, p2.imag], -1).reshape(-1)[~cols]
    rhs_bd = L_bd @ bd

    def resid(x):
        q1, q2 = _unpack(x, ishape)
        n1, n2, ok = _pointwise(q1, q2, sys)
        if not np.all(ok):
            raise MaskedDomainError(f"iterate left the domain of the {sys.group} potentials")
        return L_in @ x + rhs_bd + np.stack(_split(n1, n2), -1).ravel()

    x = _pack(p1[inner], p2[inner])
    r = resid(x)
    hist = [float(np.max(np.abs(r)))]
    lam = 1e-6
    it = 0
    converged = hist[-1] < tol
    while not converged and it < maxit:
        it += 1
        q1, q2 = _unpack(x, ishape)
        J = (L_in + _block_jacobian(q1, q2, sys)).tocsc()
        JtJ = (J.T @ J).tocsc()
        g = J.T @ r
        accepted = False
        for _ in range(12):
            A = JtJ + lam * sp.diags(JtJ.diagonal() + 1e-300)
            dx = spla.spsolve(A.tocsc(), -g)
            try:
                rn = resid(x + dx)
            except MaskedDomainError:
                lam *= 10
                continue
            if np.linalg.norm(rn) < np.linalg.norm(r):
                x, r = x + dx, rn
                lam = max(lam / 10, 1e-12)
                accepted = True
                break
            lam *= 10
        hist.append(float(np.max(np.abs(r))))
        converged = hist[-1] < tol
        if not accepted:
            break
    q1, q2 = _unpack(x, ishape)
    p1[inner], p2[inner] = q1, q2
    ea = np.abs(p1) ** 2 + np.abs(p2) ** 2
    if np.any(ea < 1e-12):
        raise DegenerateImmersionError("degenerate metric encountered")
    msg = "converged" if converged else ("stalled" if it < maxit else "max iterations reached")
    rep = MinimalReport(it, hist, bool(converged), sys.group, sys.mu, sys.form,
                        (float(np.sqrt(ea.min())), float(np.sqrt(ea.max()))), msg)
    return SpinorField(p1, p2, 0.0), rep


def mu_sweep(psi0: SpinorField, mus, grid: Grid2D, tol: float = 1e-10, maxit: int = 50, form: str = "dirac"):
    """Continuation in ``mu``: each solution seeds the next value.

    Returns a list of ``(mu, SpinorField, MinimalReport)``.  On breakdown
    (non-convergence or leaving the domain) the sweep stops; the last entry
    carries the failing ``mu`` with ``converged=False`` and a message naming
    the last good ``mu``.
    """
    mus = [float(m) for m in mus]
    if mus != sorted(mus) and mus != sorted(mus, reverse=True):
        raise ValueError("mus must be monotone")
    out = []
    psi = psi0
    last_good = None
    for mu in mus:
        sys = MinimalSystem("Gmu", form, mu)
        try:
            sol, rep = minimal_solve(psi, sys, grid, tol, maxit)
        except (MaskedDomainError, DegenerateImmersionError) as exc:
            rep = MinimalReport(0, [], False, "Gmu", mu, form, (0.0, 0.0), f"{exc}; last good mu {last_good}")
            out.append((mu, psi, rep))
            break
        if not rep.converged:
            rep.message += f"; last good mu {last_good}"
            out.append((mu, sol, rep))
            break
        out.append((mu, sol, rep))
        psi = sol
        last_good = mu
    return out
