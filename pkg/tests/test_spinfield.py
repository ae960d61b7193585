"""Grids, derivatives, spinor algebra, potentials, Dirac residuals and I/O."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from liespinor.liegeo import gmu_algebra, nil, sl2r, sol, su2
from liespinor.spinfield import (
    CsvParseError,
    DegenerateImmersionError,
    Grid2D,
    PotentialField,
    SpinorField,
    connection_potentials,
    d_u,
    d_z,
    d_zbar,
    dirac_residual,
    factorize_Z,
    induced_metric,
    potentials,
    quaternion_flip,
    read_binary,
    read_csv,
    spinor_from_Z,
    trapezoid_weights,
    write_binary,
    write_csv,
)
from liespinor.surfaces import enneper_spinor, sphere_spinor

GROUPS = ["R3", "SU2", "Nil", "SL2R", "Sol"]


def random_spinor(rng, shape, H=0.0):
    c = rng.standard_normal((4,) + shape)
    return SpinorField(c[0] + 1j * c[1], c[2] + 1j * c[3], H)


def constant(grid, a, b, H=0.0):
    return SpinorField(np.full(grid.shape, a, complex), np.full(grid.shape, b, complex), H)


def order(errs):
    return np.log2(errs[0] / errs[1])


# --------------------------------------------------------------------------
# grid and derivatives


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid2D(3, 8, 0.1, 0.1)
    with pytest.raises(ValueError):
        Grid2D(8, 8, 0.0, 0.1)


def test_grid_refinement_keeps_domain():
    g = Grid2D.box(0, 1, -1, 2, 9, 13)
    r = g.refined()
    assert r.shape == (17, 25)
    assert r.u[-1] == pytest.approx(1.0) and r.v[-1] == pytest.approx(2.0)
    t = Grid2D.torus(2.0, 3.0, 8, 8).refined()
    assert t.shape == (16, 16) and t.du == pytest.approx(2.0 / 16)


def test_dz_linear_exact():
    g = Grid2D.box(-1, 1, -1, 1, 17, 17)
    z = g.z
    assert np.max(np.abs(d_z(z, g) - 1)) < 1e-10
    assert np.max(np.abs(d_zbar(z, g))) < 1e-10


def test_dz_second_order():
    # the stencil is exact on quadratics and the leading error cancels on
    # holomorphic cubics, so the order is measured on z^2 zbar
    g = Grid2D.box(-1, 1, -1, 1, 17, 17)
    assert np.max(np.abs(d_z(g.z**2, g) - 2 * g.z)) < 1e-12
    errs = []
    for n in (17, 33):
        g = Grid2D.box(-1, 1, -1, 1, n, n)
        zb = np.conj(g.z)
        errs.append(np.max(np.abs(d_z(g.z**2 * zb, g) - 2 * g.z * zb)))
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.1)


def test_commuting_derivatives_order():
    # d_z d_zbar = d_zbar d_z for exp(z + zbar^2), second order in h
    errs = []
    for n in (33, 65, 129):
        g = Grid2D.box(-0.5, 0.5, -0.5, 0.5, n, n)
        f = np.exp(g.z + np.conj(g.z) ** 2)
        exact = 2 * np.conj(g.z) * f
        errs.append(np.max(np.abs(d_z(d_zbar(f, g), g) - exact)))
    assert order(errs[:2]) >= 1.9 and order(errs[1:]) >= 1.9


def test_spectral_derivative_periodic():
    g = Grid2D.torus(2 * np.pi, 2 * np.pi, 32, 32)
    f = np.sin(g.u)[:, None] * np.ones(g.nv)
    assert np.max(np.abs(d_u(f, g, "spectral") - np.cos(g.u)[:, None])) < 1e-12


def test_trapezoid_weights_total_area():
    g = Grid2D.box(0, 2, 0, 3, 11, 21)
    assert trapezoid_weights(g).sum() == pytest.approx(6.0)
    t = Grid2D.torus(2, 3, 10, 20)
    assert trapezoid_weights(t).sum() == pytest.approx(6.0)


# --------------------------------------------------------------------------
# Z and the metric


def test_Z_examples():
    Z = factorize_Z(SpinorField(np.array([1.0]), np.array([0.0])))[0]
    assert np.allclose(Z, [0.5j, -0.5, 0])
    Z = factorize_Z(SpinorField(np.array([0.0]), np.array([1.0])))[0]
    assert np.allclose(Z, [0.5j, 0.5, 0])


def test_conformality_random(rng):
    Z = factorize_Z(random_spinor(rng, (10_000,)))
    assert np.max(np.abs(np.sum(Z**2, axis=-1))) < 1e-14 * max(1.0, np.max(np.abs(Z)) ** 2)


def test_metric_examples():
    assert induced_metric(SpinorField(np.array([1.0]), np.array([0.0])))[0] == 1.0
    assert induced_metric(SpinorField(np.array([1.0]), np.array([1.0])))[0] == 2.0
    with pytest.raises(DegenerateImmersionError):
        induced_metric(SpinorField(np.array([0.0]), np.array([0.0])))


def test_metric_matches_tangent_norm(rng):
    psi = random_spinor(rng, (200,))
    Z = factorize_Z(psi)
    # |f_u|^2 = 4|Re Z|^2 = e^{2 alpha}
    assert np.allclose(4 * np.sum(Z.real**2, -1), induced_metric(psi) ** 2)


def test_spinor_from_Z_roundtrip():
    g = Grid2D.box(-1, 1, -1, 1, 33, 33)
    psi = enneper_spinor(g, "exp")
    back = spinor_from_Z(factorize_Z(psi))
    assert np.allclose(factorize_Z(back), factorize_Z(psi), atol=1e-12)
    # continuous branch: the recovered spinor is +-psi globally
    s = np.sign(np.real(back.psi1[0, 0] / psi.psi1[0, 0]))
    assert np.max(np.abs(back.psi1 - s * psi.psi1)) < 1e-12
    assert np.max(np.abs(back.psi2 - s * psi.psi2)) < 1e-12


# --------------------------------------------------------------------------
# potentials


@pytest.mark.parametrize("H", [0.0, 0.7])
def test_r3_potentials(rng, H):
    psi = random_spinor(rng, (50,), H)
    pot = potentials(psi, "R3")
    ea = induced_metric(psi)
    assert np.allclose(pot.U, 0.5 * H * ea) and np.array_equal(pot.U, pot.V)
    assert pot.symmetry_residual() == 0.0


def test_nil_potentials_vanish_on_equal_moduli():
    pot = potentials(SpinorField(np.ones(3), np.ones(3)), "Nil")
    assert np.all(pot.U == 0) and np.all(pot.V == 0)


def test_su2_potentials_example():
    pot = potentials(SpinorField(np.array([1.0]), np.array([0.0])), "SU2")
    assert pot.U[0] == pytest.approx(-0.5j) and pot.V[0] == pytest.approx(0.5j)


def test_sol_potentials_closed_form(rng):
    psi = random_spinor(rng, (10_000,), rng.standard_normal(10_000))
    p1, p2 = psi.psi1, psi.psi2
    h = 0.5 * psi.H * (np.abs(p1) ** 2 + np.abs(p2) ** 2)
    U = h - 0.5 * np.conj(p2) ** 2 * np.conj(p1) / p1
    V = h + 0.5 * np.conj(p1) ** 2 * np.conj(p2) / p2
    for pot in (potentials(psi, "Gmu", mu=-1.0), potentials(psi, "Sol")):
        assert np.max(np.abs(pot.U - U)) < 1e-14 * np.max(np.abs(U))
        assert np.max(np.abs(pot.V - V)) < 1e-14 * np.max(np.abs(V))


def test_gmu_potentials_affine_in_mu(rng):
    psi = random_spinor(rng, (500,), 0.3)
    a, b = potentials(psi, "Gmu", -1.0), potentials(psi, "Gmu", 1.0)
    for mu in (-0.5, 0.0, 0.25):
        t = (mu + 1) / 2
        p = potentials(psi, "Gmu", mu)
        assert np.max(np.abs(p.U - ((1 - t) * a.U + t * b.U))) < 1e-14 * np.max(np.abs(p.U))
        assert np.max(np.abs(p.V - ((1 - t) * a.V + t * b.V))) < 1e-14 * np.max(np.abs(p.V))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=5, max_size=5))
def test_symmetry_invariants_exact(vals):
    psi = SpinorField(np.array([vals[0] + 1j * vals[1]]), np.array([vals[2] + 1j * vals[3]]), vals[4])
    for g in ("R3", "Nil", "SU2"):
        assert potentials(psi, g).symmetry_residual() == 0.0


def test_sol_domain_mask():
    psi = SpinorField(np.array([1.0, 0.0, 1.0]), np.array([1.0, 1.0, 0.0]))
    pot = potentials(psi, "Sol")
    assert pot.valid.tolist() == [True, False, False]


@pytest.mark.parametrize(
    "group,alg",
    [("Nil", nil()), ("SU2", su2()), ("SL2R", sl2r()), ("Sol", sol()), ("Gmu0.4", gmu_algebra(0.4))],
)
def test_potentials_match_derivational_equations(rng, group, alg):
    # two independent derivations: closed-form table and connection of the algebra
    psi = random_spinor(rng, (400,), rng.standard_normal(400))
    if group.startswith("Gmu"):
        ref = potentials(psi, "Gmu", 0.4)
    else:
        ref = potentials(psi, group)
    other = connection_potentials(psi, alg)
    m = ref.valid & other.valid
    assert np.max(np.abs(ref.U - other.U)[m]) < 1e-12 * np.max(np.abs(ref.U))
    assert np.max(np.abs(ref.V - other.V)[m]) < 1e-12 * np.max(np.abs(ref.V))


# --------------------------------------------------------------------------
# Dirac residual


def test_constant_spinor_zero_potential_residual():
    g = Grid2D.box(0, 1, 0, 1, 9, 9)
    psi = constant(g, 0.3 + 0.1j, -0.2j)
    zero = np.zeros(g.shape, complex)
    r1, r2 = dirac_residual(psi, PotentialField(zero, zero, "R3"), g)
    assert np.max(np.abs(r1)) < 1e-15 and np.max(np.abs(r2)) < 1e-15


def test_weierstrass_data_is_dirac_solution():
    g = Grid2D.box(-1, 1, -1, 1, 17, 17)
    psi = enneper_spinor(g)
    r1, r2 = dirac_residual(psi, potentials(psi, "R3"), g)
    assert max(np.max(np.abs(r1)), np.max(np.abs(r2))) < 1e-12


def test_sphere_dirac_residual_second_order():
    errs = []
    for n in (33, 65):
        g = Grid2D.box(-1, 1, -1, 1, n, n)
        psi = sphere_spinor(g)
        r1, r2 = dirac_residual(psi, potentials(psi, "R3"), g)
        errs.append(max(np.max(np.abs(r1)), np.max(np.abs(r2))))
    assert order(errs) >= 1.9


def test_mismatched_potentials_negative_control(rng):
    g = Grid2D.box(-1, 1, -1, 1, 33, 33)
    psi = sphere_spinor(g)
    r1, r2 = dirac_residual(psi, potentials(psi.with_H(3.0), "R3"), g)
    assert np.max(np.abs(r1)) > 0.1


# --------------------------------------------------------------------------
# quaternionic symmetry


def test_flip_twice_is_minus(rng):
    psi = random_spinor(rng, (20,))
    twice = quaternion_flip(quaternion_flip(psi))
    assert np.array_equal(twice.psi1, -psi.psi1) and np.array_equal(twice.psi2, -psi.psi2)


def test_r3_flip_preserves_solutions():
    g = Grid2D.box(-1, 1, -1, 1, 17, 17)
    psi = enneper_spinor(g)
    r1, r2 = dirac_residual(quaternion_flip(psi), potentials(psi, "R3"), g)
    assert max(np.max(np.abs(r1)), np.max(np.abs(r2))) < 1e-12


def test_nil_flip_breaks_solutions():
    # same operator (potentials of psi) applied to psi*
    from liespinor.nilrot import cmc_profile, revolve_to_surface

    ff, psi = revolve_to_surface(cmc_profile(0.5), 32, 257)
    g = ff.grid
    pot = potentials(psi, "Nil")
    base = max(np.nanmax(np.abs(x[:, 2:-2])) for x in dirac_residual(psi, pot, g))
    flipped = max(np.nanmax(np.abs(x[:, 2:-2])) for x in dirac_residual(quaternion_flip(psi), pot, g))
    assert flipped > 0.1 and flipped > 20 * base


# --------------------------------------------------------------------------
# serialization


def test_csv_roundtrip(tmp_path, rng):
    g = Grid2D.box(0, 1, 0, 2, 5, 6)
    psi = random_spinor(rng, g.shape, 0.25)
    path = tmp_path / "psi.csv"
    write_csv(psi, g, path)
    back, g2 = read_csv(path)
    assert g2 == g
    assert np.array_equal(back.psi1, psi.psi1) and np.array_equal(back.psi2, psi.psi2)
    assert np.array_equal(back.H, psi.H)


def test_csv_parse_error_line_number(tmp_path, rng):
    g = Grid2D.box(0, 1, 0, 1, 4, 4)
    path = tmp_path / "psi.csv"
    write_csv(random_spinor(rng, g.shape), g, path)
    lines = path.read_text().splitlines()
    lines[5] = "garbage,line"
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(CsvParseError, match="line 6"):
        read_csv(path)


def test_binary_roundtrip(tmp_path, rng):
    g = Grid2D.torus(1, 1, 4, 5)
    psi = random_spinor(rng, g.shape, 0.5)
    path = tmp_path / "psi.bin"
    write_binary(psi, g, path)
    out = read_binary(path)
    back, g2 = out[0], out[1]
    assert g2 == g
    assert np.array_equal(back.psi1, psi.psi1) and np.array_equal(back.psi2, psi.psi2)
