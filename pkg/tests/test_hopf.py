"""Hopf differentials, holomorphicity and the Euclidean Gauss-Codazzi equations."""

from __future__ import annotations

import numpy as np
import pytest

from liespinor.hopf import (
    QuadDifferential,
    abresch_rosenberg,
    gauss_codazzi_residual,
    holomorphicity_residual,
    hopf_A,
    tilde_A,
)
from liespinor.nilrot import cmc_profile, random_profile, revolve_to_surface
from liespinor.shg import ScalarField, pendulum_profile, sinh_gordon_solve
from liespinor.spinfield import Grid2D, SpinorField, induced_metric
from liespinor.surfaces import cylinder_spinor, sphere_spinor


def order(errs):
    errs = np.asarray(errs)
    return np.log2(errs[:-1] / errs[1:])


def box(n):
    return Grid2D.box(-1, 1, -1, 1, n, n)


# --------------------------------------------------------------------------
# Euclidean Hopf differential


def test_plane_hopf_zero():
    g = box(9)
    psi = SpinorField(np.full(g.shape, 0.4 + 1j), np.full(g.shape, -0.3))
    assert np.abs(hopf_A(psi, g).A).max() < 1e-15


def test_sphere_is_umbilic():
    errs = [np.abs(hopf_A(sphere_spinor(box(n)), box(n)).A).max() for n in (33, 65, 129)]
    assert errs[-1] < 1e-3 and np.all(order(errs) > 1.9)


def test_printed_variant_fails_on_sphere():
    g = box(65)
    assert np.abs(hopf_A(sphere_spinor(g), g, variant="printed").A).max() > 0.1


@pytest.mark.parametrize("R", [1.0, 2.0])
def test_cylinder_hopf_modulus(R):
    errs = []
    for n in (33, 65):
        g = box(n)
        psi = cylinder_spinor(g, R)
        ea = induced_metric(psi)
        expected = np.sqrt((1 / R) ** 2 * ea**4 / 16)
        errs.append(np.abs(np.abs(hopf_A(psi, g).A) - expected).max())
    assert errs[-1] < 1e-4 and order(errs)[0] > 1.9


def test_sphere_gauss_codazzi_second_order():
    g_res, c_res = [], []
    for n in (33, 65, 129):
        g = box(n)
        psi = sphere_spinor(g)
        ea = induced_metric(psi)
        gauss, codazzi = gauss_codazzi_residual(np.log(ea), 0.5 * ea, hopf_A(psi, g).A, g)
        g_res.append(np.abs(gauss).max())
        c_res.append(np.abs(codazzi).max())
    assert np.all(order(g_res) > 1.9) and np.all(order(c_res) > 1.9)


def test_plane_gauss_codazzi_zero():
    g = box(9)
    z = np.zeros(g.shape)
    gauss, codazzi = gauss_codazzi_residual(z, z, z, g)
    assert np.abs(gauss).max() == 0 and np.abs(codazzi).max() == 0


def test_sinh_gordon_gauss_equation():
    # H = 1, A = 1/2, U = e^alpha / 2 with alpha = u / 2
    T = 2.8
    res = []
    for n in (32, 64):
        g = Grid2D.torus(T, T, n, n)
        ex = pendulum_profile(T, g.u)[:, None] * np.ones((1, n))
        u, rep = sinh_gordon_solve(ScalarField(ex, g), tol=1e-12)
        assert rep.converged
        alpha = 0.5 * u.vals.real
        gauss, _ = gauss_codazzi_residual(alpha, 0.5 * np.exp(alpha), np.full(g.shape, 0.5), g)
        res.append(np.abs(gauss).max())
    assert order(res)[0] > 1.9


# --------------------------------------------------------------------------
# Nil and SL(2,R)~


def test_tilde_A_equals_A_when_Z3_vanishes():
    g = Grid2D.box(0, 1, 0, 1, 17, 17)
    psi = SpinorField(np.exp(0.3 * g.z), np.zeros(g.shape))
    A = hopf_A(psi, g).A
    for group in ("Nil", "SL2R"):
        assert np.abs(tilde_A(psi, g, group, H=0.3).A - A).max() < 1e-14


def test_tilde_A_unsupported_group():
    g = box(9)
    with pytest.raises(ValueError):
        tilde_A(sphere_spinor(g), g, "Sol")


def test_nil_cmc_sphere_holomorphic_second_order():
    p = cmc_profile(0.5)
    res = []
    for nt, nx in [(32, 257), (64, 513), (128, 1025)]:
        ff, psi = revolve_to_surface(p, nt, nx)
        res.append(holomorphicity_residual(tilde_A(psi, ff.grid, "Nil"), ff.grid, margin=2))
    assert np.all(order(res) > 1.9)


def test_nil_non_cmc_not_holomorphic():
    q = random_profile(np.random.default_rng(0), L=2 * np.pi, amplitudes=[0.2, 0.1, 0.0])
    ff, psi = revolve_to_surface(q, 64, 513)
    assert holomorphicity_residual(tilde_A(psi, ff.grid, "Nil"), ff.grid, margin=2) > 0.01


def test_argmin_is_cmc_member():
    # amplitudes a * (1, 0.05): a = 0 is a CMC sphere
    amps = [-0.2, -0.1, 0.0, 0.1, 0.2]
    res = []
    for a in amps:
        p = random_profile(np.random.default_rng(0), L=np.pi, amplitudes=[a, 0.05 * a])
        ff, psi = revolve_to_surface(p, 64, 513)
        res.append(holomorphicity_residual(tilde_A(psi, ff.grid, "Nil"), ff.grid, margin=2))
    assert amps[int(np.argmin(res))] == 0.0


# --------------------------------------------------------------------------
# the E(kappa, tau) differential and the residual itself


def test_abresch_rosenberg_trivial_cases(rng):
    A = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
    qd = QuadDifferential(A, "tildeA")
    assert np.array_equal(abresch_rosenberg(qd, 1.0, tau=0.0).A, A)
    assert np.all(abresch_rosenberg(QuadDifferential(np.zeros((8, 8)), "tildeA"), 0.7).A == 0)


def test_abresch_rosenberg_proportional_residual():
    p = cmc_profile(0.5)
    ff, psi = revolve_to_surface(p, 32, 257)
    tA = tilde_A(psi, ff.grid, "Nil")
    H, tau = 0.5, 0.5
    ar = abresch_rosenberg(tA, H, tau)
    r0 = holomorphicity_residual(tA, ff.grid, margin=2)
    r1 = holomorphicity_residual(ar, ff.grid, margin=2)
    assert r1 == pytest.approx(abs(H + 1j * tau) * r0, rel=1e-12)


def test_holomorphicity_residual_simple_fields():
    g = box(17)
    assert holomorphicity_residual(QuadDifferential(np.full(g.shape, 2 + 1j), "hopf"), g) < 1e-15
    assert holomorphicity_residual(QuadDifferential(np.conj(g.z), "hopf"), g) == pytest.approx(1.0)
