"""Surfaces of revolution in Nil: profiles, energies, Willmore values, criticality."""

from __future__ import annotations

import numpy as np
import pytest

from liespinor.nilrot import (
    ProfileCurve,
    ProfileError,
    cmc_profile,
    energy_first_variation,
    random_profile,
    read_profile_csv,
    revolution_points,
    revolve_to_surface,
    spinor_energy_revolution,
    surface_energies,
    willmore_cmc_sphere,
    willmore_quadrature,
    write_profile_csv,
)


def periodic_profile(n=4001, c=2.0, r=0.5):
    """Closed curve around (c, 0) in the half-plane, resampled by arc length."""
    t = np.linspace(0, 2 * np.pi, 20 * n)
    u, v = c + r * np.cos(t), r * np.sin(t) * np.sqrt(4 + c**2) / 2
    du, dv = np.gradient(u, t), np.gradient(v, t)
    speed = np.sqrt(du**2 + 4 * dv**2 / (4 + u**2))
    s = np.concatenate([[0], np.cumsum(0.5 * (speed[1:] + speed[:-1]) * np.diff(t))])
    sn = np.linspace(0, s[-1], n)
    un, vn = np.interp(sn, s, u), np.interp(sn, s, v)
    sigma = np.unwrap(np.arctan2(np.interp(sn, s, 2 * dv / np.sqrt(4 + u**2)), np.interp(sn, s, du)))
    return ProfileCurve(sn, un, vn, sigma, False, True)


# --------------------------------------------------------------------------
# profiles


def test_pole_slope_limit():
    p = cmc_profile(0.5)
    assert np.abs(p.sigma[1:6] / p.u[1:6] - 0.5).max() < 1e-5
    assert p.closed_pole_to_pole and p.u[0] == 0 and p.u[-1] == 0


@pytest.mark.parametrize("k", [0.2, 1.0, 5.0])
def test_profile_solves_ode(k):
    p = cmc_profile(k)
    r = np.abs(p.sdot() - p.ratio())[1:-1]
    assert r.max() < 1e-8


def test_profile_matches_closed_form_and_unit_speed():
    # sigma = k s, u = sin(k s) / k solves the ODE exactly
    errs, speed = [], []
    for h in (1e-3, 5e-4):
        p = cmc_profile(0.5, h=h)
        errs.append(np.abs(p.u - np.sin(0.5 * p.s) / 0.5).max())
        speed.append(p.speed_residual())
    assert errs[-1] < 1e-8
    # the finite-difference speed check converges at second order
    assert speed[-1] < 1e-7 and np.log2(speed[0] / speed[1]) > 1.9


def test_profile_errors():
    with pytest.raises(ProfileError):
        cmc_profile(0.0)
    with pytest.raises(ProfileError):
        cmc_profile(1.0, smax=1.0)


def test_random_profile_zero_amplitudes_is_cmc():
    p = random_profile(np.random.default_rng(0), L=3.0, amplitudes=[0.0, 0.0])
    assert np.abs(p.sdot() - p.ratio()).max() < 1e-6


# --------------------------------------------------------------------------
# revolution


def test_revolution_closes_and_poles_collapse():
    P = revolution_points(cmc_profile(0.5), 32)
    assert np.abs(P[:, 0] - P[:, -1]).max() < 1e-10
    assert np.ptp(P[0], axis=0).max() == 0 and np.ptp(P[-1], axis=0).max() == 0


def test_revolve_rejects_small_ntheta():
    with pytest.raises(ValueError):
        revolve_to_surface(cmc_profile(0.5), 4)


def test_revolved_spinor_reproduces_metric():
    ff, psi = revolve_to_surface(cmc_profile(0.5), 16, 129)
    ea = np.abs(psi.psi1) ** 2 + np.abs(psi.psi2) ** 2
    assert np.allclose(ea**2, ff.e2alpha, rtol=1e-12)


# --------------------------------------------------------------------------
# energies


@pytest.mark.parametrize("k", [0.2, 0.5, 2.0, 5.0])
def test_cmc_sphere_energy_pi(k):
    assert spinor_energy_revolution(cmc_profile(k)) == pytest.approx(np.pi, abs=1e-6)
    assert spinor_energy_revolution(cmc_profile(k), reading="printed") == pytest.approx(np.pi, abs=1e-6)


def test_energy_lower_bound_random_profiles():
    rng = np.random.default_rng(7)
    found = 0
    while found < 20:
        try:
            p = random_profile(rng, L=rng.uniform(1, 8), amplitude=0.3)
        except ProfileError:
            continue
        found += 1
        E = spinor_energy_revolution(p)
        assert E >= np.pi
        if np.abs(p.sdot() - p.ratio()).max() > 1e-6:
            assert E > np.pi


def test_torus_energy_positive():
    p = periodic_profile()
    assert spinor_energy_revolution(p, chi=0) > 0


def test_energy_needs_closed_profile():
    p = cmc_profile(0.5)
    with pytest.raises(ProfileError):
        spinor_energy_revolution(p, chi=0)
    with pytest.raises(ProfileError):
        spinor_energy_revolution(periodic_profile(), chi=2)


def test_energy_expressions_agree():
    q = random_profile(np.random.default_rng(0), L=2 * np.pi, amplitudes=[0.2, 0.1, 0.0])
    d = surface_energies(q, 128, 1025)
    E = d["E_spinor"].real
    assert abs(d["E_spinor"].imag) < 1e-6 * E
    assert E == pytest.approx(spinor_energy_revolution(q), rel=1e-6)
    assert E == pytest.approx(d["E_normal"], rel=1e-3)
    assert E == pytest.approx(d["E_geometric"], rel=1e-3)


# --------------------------------------------------------------------------
# Willmore


def test_willmore_closed_form_readings_at_half():
    assert willmore_cmc_sphere(0.5) == pytest.approx(12 * np.pi - 2 * np.pi**2, abs=1e-12)
    assert willmore_cmc_sphere(0.5, "printed") == pytest.approx(12 * np.pi - np.pi**2 / 32, abs=1e-12)


def test_willmore_large_H_limit():
    assert willmore_cmc_sphere(1e3) == pytest.approx(4 * np.pi, abs=1e-5)
    assert abs(willmore_cmc_sphere(1e3, "printed")) > 1e6


def test_willmore_rejects_nonpositive_H():
    with pytest.raises(ValueError):
        willmore_cmc_sphere(0.0)


@pytest.mark.parametrize("k", [0.5, 1.0])
def test_willmore_quadrature_matches_closed_form(k):
    W = willmore_quadrature(cmc_profile(k))
    assert W == pytest.approx(willmore_cmc_sphere(k), rel=5e-3)


def test_sectional_curvature_range_on_sphere():
    K = surface_energies(cmc_profile(0.5), 32, 257)["Khat"]
    assert K.min() >= -0.75 - 1e-12 and K.max() <= 0.25 + 1e-12


# --------------------------------------------------------------------------
# first variation


@pytest.mark.parametrize("shape", [0, 2, lambda t: np.exp(t)])
def test_cmc_sphere_is_critical(shape):
    assert abs(energy_first_variation(cmc_profile(0.5), 1e-3, shape)) < 1e-4


def test_non_cmc_first_variation_large():
    q = random_profile(np.random.default_rng(3), L=2 * np.pi, amplitudes=[0.2, 0.1, 0.0])
    assert max(abs(energy_first_variation(q, 1e-3, m)) for m in (0, 1, 2)) > 1e-2


def test_odd_perturbation_of_symmetric_profile():
    assert energy_first_variation(cmc_profile(0.5), 1e-3, 1) == 0.0


# --------------------------------------------------------------------------
# CSV


def test_profile_csv_roundtrip(tmp_path):
    p = cmc_profile(0.7)
    path = tmp_path / "p.csv"
    write_profile_csv(p, path)
    q = read_profile_csv(path)
    for a in ("s", "u", "v", "sigma"):
        assert np.array_equal(getattr(p, a), getattr(q, a))
    assert spinor_energy_revolution(q) == pytest.approx(np.pi, abs=1e-6)
