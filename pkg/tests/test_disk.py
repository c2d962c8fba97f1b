"""Analytic circular-disk resonances against independent oracles."""

from __future__ import annotations

import mpmath
import numpy as np
import pytest

from cavityentropy import disk
from cavityentropy.disk import (
    ModeRecord,
    bessel_zero,
    disk_characteristic,
    disk_field,
    disk_find_mode,
    radial_maxima_count,
)
from cavityentropy.errors import DomainError, ModeIdentificationError, SolverError
from cavityentropy.geometry import ellipse_from_alpha, interior_mesh

FIG6_PAIRS = [(3, 2), (3, 5), (4, 10), (8, 13)]  # (m, ell)
FIG6_RE_KR = [2.8, 5.8, 11.0, 16.0]


def characteristic_oracle(m, kR, n, weight, hankel=mpmath.hankel1):
    """``weight J'_m(n kR) H_m(kR) - J_m(n kR) H'_m(kR)`` in mpmath."""
    x = n * mpmath.mpc(kR)
    z = mpmath.mpc(kR)
    Jp = mpmath.besselj(m, x, derivative=1)
    Hp = (hankel(m - 1, z) - hankel(m + 1, z)) / 2
    return complex(weight * Jp * hankel(m, z) - mpmath.besselj(m, x) * Hp)


def test_bessel_zero_helper_matches_oracle(bessel_zero):
    for m, ell in FIG6_PAIRS:
        assert bessel_zero(m, ell) == pytest.approx(disk.bessel_zero(m, ell), abs=1e-10)


def test_dirichlet_characteristic_at_oracle_zero(bessel_zero):
    j35 = bessel_zero(3, 5)
    assert abs(disk_characteristic(3, j35 / 3.3, 3.3, "Dirichlet")) < 1e-9


@pytest.mark.parametrize("pol,weight", [("TM", 3.3), ("TE", 1 / 3.3)])
@pytest.mark.parametrize("kR", [2.85 - 0.1j, 7.3 - 0.02j, 11.1 - 0.4j])
def test_open_characteristic_matches_mpmath(pol, weight, kR):
    ref = characteristic_oracle(3, kR, 3.3, weight)
    assert abs(disk_characteristic(3, kR, 3.3, pol) - ref) <= 1e-10 * abs(ref)


def test_closed_characteristic_real_axis():
    # real coefficients: J_m(n kR) is real on the real axis, where the closed cavity lives
    for kR in np.linspace(0.5, 6, 12):
        f = disk_characteristic(4, kR, 3.3, "Dirichlet")
        assert f.imag == 0
        assert f.real == pytest.approx(float(mpmath.besselj(4, 3.3 * kR)), abs=1e-14)
    with pytest.raises(DomainError):
        disk_characteristic(4, 4.2 - 0.3j, 3.3, "Dirichlet")


def test_conjugation_maps_outgoing_to_incoming():
    # The outgoing-wave condition has a complex coefficient function (H1); under
    # conjugation it maps onto the incoming (H2) condition, evaluated here by mpmath.
    kR = 5.1 - 0.2j
    f = disk_characteristic(3, kR, 3.3, "TM")
    g = characteristic_oracle(3, np.conj(kR), 3.3, 3.3, hankel=mpmath.hankel2)
    assert np.conj(f) == pytest.approx(g, rel=1e-10)


def test_te_high_index_approaches_bessel_zero(bessel_zero):
    mode = disk_find_mode(3, 5, 100.0, "TE")
    assert abs(100 * mode.kR.real - bessel_zero(3, 5)) / bessel_zero(3, 5) < 5e-3


def test_tm_high_index_approaches_lower_order_zero(bessel_zero):
    # n J'_m(x) H_m(z) = J_m(x) H'_m(z) with H'_m/H_m ~ -m/z for small z gives J_{m-1}(x) = 0
    mode = disk_find_mode(3, 5, 100.0, "TM")
    assert abs(100 * mode.kR.real - bessel_zero(2, 5)) / bessel_zero(2, 5) < 5e-3


@pytest.mark.parametrize("m, ell", FIG6_PAIRS)
def test_dirichlet_roots(bessel_zero, m, ell):
    mode = disk_find_mode(m, ell, 3.3, "Dirichlet")
    assert abs(3.3 * mode.kR - bessel_zero(m, ell)) < 1e-8
    assert mode.kR.imag == 0


@pytest.mark.parametrize("m, ell, target", [(m, ell, t) for (m, ell), t in zip(FIG6_PAIRS, FIG6_RE_KR)])
@pytest.mark.parametrize("pol", ["TE", "TM"])
def test_open_roots(m, ell, target, pol):
    mode = disk_find_mode(m, ell, 3.3, pol)
    assert abs(characteristic_oracle(m, mode.kR, 3.3, 3.3 if pol == "TM" else 1 / 3.3)) < 1e-9
    assert mode.kR.imag < 0
    assert radial_maxima_count(m, 3.3 * mode.kR) == ell
    if pol == "TE":
        assert abs(mode.kR.real - target) <= (0.3 if target < 10 else 0.5)


def test_radial_count_closed_form(bessel_zero):
    for m, ell in [(0, 1), (0, 4), (3, 5), (8, 13)]:
        assert radial_maxima_count(m, bessel_zero(m, ell)) == ell


def test_mode_errors(monkeypatch):
    with pytest.raises(DomainError):
        disk_find_mode(3, 0)
    with pytest.raises(DomainError):
        disk_find_mode(-1, 2)
    monkeypatch.setattr(disk, "radial_maxima_count", lambda m, nkR, samples=4000: 99)
    with pytest.raises(ModeIdentificationError):
        disk_find_mode(3, 5, 3.3, "TE")


def test_newton_nonconvergence(monkeypatch):
    monkeypatch.setattr(disk, "NEWTON_MAX_ITER", 1)
    with pytest.raises(SolverError):
        disk_find_mode(3, 5, 3.3, "TE")


def test_record_invariants():
    with pytest.raises(DomainError):
        ModeRecord(kR=-1.0, shape=ellipse_from_alpha(0.0))


# -- analytic field ------------------------------------------------------------


def test_m0_field_rotation_invariant():
    mode = disk_find_mode(0, 3, 3.3, "TE")
    mesh = interior_mesh(ellipse_from_alpha(0.0), 3000)
    psi = disk_field(mode, mesh)
    r = mesh.radius
    # lattice symmetry: points (x, y) and (y, x) share a radius
    swapped = {(int(i), int(j)): k for k, (i, j) in enumerate(zip(mesh.ix, mesh.iy))}
    for k, (i, j) in enumerate(zip(mesh.ix, mesh.iy)):
        other = swapped[(int(j), int(i))]
        assert r[other] == pytest.approx(r[k], abs=1e-15)
        assert abs(psi[other] - psi[k]) < 1e-10


def test_field_vanishes_at_centre():
    mode = disk_find_mode(3, 5, 3.3, "TE")
    mesh = interior_mesh(ellipse_from_alpha(0.0), 5000)
    psi = disk_field(mode, mesh)
    centre = mesh.radius < 1e-12
    assert np.all(np.abs(psi[centre]) < 1e-15)
    # |J_3(x)| <= (x/2)^3 / 3! bounds the field near the centre
    for rho in (0.1, 0.05, 0.02):
        near = mesh.radius < rho
        bound = (abs(3.3 * mode.kR) * rho / 2) ** 3 / 6
        assert np.max(np.abs(psi[near])) <= bound


def test_angular_harmonic_of_intensity():
    mode = disk_find_mode(3, 5, 3.3, "TE")
    # global maximum of the analytic intensity lies on a ray theta = 0
    r = np.linspace(1e-3, 1, 20001)
    rmax = r[np.argmax(np.abs(disk.bessel_j(3, 3.3 * mode.kR * r)) ** 2)]
    theta = 2 * np.pi * np.arange(512) / 512
    radial = disk.bessel_j(3, 3.3 * mode.kR * rmax)
    ring = np.abs(radial * np.cos(3 * theta)) ** 2
    spec = np.abs(np.fft.rfft(ring))
    spec[0] = 0
    assert int(np.argmax(spec)) == 6


def test_disk_field_sin_partner():
    mode = disk_find_mode(3, 5, 3.3, "TE")
    mesh = interior_mesh(ellipse_from_alpha(0.0), 500)
    c, s = disk_field(mode, mesh, "cos"), disk_field(mode, mesh, "sin")
    rot = disk_field(mode, mesh, "cos", rotation=np.pi / 6)
    assert np.allclose(rot, s, atol=1e-12)
    assert not np.allclose(c, s)
    with pytest.raises(DomainError):
        disk_field(mode, mesh, "tan")
