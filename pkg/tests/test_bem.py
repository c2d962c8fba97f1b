"""Boundary-integral solver against the analytic disk."""

from __future__ import annotations

import numpy as np
import pytest

from cavityentropy.bem import (
    DIP_THRESHOLD,
    bem_find_mode,
    bem_min_singular,
    field_at_points,
    fourier_bessel_field,
    interior_field,
    nodes_for_resolution,
)
from cavityentropy.disk import disk_field, disk_find_mode
from cavityentropy.errors import DiscretizationError, DomainError, NoResonanceError
from cavityentropy.geometry import ellipse_from_alpha, interior_mesh


@pytest.fixture(scope="module")
def te_circle():
    return ellipse_from_alpha(0.0, 3.3, "TE")


@pytest.fixture(scope="module")
def te35():
    return disk_find_mode(3, 5, 3.3, "TE")


@pytest.fixture(scope="module")
def bem35(te_circle, te35):
    return bem_find_mode(te_circle, None, te35.kR, parity="even", quantum_numbers=(5, 3))


def test_deep_dip_at_analytic_root(te_circle, te35):
    M = nodes_for_resolution(te_circle, te35.kR)
    assert bem_min_singular(te_circle, M, te35.kR, relative=True) < 1e-3


@pytest.mark.parametrize("m, ell", [(3, 1), (3, 2), (3, 4)])
def test_no_dip_between_radial_orders(te_circle, m, ell):
    # Every angular order lives in the same system, so the midpoint between two
    # radial orders of one m is still close to resonances of other m; the
    # off-resonance floor is set by the compact single-layer block.
    a, b = disk_find_mode(m, ell, 3.3, "TE"), disk_find_mode(m, ell + 1, 3.3, "TE")
    mid = (a.kR + b.kR) / 2
    M = nodes_for_resolution(te_circle, max(a.kR.real, b.kR.real))
    off = bem_min_singular(te_circle, M, mid, relative=True)
    on = bem_min_singular(te_circle, M, b.kR, relative=True)
    assert off > 10 * DIP_THRESHOLD
    assert on < 1e-9 * off


def test_rotation_invariance(te_circle, te35):
    M = nodes_for_resolution(te_circle, te35.kR)
    k = te35.kR + 0.013
    base = bem_min_singular(te_circle, M, k)
    for phase in (0.1, 0.77, 2.0):
        assert abs(bem_min_singular(te_circle, M, k, phase=phase) - base) < 1e-8


def test_under_resolved(te_circle, te35):
    with pytest.raises(DiscretizationError):
        bem_min_singular(te_circle, 64, te35.kR)
    with pytest.raises(DiscretizationError):
        bem_min_singular(te_circle, 233, te35.kR)  # odd M


def test_offset_seed_converges(te_circle):
    mode = disk_find_mode(3, 2, 3.3, "TE")
    found = bem_find_mode(te_circle, None, mode.kR + 0.05)
    assert abs(found.kR - mode.kR) / abs(mode.kR) < 1e-4


def test_offset_seed_finds_nearest_resonance(te_circle, te35):
    # root + 0.05 of (ell=5, m=3) lies closer to (ell=6, m=1): the minimiser
    # returns that neighbour, which is itself an analytic resonance
    neighbour = disk_find_mode(1, 6, 3.3, "TE")
    seed = te35.kR + 0.05
    assert abs(seed - neighbour.kR) < abs(seed - te35.kR)
    found = bem_find_mode(te_circle, None, seed)
    assert abs(found.kR - neighbour.kR) / abs(neighbour.kR) < 1e-4


def test_dirichlet_circle(bessel_zero):
    shape = ellipse_from_alpha(0.0, 3.3, "Dirichlet")
    ref = bessel_zero(3, 5) / 3.3
    found = bem_find_mode(shape, None, ref + 0.01)
    assert found.kR.imag == 0
    assert abs(found.kR - ref) / ref < 1e-4


def test_tm_circle():
    shape = ellipse_from_alpha(0.0, 3.3, "TM")
    mode = disk_find_mode(3, 2, 3.3, "TM")
    found = bem_find_mode(shape, None, mode.kR)
    assert abs(found.kR - mode.kR) / abs(mode.kR) < 1e-4


def test_no_resonance(te_circle, te35):
    with pytest.raises(NoResonanceError):
        bem_find_mode(te_circle, None, te35.kR, dip_threshold=1e-30)


def test_field_matches_analytic(te35, bem35):
    mesh = interior_mesh(ellipse_from_alpha(0.0, 3.3, "TE"), 1500)
    psi = interior_field(bem35, mesh)
    ref = disk_field(te35, mesh)
    assert np.max(np.abs(psi)) == pytest.approx(1.0)
    scale = np.vdot(ref, psi) / np.vdot(ref, ref)
    rms = np.sqrt(np.mean(np.abs(psi - scale * ref) ** 2)) / np.sqrt(np.mean(np.abs(psi) ** 2))
    assert rms < 1e-3


def test_fourier_bessel_field_matches_direct(te35, bem35):
    shape = bem35.shape
    fb = fourier_bessel_field(shape, bem35.kR, bem35.densities)
    rng = np.random.default_rng(1)
    r = np.sqrt(rng.uniform(0, 0.98**2, 400))
    t = rng.uniform(0, 2 * np.pi, 400)
    pts = np.column_stack([r * np.cos(t), r * np.sin(t)])
    direct = field_at_points(shape, bem35.kR, bem35.densities, pts)
    assert np.max(np.abs(fb(pts) - direct)) < 1e-8 * np.max(np.abs(direct))
    # and the series is the analytic standing wave up to one complex factor
    mesh = interior_mesh(shape, 2000)
    ref = disk_field(te35, mesh)
    got = fb(mesh.points)
    scale = np.vdot(ref, got) / np.vdot(ref, ref)
    assert np.max(np.abs(got - scale * ref)) < 1e-8 * np.max(np.abs(got))


def test_interior_field_requires_densities(te35):
    mesh = interior_mesh(ellipse_from_alpha(0.0), 100)
    with pytest.raises(DomainError):
        interior_field(te35, mesh)
