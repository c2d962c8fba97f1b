"""Quantum-number extraction and the identifiability ratio."""

from __future__ import annotations

import numpy as np
import pytest

from cavityentropy.bem import fourier_bessel_field
from cavityentropy.disk import disk_field, disk_find_mode
from cavityentropy.entropy import normalize
from cavityentropy.geometry import ellipse_from_alpha, interior_mesh
from cavityentropy.quantum import E_THRESHOLD, extract_quantum_numbers
from cavityentropy.sweep import sweep_trajectory

E = np.e


@pytest.fixture(scope="module")
def te35():
    return disk_find_mode(3, 5, 3.3, "TE")


def extract(mode, target_N, rotation=0.0):
    mesh = interior_mesh(mode.shape, target_N)
    return extract_quantum_numbers(normalize(disk_field(mode, mesh, rotation=rotation)), mesh)


def test_threshold_is_e():
    assert E_THRESHOLD == E


def test_fine_mesh_identifies(te35):
    q = extract(te35, 3492)
    assert (q.ell, q.m) == (5, 3)
    assert q.identified and not q.failed and q.integer_valid
    assert q.ratio > E


def test_barely_identified(te35):
    q = extract(te35, 810)
    assert (q.ell, q.m) == (5, 3)
    assert q.identified
    assert E < q.ratio < 3 * E


def test_blurred(te35):
    q = extract(te35, 212)
    assert q.failed or q.ratio <= E
    assert not q.identified


@pytest.mark.parametrize("m, ell", [(3, 2), (3, 5), (4, 10), (8, 13)])
def test_node_counts_on_fine_mesh(m, ell):
    mode = disk_find_mode(m, ell, 3.3, "TE")
    q = extract(mode, int(30 * mode.nkR**2))
    assert (q.ell, q.m) == (ell, m)
    assert q.angular_lobes == 2 * m
    assert q.identified


@pytest.mark.parametrize("rotation", [0.1, 0.4, 1.0])
def test_orientation_does_not_matter(te35, rotation):
    q = extract(te35, 3492, rotation=rotation)
    assert (q.ell, q.m) == (5, 3) and q.identified


def test_ratio_for_deformed_shape():
    seed = disk_find_mode(3, 5, 3.3, "Dirichlet")
    alphas = np.round(np.linspace(0, 0.1, 11), 6)
    rec = sweep_trajectory(alphas, seed, 3.3, "Dirichlet").records[-1]
    mesh = interior_mesh(rec.shape, 4000)
    q = extract_quantum_numbers(normalize(fourier_bessel_field(rec.shape, rec.kR, rec.densities)(mesh.points)), mesh)
    assert np.isfinite(q.ratio) and q.ratio > 0
    assert not q.integer_valid
    d = q.to_dict()
    assert set(d) >= {"ell", "m", "ratio", "identified"}
