"""Mesh-resolution studies: schedules, report invariants and the D_SE limit."""

from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cavityentropy.bem import fourier_bessel_field
from cavityentropy.disk import disk_find_mode
from cavityentropy.entropy import max_entropy
from cavityentropy.errors import DomainError
from cavityentropy.geometry import DEFAULT_SCHEDULE, MIN_TARGET_N, interior_mesh
from cavityentropy.quantum import E_THRESHOLD
from cavityentropy.resolution import (
    SCHEDULE_GROWTH,
    analyze_disk_mode,
    analyze_sweep,
    disk_intensity_samples,
    extended_schedule,
    geometric_schedule,
    reference_nkR,
    scaled_schedule,
)
from cavityentropy.sweep import sweep_trajectory

# cheap schedule for the report tests: the rescaled base plus an extension to 2^15
FAST_TOP = 2**15


@pytest.fixture(scope="module")
def te35():
    return disk_find_mode(3, 5, 3.3, "TE")


@pytest.fixture(scope="module")
def te35_report(te35):
    sched = scaled_schedule(te35.nkR, reference_nkR(), top=FAST_TOP)
    return analyze_disk_mode(te35, schedule=sched, n_pop=8)


# --- schedules -----------------------------------------------------------------


def test_geometric_schedule_ends():
    s = geometric_schedule(64, 1024, per_octave=4)
    assert s[0] == 64 and s[-1] == 1024
    assert len(s) == 17
    assert all(b > a for a, b in zip(s, s[1:]))


def test_reference_nkR_is_the_calibration_mode(te35):
    assert reference_nkR() == pytest.approx(te35.nkR, rel=1e-14)


@given(st.floats(1.0, 80.0), st.integers(2**12, 2**20))
def test_scaled_schedule_properties(nkR, top):
    ref = reference_nkR()
    s = scaled_schedule(nkR, ref, top=top)
    assert all(b > a for a, b in zip(s, s[1:]))
    assert s[0] >= MIN_TARGET_N
    factor = (nkR / ref) ** 2
    scaled_base = [int(round(b * factor)) for b in DEFAULT_SCHEDULE]
    for t in scaled_base:
        if t >= MIN_TARGET_N:
            assert t in s
    # geometric continuation stops within one growth step of the top
    if scaled_base[-1] * SCHEDULE_GROWTH <= top:
        assert s[-1] <= top and s[-1] * SCHEDULE_GROWTH > top * (1 - 1e-9) - 1


def test_scaled_schedule_reference_is_identity():
    ref = reference_nkR()
    s = scaled_schedule(ref, ref, top=DEFAULT_SCHEDULE[-1])
    assert s == list(DEFAULT_SCHEDULE)


def test_extended_schedule_growth():
    s = extended_schedule(top=2**16)
    assert s[: len(DEFAULT_SCHEDULE)] == list(DEFAULT_SCHEDULE)
    tail = np.array(s[len(DEFAULT_SCHEDULE) - 1 :], dtype=float)
    assert np.allclose(tail[1:] / tail[:-1], SCHEDULE_GROWTH, rtol=1e-3)


@pytest.mark.parametrize("kw", [{"base": []}, {"growth": 1.0}])
def test_extended_schedule_rejects(kw):
    with pytest.raises(DomainError):
        extended_schedule(**kw)


def test_scaled_schedule_rejects_nonpositive():
    with pytest.raises(DomainError):
        scaled_schedule(0.0, 19.0)


# --- disk study ----------------------------------------------------------------


def test_rotation_ensemble_size_and_orientations(te35):
    mesh = interior_mesh(te35.shape, 2000)
    fields = disk_intensity_samples(te35, mesh, 4)
    assert len(fields) == 4
    # each member is the canonical pattern rotated by j*pi/(m*n_pop)
    canonical = fields[0]
    for f in fields:
        assert np.sum(f**2) == pytest.approx(np.sum(canonical**2), rel=0.05)
    assert not np.allclose(fields[0], fields[1])


def test_report_invariants(te35_report):
    r = te35_report
    Ns = [row.N for row in r.rows]
    assert all(b > a for a, b in zip(Ns, Ns[1:]))
    for row in r.rows:
        assert row.S <= max_entropy(row.N) + 1e-12
        assert row.DSE == pytest.approx(row.logN - row.S, abs=1e-12)
    assert r.N_O is not None and r.N_O <= r.N_ref
    chi = [row.chi2 for row in r.rows if row.chi2 is not None]
    assert chi[-1] == pytest.approx(0.0, abs=1e-12)  # the reference mesh is its own expectation
    assert all(c >= 0 for c in chi)
    for row in r.rows:
        if row.identified:
            assert row.ratio > E_THRESHOLD
    if r.N_identified is not None:
        first = next(row for row in r.rows if row.identified)
        assert first.N == r.N_identified


@pytest.mark.parametrize("m, ell", [(3, 2), (3, 5), (4, 10), (8, 13)])
def test_chi_square_non_increasing_within_wiggle(m, ell):
    """chi^2(N) may rise by at most 5% of its current value from one mesh to the next."""
    mode = disk_find_mode(m, ell, 3.3, "TE")
    report = analyze_disk_mode(
        mode, schedule=scaled_schedule(mode.nkR, reference_nkR(), top=FAST_TOP), identify=False
    )
    chi = [(row.N, row.chi2) for row in report.rows if row.chi2 is not None]
    rises = [(n1, b / a) for (n0, a), (n1, b) in zip(chi, chi[1:]) if b > 1.05 * a]
    assert not rises, f"chi^2 rises by more than 5% at (N, factor) {rises}"


def test_report_is_json_serialisable(te35_report):
    d = te35_report.to_dict()
    text = json.dumps(d, allow_nan=False)
    back = json.loads(text)
    assert back["N_O"] == te35_report.N_O
    assert len(back["table"]) == len(te35_report.rows)
    assert back["N_O_over_nkR2"] == pytest.approx(te35_report.N_O / te35_report.nkR**2)


def test_single_sample_ensemble(te35):
    sched = scaled_schedule(te35.nkR, reference_nkR(), top=2**13)
    r = analyze_disk_mode(te35, schedule=sched, n_pop=1, identify=False)
    assert r.n_pop == 1 and r.ensemble == "single-sample"
    assert all(row.ratio is None for row in r.rows)


def test_unsaturated_schedule_is_reported(te35):
    r = analyze_disk_mode(te35, schedule=DEFAULT_SCHEDULE[:6], n_pop=2, identify=False)
    assert not r.saturated
    assert r.N_ref == r.rows[-1].N
    assert any("did not saturate" in note for note in r.notes)


def test_dse_approaches_quadrature_limit(te35, te35_report, dse_limit):
    """Independent route: D_SE at the top of the schedule vs the continuum integral."""
    limit = dse_limit(3, te35.shape.refractive_index * te35.kR)
    assert te35_report.rows[-1].DSE == pytest.approx(limit, abs=1e-3)


# --- sweep study ---------------------------------------------------------------


def test_small_sweep_study():
    seed = disk_find_mode(3, 2, 3.3, "Dirichlet")
    traj = sweep_trajectory([0.0, 0.01, 0.02], seed, polarization="Dirichlet")
    fields = [fourier_bessel_field(r.shape, r.kR, r.densities) for r in traj.records]
    shapes = [r.shape for r in traj.records]
    report, meshes = analyze_sweep(
        lambda j, mesh: fields[j](mesh.points), shapes, extended_schedule(top=2**13), traj.records[0].kR
    )
    S = report.samples["S_raw"]
    assert S.shape == (len(meshes), 3)
    for i, row in enumerate(meshes):
        for j, mesh in enumerate(row):
            assert S[i, j] <= np.log(mesh.N) + 1e-12
    assert report.N_ref <= report.rows[-1].N
    assert report.ensemble.startswith("deformation ensemble")
    # at alpha = 0 the boundary-integral field reproduces the disk pattern's entropy
    # (to the field's own accuracy, about 1e-3 RMS relative to the analytic mode)
    disk_S = [np.mean(row) for row in S[:, :1]]
    direct = analyze_disk_mode(
        seed, schedule=[m[0].target_N for m in meshes], n_pop=1, identify=False
    )
    assert np.allclose(disk_S, [r.S for r in direct.rows], atol=1e-3)
