"""Continuation of resonances along the deformation."""

from __future__ import annotations

import numpy as np
import pytest

from cavityentropy import sweep
from cavityentropy.bem import bem_find_mode
from cavityentropy.disk import ModeRecord, disk_find_mode
from cavityentropy.errors import CollisionError, DomainError, NoResonanceError, SolverError
from cavityentropy.geometry import ellipse_from_alpha
from cavityentropy.sweep import Trajectory, sweep_trajectory, track_modes


@pytest.fixture(scope="module")
def closed35():
    return disk_find_mode(3, 5, 3.3, "Dirichlet")


@pytest.fixture(scope="module")
def coarse(closed35):
    alphas = np.round(np.linspace(0, 0.078, 17), 6)
    return sweep_trajectory(alphas, closed35, 3.3, "Dirichlet")


def test_single_point_sweep_equals_direct_solve(closed35):
    traj = sweep_trajectory([0.0], closed35, 3.3, "Dirichlet")
    direct = bem_find_mode(ellipse_from_alpha(0.0, 3.3, "Dirichlet"), None, closed35.kR, quantum_numbers=(5, 3))
    assert len(traj) == 1
    assert traj.kR[0] == direct.kR


def test_closed_trajectory_continuous(coarse):
    steps = np.abs(np.diff(coarse.kR))
    assert np.all(steps < 0.05)
    assert np.all(coarse.kR.imag == 0)
    assert coarse.eps[-1] == pytest.approx(0.51, abs=0.01)


def test_halving_the_step(closed35):
    fine_grid = np.round(np.linspace(0, 0.04, 17), 6)
    fine = sweep_trajectory(fine_grid, closed35, 3.3, "Dirichlet")
    coarse = sweep_trajectory(fine_grid[::2], closed35, 3.3, "Dirichlet")
    assert np.max(np.abs(fine.kR[::2] - coarse.kR)) < 1e-5


def test_open_trajectory_lossy():
    seed = disk_find_mode(3, 2, 3.3, "TE")
    traj = sweep_trajectory(np.round(np.linspace(0, 0.05, 6), 6), seed, 3.3, "TE")
    assert np.all(traj.kR.imag <= 0)
    assert np.all(np.abs(np.diff(traj.kR)) < 0.05)


def test_grid_validation(closed35):
    with pytest.raises(DomainError):
        sweep_trajectory([0.0, 0.02], closed35)
    with pytest.raises(DomainError):
        sweep_trajectory([0.0, 0.01, 0.005], closed35)
    with pytest.raises(DomainError):
        sweep_trajectory([], closed35)


def test_failure_reports_alpha_and_partial(monkeypatch, closed35):
    real = sweep.bem_find_mode

    def flaky(shape, M, seed, **kw):
        if shape.alpha > 0.015:
            raise NoResonanceError("no dip")
        return real(shape, M, seed, **kw)

    monkeypatch.setattr(sweep, "bem_find_mode", flaky)
    with pytest.raises(NoResonanceError) as info:
        sweep_trajectory([0.0, 0.01, 0.02, 0.03], closed35, 3.3, "Dirichlet")
    assert info.value.alpha == 0.02
    assert info.value.partial.alphas == (0.0, 0.01)
    assert len(info.value.partial) == 2


def test_collision_detected(closed35):
    with pytest.raises(CollisionError) as info:
        track_modes([0.0, 0.01], {"a": closed35, "b": closed35.kR + 0.002}, n=3.3, polarization="Dirichlet")
    assert info.value.alpha == 0.0


def test_trajectory_jump_guard():
    shape = ellipse_from_alpha(0.0)
    recs = (ModeRecord(5.0, shape), ModeRecord(5.6, ellipse_from_alpha(0.01)))
    with pytest.raises(SolverError):
        Trajectory((0.0, 0.01), recs)
