"""Continuation of resonances along the deformation parameter ``alpha``."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bem import DEFAULT_POINTS_PER_WAVELENGTH, Parity, bem_find_mode, nodes_for_resolution
from .disk import ModeRecord
from .errors import CavityEntropyError, CollisionError, DomainError, SolverError
from .geometry import Polarization, ellipse_from_alpha

MAX_ALPHA_STEP = 0.01
TRACKING_BOUND = 0.5
COLLISION_TOLERANCE = 1e-6


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Resonance tracked over a monotone ``alpha`` grid."""

    alphas: tuple[float, ...]
    records: tuple[ModeRecord, ...]
    label: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        k = self.kR
        if k.size > 1 and np.max(np.abs(np.diff(k))) >= TRACKING_BOUND:
            raise SolverError(f"trajectory {self.label!r} jumps by >= {TRACKING_BOUND} in kR")

    @property
    def kR(self) -> np.ndarray:
        return np.array([r.kR for r in self.records], dtype=complex)

    @property
    def eps(self) -> np.ndarray:
        return np.array([r.shape.eccentricity for r in self.records])

    def __len__(self) -> int:
        return len(self.records)


def _check_grid(alphas) -> tuple[float, ...]:
    grid = tuple(float(a) for a in alphas)
    if not grid:
        raise DomainError("alpha grid is empty")
    steps = np.diff(grid)
    if steps.size and not (np.all(steps > 0) or np.all(steps < 0)):
        raise DomainError("alpha grid must be strictly monotone")
    if steps.size and np.max(np.abs(steps)) > MAX_ALPHA_STEP + 1e-12:
        raise DomainError(f"alpha steps must not exceed {MAX_ALPHA_STEP}")
    return grid


def sweep_trajectory(
    alphas,
    seed: ModeRecord | complex,
    n: float = 3.3,
    polarization: Polarization | str = Polarization.DIRICHLET,
    parity: Parity = "even",
    ppw: float = DEFAULT_POINTS_PER_WAVELENGTH,
    label: str = "",
) -> Trajectory:
    """Track one resonance over ``alphas``, seeding each step with the previous root.

    Parameters
    ----------
    alphas : sequence of float
        Monotone deformation grid with steps of at most 0.01.
    seed : ModeRecord or complex
        Starting ``kR`` for the first grid point.
    n, polarization, parity, ppw
        Cavity and solver settings (``M`` follows ``ppw`` at every step).

    Raises
    ------
    CavityEntropyError
        Any solver error, re-raised with ``alpha`` (the failing deformation) and
        ``partial`` (the trajectory up to the previous point) attached.
    """
    grid = _check_grid(alphas)
    quantum = seed.quantum_numbers if isinstance(seed, ModeRecord) else None
    current = complex(seed.kR if isinstance(seed, ModeRecord) else seed)
    records: list[ModeRecord] = []
    for alpha in grid:
        shape = ellipse_from_alpha(alpha, n, polarization)
        M = nodes_for_resolution(shape, current, ppw)
        try:
            record = bem_find_mode(shape, M, current, parity=parity, quantum_numbers=quantum)
            if records and abs(record.kR - records[-1].kR) >= TRACKING_BOUND:
                raise SolverError(f"continuation jumped to kR={record.kR:.6f}")
        except CavityEntropyError as exc:
            exc.alpha = alpha
            exc.partial = Trajectory(tuple(grid[: len(records)]), tuple(records), label)
            raise
        records.append(record)
        current = record.kR
    return Trajectory(grid, tuple(records), label)


def track_modes(
    alphas,
    seeds: dict[str, ModeRecord | complex],
    tolerance: float = COLLISION_TOLERANCE,
    **kwargs,
) -> dict[str, Trajectory]:
    """Track several resonances and refuse to merge two of them silently.

    Raises
    ------
    CollisionError
        If two distinct seeds converge to the same ``kR`` at some ``alpha``.
    """
    result = {label: sweep_trajectory(alphas, seed, label=label, **kwargs) for label, seed in seeds.items()}
    labels = list(result)
    for i, first in enumerate(labels):
        for second in labels[i + 1 :]:
            gap = np.abs(result[first].kR - result[second].kR)
            hit = np.flatnonzero(gap < tolerance)
            if hit.size:
                alpha = result[first].alphas[int(hit[0])]
                err = CollisionError(f"modes {first!r} and {second!r} collide at alpha={alpha}")
                err.alpha = alpha
                raise err
    return result
