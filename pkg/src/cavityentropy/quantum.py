"""Quantum-number extraction and the lobe-contrast identifiability criterion.

A mode ``(ell, m)`` of a near-circular cavity shows ``2m`` angular lobes on a
circle through an intensity maximum and ``ell`` radial lobes along each
anti-nodal ray.  The pattern is called *identifiable* on a mesh when the
sampled intensity separates neighbouring lobes clearly: the median lobe peak
exceeds ``e`` times the median saddle between adjacent lobes.

Mesh samples are lifted to a regular lattice grid (cells outside the cavity
take the value of their nearest interior neighbour) and read off with
bilinear interpolation, so that the contrast reflects what the mesh resolves.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.interpolate import RegularGridInterpolator
from scipy.signal import find_peaks

from .entropy import ProbabilityField
from .geometry import InteriorMesh

E_THRESHOLD = float(np.e)
NEAR_CIRCULAR_ALPHA = 0.05
ANGULAR_SAMPLES = 2048
RADIAL_SAMPLES = 3000
PROMINENCE = 1e-3
RELATIVE_PROMINENCE = 0.1


@dataclass(frozen=True)
class QuantumNumbers:
    """Result of :func:`extract_quantum_numbers`.

    Attributes
    ----------
    ell, m : int
        Radial lobe count along the anti-nodal rays (modal over rays) and half
        the dominant angular harmonic of the intensity.
    ratio : float
        Lobe contrast ``min(angular, radial)``.
    angular_ratio, radial_ratio : float
        Median peak / median saddle around the sampling circle and (median over
        anti-nodal rays) along the radial direction; ``inf`` when there is no
        saddle to resolve (a single lobe).
    identified : bool
        ``ratio > e`` and extraction succeeded.
    failed : bool
        Fewer than ``2m`` angular lobes were resolved on the sampling circle.
    integer_valid : bool
        Whether the shape is close enough to a circle for ``(ell, m)`` to be
        meaningful quantum numbers.
    """

    ell: int
    m: int
    ratio: float
    angular_ratio: float
    radial_ratio: float
    identified: bool
    failed: bool
    integer_valid: bool
    angular_lobes: int
    sampling_radius: float

    def to_dict(self) -> dict:
        return {k: (None if isinstance(v, float) and not np.isfinite(v) else v) for k, v in self.__dict__.items()}


def lattice_interpolator(mesh: InteriorMesh, values: np.ndarray) -> RegularGridInterpolator:
    """Bilinear interpolant of mesh values on the lattice grid of ``mesh``."""
    ix, iy = mesh.ix, mesh.iy
    I = int(np.max(np.abs(ix))) + 2
    J = int(np.max(np.abs(iy))) + 2
    grid = np.full((2 * I + 1, 2 * J + 1), np.nan)
    grid[ix + I, iy + J] = values
    missing = np.isnan(grid)
    nearest = ndimage.distance_transform_edt(missing, return_distances=False, return_indices=True)
    grid = grid[tuple(nearest)]
    ax = np.arange(-I, I + 1) * mesh.h
    ay = np.arange(-J, J + 1) * mesh.h
    return RegularGridInterpolator((ax, ay), grid, method="linear")


def _peaks_and_saddles(profile: np.ndarray, circular: bool) -> tuple[np.ndarray, np.ndarray]:
    """Peak values and the minima between adjacent peaks."""
    if circular:
        start = int(np.argmin(profile))
        profile = np.concatenate([profile[start:], profile[:start], profile[start : start + 1]])
    top = float(np.max(profile))
    if not top > 0:
        return np.array([]), np.array([])
    idx, props = find_peaks(profile, prominence=PROMINENCE * top)
    # interpolation kinks on a steep flank rise only slightly above their own
    # surroundings; a lobe must stand out by a fraction of its own height
    idx = idx[props["prominences"] >= RELATIVE_PROMINENCE * profile[idx]]
    peaks = profile[idx]
    saddles = np.array([profile[a : b + 1].min() for a, b in zip(idx[:-1], idx[1:])])
    if circular and idx.size >= 2:
        wrap = min(profile[idx[-1] :].min(), profile[: idx[0] + 1].min())
        saddles = np.append(saddles, wrap)
    return peaks, saddles


def _contrast(peaks: np.ndarray, saddles: np.ndarray) -> float:
    if peaks.size == 0:
        return 0.0
    if saddles.size == 0:
        return float("inf")
    floor = np.median(saddles)
    if floor <= 0:
        return float("inf")
    return float(np.median(peaks) / floor)


def extract_quantum_numbers(p: ProbabilityField, mesh: InteriorMesh) -> QuantumNumbers:
    """Read ``(ell, m)`` and the lobe contrast off a sampled intensity.

    ``m`` is half the dominant non-zero harmonic of ``rho`` on the circle through
    the global maximum; ``ell`` counts the maxima along the anti-nodal rays
    (the ``2m`` directions of maximal ``2m``-th harmonic) from centre to rim;
    the contrast takes the smaller of the angular and radial peak-to-saddle
    ratios, each defined as median peak over median saddle.
    """
    rho = p.rho
    interp = lattice_interpolator(mesh, rho)
    shape = mesh.shape
    g = int(np.argmax(rho))
    r0 = float(mesh.radius[g])
    t0 = float(mesh.angle[g])

    theta = t0 + 2.0 * np.pi * np.arange(ANGULAR_SAMPLES) / ANGULAR_SAMPLES
    ring = interp(np.column_stack([r0 * np.cos(theta), r0 * np.sin(theta)]))
    spectrum = np.fft.rfft(ring)
    power = np.abs(spectrum)
    power[0] = 0.0
    harmonic = int(np.argmax(power))
    m = int(round(harmonic / 2))

    if m > 0 and r0 > 0:
        ang_peaks, ang_saddles = _peaks_and_saddles(ring, circular=True)
        lobes = int(ang_peaks.size)
        angular = _contrast(ang_peaks, ang_saddles)
        failed = lobes < 2 * m
        phase = float(np.angle(spectrum[harmonic]))
        base = t0 - phase / harmonic
        rays = base + np.arange(2 * m) * np.pi / m
    else:
        lobes, angular, failed = 0, float("inf"), False
        rays = np.array([t0])

    # rays run to the rim of the cavity in their direction
    s = np.arange(RADIAL_SAMPLES) / RADIAL_SAMPLES
    ells, radial = [], []
    for phi in rays:
        c, d = np.cos(phi), np.sin(phi)
        rim = 1.0 / np.sqrt((c / shape.a) ** 2 + (d / shape.b) ** 2)
        line = interp(np.column_stack([s * rim * c, s * rim * d]))
        peaks, saddles = _peaks_and_saddles(line, circular=False)
        ells.append(peaks.size)
        radial.append(_contrast(peaks, saddles))
    votes = np.bincount(ells)
    # modal count; a tie goes to the larger count (a lobe resolved on some
    # anti-nodal rays is present, blurred on the others)
    ell = int(np.flatnonzero(votes == votes.max())[-1])
    radial_ratio = float(np.median(radial))
    ratio = min(angular, radial_ratio)
    identified = bool(ratio > E_THRESHOLD and not failed)
    return QuantumNumbers(
        ell=ell,
        m=m,
        ratio=float(ratio),
        angular_ratio=float(angular),
        radial_ratio=radial_ratio,
        identified=identified,
        failed=bool(failed),
        integer_valid=bool(shape.alpha <= NEAR_CIRCULAR_ALPHA),
        angular_lobes=lobes,
        sampling_radius=r0,
    )
