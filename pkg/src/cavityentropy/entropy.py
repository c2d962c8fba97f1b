"""Shannon entropy of mode patterns and the mesh-resolution criteria built on it.

For an intensity ``rho`` sampled at ``N`` mesh points and normalised to unit
sum, the entropy ``S = -sum rho log rho`` (natural log, ``0 log 0 = 0``) is at
most ``log N``.  The entropy deficit ``D_SE(N) = log N - S`` converges as the
mesh is refined; its converged value defines an expected entropy curve
``E(N) = log N - D_SE(N_ref)`` against which the observed curve is compared
with the chi-square distance ``sum (O - E)^2 / E``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import entr

from .errors import (
    DegenerateFieldError,
    DomainError,
    InvariantViolationError,
    NotResolvedError,
)

TAU_SAT = 1e-5
TAU_KNEE = 1e-5
SUM_TOLERANCE = 1e-12
_LOG_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class ProbabilityField:
    """Normalised intensity ``rho`` on ``N`` mesh points (``sum rho = 1``)."""

    rho: np.ndarray
    mesh: object | None = None

    def __post_init__(self):
        rho = self.rho
        if rho.ndim != 1 or rho.size == 0:
            raise DomainError("rho must be a non-empty 1-D array")
        if np.any(rho < 0) or not np.all(np.isfinite(rho)):
            raise InvariantViolationError("rho must be finite and non-negative")
        if abs(float(np.sum(rho)) - 1.0) > SUM_TOLERANCE:
            raise InvariantViolationError("rho must sum to 1")

    @property
    def N(self) -> int:
        return int(self.rho.size)


def normalize(field, mesh=None) -> ProbabilityField:
    """``rho_i = |psi_i|^2 / sum_j |psi_j|^2``.

    Raises
    ------
    DegenerateFieldError
        If the field vanishes identically.
    """
    amplitude = np.abs(np.asarray(field).ravel())
    # rescale the amplitudes before squaring so that tiny or huge fields
    # neither under- nor overflow
    peak = np.max(amplitude) if amplitude.size else 0.0
    if not peak > 0 or not np.isfinite(peak):
        raise DegenerateFieldError("field is zero everywhere (or not finite)")
    intensity = (amplitude / peak) ** 2
    rho = intensity / np.sum(intensity)
    return ProbabilityField(rho, mesh)


def shannon_entropy(p: ProbabilityField | np.ndarray) -> float:
    """Natural-log Shannon entropy ``-sum rho log rho`` with ``0 log 0 = 0``."""
    rho = p.rho if isinstance(p, ProbabilityField) else np.asarray(p, dtype=float)
    return float(np.sum(entr(rho)))


def max_entropy(N: int) -> float:
    """Maximal entropy ``log N`` of a distribution over ``N`` points."""
    return float(np.log(N))


def dse(S: float, N: int) -> float:
    """Entropy deficit ``D_SE = log N - S``.

    Raises
    ------
    InvariantViolationError
        If ``S`` is negative or exceeds ``log N`` (beyond round-off).
    """
    logN = np.log(N)
    if S < -_LOG_SLACK or S > logN + _LOG_SLACK * max(1.0, logN):
        raise InvariantViolationError(f"entropy {S} outside [0, log N = {logN}]")
    return float(max(logN - S, 0.0))


@dataclass(frozen=True)
class Saturation:
    """Outcome of :func:`detect_saturation`."""

    N_ref: int
    index: int
    dse_ref: float
    saturated: bool

    def __int__(self) -> int:
        return self.N_ref


def detect_saturation(schedule: Sequence[tuple[int, float]], tau: float = TAU_SAT) -> Saturation:
    """First ``N_(i+1)`` with ``|D_SE(N_(i+1)) - D_SE(N_(i))| < tau``.

    If the threshold is never met the largest ``N`` is returned with
    ``saturated=False``.
    """
    pairs = [(int(N), float(D)) for N, D in schedule]
    if len(pairs) < 3:
        raise DomainError("saturation detection needs at least three schedule points")
    Ns = [N for N, _ in pairs]
    if any(b <= a for a, b in zip(Ns, Ns[1:])):
        raise DomainError("schedule must be sorted by strictly increasing N")
    for i in range(len(pairs) - 1):
        if abs(pairs[i + 1][1] - pairs[i][1]) < tau:
            return Saturation(pairs[i + 1][0], i + 1, pairs[i + 1][1], True)
    last = len(pairs) - 1
    return Saturation(pairs[last][0], last, pairs[last][1], False)


def expected_curve(N, dse_ref):
    """Expected entropy ``E(N) = log N - D_SE(N_ref)`` (broadcasts)."""
    return np.log(np.asarray(N, dtype=float)) - np.asarray(dse_ref, dtype=float)


@dataclass(frozen=True, eq=False)
class ChiSquareInput:
    """Observed and expected entropies over a population of ``n_pop`` samples."""

    O: np.ndarray
    E: np.ndarray

    def __post_init__(self):
        O = np.atleast_1d(np.asarray(self.O, dtype=float))
        E = np.atleast_1d(np.asarray(self.E, dtype=float))
        if O.shape != E.shape:
            raise DomainError("observed and expected populations differ in length")
        if np.any(E <= 0):
            raise DomainError("expected values must be strictly positive")
        object.__setattr__(self, "O", O)
        object.__setattr__(self, "E", E)

    @property
    def n_pop(self) -> int:
        return int(self.O.size)


def chi_square(data: ChiSquareInput | Sequence[float], expected: Sequence[float] | None = None) -> float:
    """``chi^2 = sum (O_i - E_i)^2 / E_i`` without degrees-of-freedom scaling."""
    if not isinstance(data, ChiSquareInput):
        data = ChiSquareInput(np.asarray(data), np.asarray(expected))
    return float(np.sum((data.O - data.E) ** 2 / data.E))


def detect_N_O(
    chi: Sequence[tuple[int, float]],
    tau: float = TAU_KNEE,
    scale: float | None = None,
) -> int:
    """Knee of the chi-square curve: smallest ``N_(i)`` whose forward slope is below ``tau``.

    The slope is ``|chi^2(N_(i+1)) - chi^2(N_(i))| / (N_(i+1) - N_(i))``,
    per mesh point.  With ``scale`` given, ``N`` is measured in units of
    ``scale`` instead (``slope * scale``); passing ``scale = (n kR)^2`` makes
    the threshold independent of the mode's wavenumber.

    Raises
    ------
    NotResolvedError
        If no schedule point qualifies.
    """
    pairs = [(int(N), float(c)) for N, c in chi]
    if len(pairs) < 4:
        raise DomainError("knee detection needs at least four schedule points")
    if any(b[0] <= a[0] for a, b in zip(pairs, pairs[1:])):
        raise DomainError("chi-square schedule must be sorted by strictly increasing N")
    unit = 1.0 if scale is None else float(scale)
    for (N0, c0), (N1, c1) in zip(pairs, pairs[1:]):
        slope = abs(c1 - c0) / ((N1 - N0) / unit)
        if slope < tau:
            return N0
    raise NotResolvedError("chi-square slope never drops below the knee threshold; extend the schedule")


def entropy_extrema(S: Sequence[float]) -> list[tuple[int, str]]:
    """Interior local extrema of an entropy curve sampled along a sweep.

    Returns ``(index, kind)`` pairs in index order, ``kind`` being
    ``"max"`` or ``"min"``.  A flat run counts once, at its first sample;
    the end points are never reported.
    """
    values = np.asarray(S, dtype=float)
    keep = np.concatenate([[True], np.diff(values) != 0])  # collapse flat runs
    idx = np.flatnonzero(keep)
    v = values[idx]
    out = []
    for j in range(1, len(v) - 1):
        if v[j] > v[j - 1] and v[j] > v[j + 1]:
            out.append((int(idx[j]), "max"))
        elif v[j] < v[j - 1] and v[j] < v[j + 1]:
            out.append((int(idx[j]), "min"))
    return out


@dataclass(frozen=True)
class ScalingFit:
    """Least-squares fit ``N_O = c (n kR)^2`` through the origin."""

    c: float
    residual: float
    points: tuple[tuple[float, float], ...]


def fit_scaling(points: Sequence[tuple[float, float]]) -> ScalingFit:
    """Fit ``N_O = c (nkR)^2``; ``residual`` is the maximal relative deviation.

    A single point determines ``c`` exactly; the pipeline requires two or more
    points before it reports a scaling law.

    Parameters
    ----------
    points : sequence of (nkR, N_O)
    """
    pts = tuple((float(k), float(N)) for k, N in points)
    if not pts:
        raise DomainError("scaling fit needs at least one point")
    x = np.array([k * k for k, _ in pts])
    y = np.array([N for _, N in pts])
    if np.any(x <= 0):
        raise DomainError("nkR must be non-zero")
    c = float(np.dot(x, y) / np.dot(x, x))
    # |N_O - c x| / N_O written as |r - c| / r with r = N_O / x, which is exact
    # when every point lies on the fitted line
    r = y / x
    residual = float(np.max(np.abs(r - c) / r))
    return ScalingFit(c, residual, pts)
