"""Analytic resonances of the circular dielectric disk.

Inside the disk the field is ``J_m(n k r) e^{i m theta}``; outside it is the
outgoing ``H1_m(k r) e^{i m theta}``.  Matching the field and its (polarisation
weighted) radial derivative at ``r = R = 1`` yields the characteristic
function whose complex roots are the resonances ``kR``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from dataclasses import field as dc_field
from typing import Literal

import numpy as np
from scipy import special as sp

from .errors import DomainError, ModeIdentificationError, SolverError
from .geometry import EllipseSpec, InteriorMesh, Polarization, ellipse_from_alpha
from .special import bessel_j, cylinder_derivative, hankel1

NEWTON_MAX_ITER = 100
NEWTON_TOL = 1e-13
RESIDUAL_TOL = 1e-9
SEED_IMAG = -0.01
Z_IM_GUARD = 5.0


@dataclass(frozen=True, eq=False)
class ModeRecord:
    """A resonance ``kR`` with (optionally) its field on an interior mesh.

    Attributes
    ----------
    kR : complex
        Dimensionless eigenvalue; ``Im kR <= 0`` for open cavities, ``0`` for
        the closed cavity.
    shape : EllipseSpec
        Cavity at which the mode was solved.
    quantum_numbers : tuple of (ell, m) or None
        Radial and angular numbers when known.
    field : ndarray or None
        Complex amplitudes on ``mesh``.
    mesh : InteriorMesh or None
        Mesh carrying ``field``.
    densities : tuple of ndarray or None
        Boundary densities ``(u, du/dn)`` of a boundary-integral solution.
    M : int or None
        Boundary node count used by the boundary-integral solver.
    info : dict
        Solver diagnostics.
    """

    kR: complex
    shape: EllipseSpec
    quantum_numbers: tuple[int, int] | None = None
    field: np.ndarray | None = None
    mesh: InteriorMesh | None = None
    densities: tuple[np.ndarray, np.ndarray] | None = None
    M: int | None = None
    info: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        if not np.real(self.kR) > 0:
            raise DomainError(f"Re(kR) must be positive, got {self.kR}")
        if self.field is not None and self.mesh is not None and self.field.size != self.mesh.N:
            raise DomainError("field size does not match its mesh")

    @property
    def alpha(self) -> float:
        return self.shape.alpha

    @property
    def nkR(self) -> float:
        return float(self.shape.refractive_index * np.real(self.kR))

    def with_field(self, field: np.ndarray, mesh: InteriorMesh) -> "ModeRecord":
        return replace(self, field=np.asarray(field), mesh=mesh)


def _check_kR(kR) -> complex:
    kR = complex(kR)
    if not kR.real > 0:
        raise DomainError(f"Re(kR) must be positive, got {kR}")
    return kR


def disk_characteristic(m: int, kR, n: float, polarization: Polarization | str) -> complex:
    """Characteristic function of the dielectric disk.

    TM: ``n J'_m(nkR) H_m(kR) - J_m(nkR) H'_m(kR)``;
    TE: ``(1/n) J'_m(nkR) H_m(kR) - J_m(nkR) H'_m(kR)``;
    Dirichlet: ``J_m(nkR)`` (``kR`` real).
    """
    pol = Polarization.parse(polarization)
    kR = _check_kR(kR)
    z = n * kR
    if pol is Polarization.DIRICHLET:
        if kR.imag != 0.0:
            raise DomainError("closed-cavity characteristic requires real kR")
        return complex(bessel_j(m, z.real))
    weight = n if pol is Polarization.TM else 1.0 / n
    return complex(
        weight * cylinder_derivative("J", m, z) * hankel1(m, kR)
        - bessel_j(m, z) * cylinder_derivative("H1", m, kR)
    )


def _characteristic_derivative(m: int, kR: complex, n: float, weight: float) -> complex:
    """d/dkR of the open-cavity characteristic via Bessel ODE identities."""
    z = n * kR
    J, dJ = bessel_j(m, z), cylinder_derivative("J", m, z)
    H, dH = hankel1(m, kR), cylinder_derivative("H1", m, kR)
    # C'' = -C'/x - (1 - m^2/x^2) C
    ddJ = -dJ / z - (1.0 - m * m / (z * z)) * J
    ddH = -dH / kR - (1.0 - m * m / (kR * kR)) * H
    return weight * (n * ddJ * H + dJ * dH) - (n * dJ * dH + J * ddH)


def bessel_zero(m: int, ell: int) -> float:
    """``ell``-th positive zero ``j_{m,ell}`` of ``J_m``."""
    if ell < 1:
        raise DomainError(f"radial number must be >= 1, got {ell}")
    return float(sp.jn_zeros(m, ell)[-1])


def radial_maxima_count(m: int, nkR: complex, samples: int = 4000) -> int:
    """Number of local maxima of ``|J_m(nkR r)|^2`` on ``0 <= r <= 1``."""
    r = (np.arange(samples) + 0.5) / samples
    intensity = np.abs(bessel_j(m, nkR * r)) ** 2
    inner = intensity[1:-1]
    peaks = (inner > intensity[:-2]) & (inner >= intensity[2:])
    count = int(np.sum(peaks))
    # maxima sitting at the centre (m = 0) or on the rim (open cavity) are lobes too
    if intensity[0] > intensity[1]:
        count += 1
    if intensity[-1] > intensity[-2]:
        count += 1
    return count


def _newton(m: int, kR: complex, n: float, pol: Polarization) -> tuple[complex, int]:
    weight = n if pol is Polarization.TM else 1.0 / n
    for iteration in range(1, NEWTON_MAX_ITER + 1):
        f = disk_characteristic(m, kR, n, pol)
        step = f / _characteristic_derivative(m, kR, n, weight)
        kR = kR - step
        if not np.isfinite(kR) or kR.real <= 0 or abs(kR.imag) > Z_IM_GUARD:
            raise SolverError("Newton iteration left the domain")
        if abs(step) < NEWTON_TOL * max(1.0, abs(kR)):
            return kR, iteration
    raise SolverError("Newton iteration did not converge")


def _seed_ladder(m: int, ell: int, n: float) -> list[float]:
    """Real-part seeds for ``kR``: the Bessel zero first, then fallbacks.

    TE roots sit just below ``j_{m,ell}/n``; TM roots sit near the zeros of
    ``J_{m-1}`` (or of ``J'_m``), so those are tried next, followed by a
    uniform ladder across the interval between neighbouring radial orders.
    """
    zeros = sp.jn_zeros(m, ell + 1)
    seeds = [zeros[ell - 1] / n]
    seeds.append(sp.jn_zeros(abs(m - 1), ell)[-1] / n)
    seeds.append(sp.jnp_zeros(m, ell)[-1] / n)
    lo = (zeros[ell - 2] if ell >= 2 else 0.5 * zeros[0]) / n
    hi = zeros[ell] / n
    seeds.extend(np.linspace(lo, hi, 17)[1:-1])
    return [float(s) for s in seeds]


def disk_find_mode(
    m: int,
    ell: int,
    n: float = 3.3,
    polarization: Polarization | str = Polarization.TE,
) -> ModeRecord:
    """Resonance ``(ell, m)`` of the disk of refractive index ``n``.

    The root is seeded at ``Re(n kR) = j_{m,ell}`` (``Im kR = -0.01`` for the
    open cavity) and refined by Newton iteration in the complex plane.  The
    radial structure of the converged mode is checked against ``ell``.

    Raises
    ------
    SolverError
        If Newton does not converge within 100 iterations.
    ModeIdentificationError
        If the converged root has a radial maximum count different from ``ell``.
    """
    pol = Polarization.parse(polarization)
    if int(m) != m or m < 0:
        raise DomainError(f"angular number must be a non-negative integer, got {m}")
    m, ell = int(m), int(ell)
    shape = ellipse_from_alpha(0.0, n, pol)
    jz = bessel_zero(m, ell)
    if pol is Polarization.DIRICHLET:
        kR = complex(jz / n)
        residual = abs(disk_characteristic(m, kR, n, pol))
        iterations = 0
        found = radial_maxima_count(m, n * kR)
    else:
        kR, iterations, residual, found = None, 0, np.inf, -1
        for seed in _seed_ladder(m, ell, n):
            try:
                cand, its = _newton(m, complex(seed, SEED_IMAG), n, pol)
            except SolverError:
                continue
            iterations += its
            cand_found = radial_maxima_count(m, n * cand)
            if kR is None:
                kR, found = cand, cand_found
            if cand_found == ell:
                kR, found = cand, cand_found
                break
        if kR is None:
            raise SolverError(f"Newton did not converge for (ell={ell}, m={m})")
        residual = abs(disk_characteristic(m, kR, n, pol))
        if residual > RESIDUAL_TOL:
            raise SolverError(f"residual {residual:.3e} above tolerance for (ell={ell}, m={m})")
    if found != ell:
        raise ModeIdentificationError(
            f"root kR={kR:.6f} has {found} radial maxima, expected ell={ell}"
        )
    return ModeRecord(
        kR=kR,
        shape=shape,
        quantum_numbers=(ell, m),
        info={"iterations": iterations, "residual": residual, "method": "disk-newton"},
    )


def disk_field(
    mode: ModeRecord,
    mesh: InteriorMesh,
    standing_phase: Literal["cos", "sin"] = "cos",
    rotation: float = 0.0,
) -> np.ndarray:
    """Standing-wave field ``J_m(n kR r) cos(m (theta - rotation))`` on ``mesh``.

    ``standing_phase="sin"`` selects the degenerate partner.  ``rotation``
    rigidly rotates the pattern (the disk is rotation invariant).
    """
    if mode.quantum_numbers is None or not mode.shape.is_circle:
        raise DomainError("disk_field requires a solved circular-disk mode")
    _, m = mode.quantum_numbers
    nk = mode.shape.refractive_index * mode.kR
    radial = bessel_j(m, nk * mesh.radius)
    theta = mesh.angle - rotation
    if standing_phase == "cos":
        angular = np.cos(m * theta)
    elif standing_phase == "sin":
        angular = np.sin(m * theta)
    else:
        raise DomainError(f"standing_phase must be 'cos' or 'sin', got {standing_phase!r}")
    return np.asarray(radial * angular, dtype=complex)
