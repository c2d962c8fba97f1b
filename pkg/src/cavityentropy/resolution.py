"""Mesh-resolution studies: entropy tables, saturation, chi-square knee, identifiability.

Two studies are provided.

Disk study (:func:`analyze_disk_mode`)
    A fixed circular mode is sampled on a schedule of meshes.  The chi-square
    population is an ensemble of rigid rotations of the standing-wave pattern,
    ``cos(m (theta - phi_j))`` with ``phi_j = j pi / (m n_pop)``: the disk is
    rotation invariant, so the rotations are physically equivalent copies that
    differ only in how the mesh samples them, which is exactly the population
    of "observations" the chi-square distance compares against their converged
    values.  ``n_pop = 1`` gives the single-sample variant.

Sweep study (:func:`analyze_sweep`)
    Fields along a deformation sweep; the chi-square population runs over the
    sweep samples ``eps_j``.

In both, ``D_SE(N)`` of the population mean decides the saturation mesh
``N_ref``; each sample's expected entropy is ``E_j(N) = log N - D_SE,j(N_ref)``
and ``chi^2(N) = sum_j (S_j(N) - E_j(N))^2 / E_j(N)``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .disk import ModeRecord, disk_find_mode
from .entropy import (
    TAU_KNEE,
    TAU_SAT,
    ChiSquareInput,
    chi_square,
    detect_N_O,
    detect_saturation,
    dse,
    expected_curve,
    normalize,
    shannon_entropy,
)
from .errors import DomainError, NotResolvedError
from .geometry import DEFAULT_SCHEDULE, MIN_TARGET_N, InteriorMesh, Polarization, interior_mesh
from .quantum import QuantumNumbers, extract_quantum_numbers
from .special import bessel_j

DEFAULT_N_POP = 16
TAU_KNEE_SCALED = 1e-4
REFERENCE_MODE = (5, 3)
SCHEDULE_TOP = 2**20
SCHEDULE_GROWTH = 1.25
SWEEP_SCHEDULE_TOP = 2**16


def geometric_schedule(start: int = 64, stop: int = 2**20, per_octave: int = 4) -> list[int]:
    """Target mesh counts ``start * 2^(k/per_octave)`` up to ``stop``."""
    count = int(np.floor(per_octave * np.log2(stop / start) + 1e-9)) + 1
    return sorted({int(round(start * 2.0 ** (k / per_octave))) for k in range(count)})


DEFAULT_DISK_SCHEDULE = tuple(geometric_schedule())


def extended_schedule(
    base: Sequence[int] = DEFAULT_SCHEDULE,
    top: int = SWEEP_SCHEDULE_TOP,
    growth: float = SCHEDULE_GROWTH,
) -> list[int]:
    """``base`` followed by a geometric continuation (factor ``growth``) up to ``top``.

    The continuation exposes the saturation of ``D_SE`` beyond the base range,
    so that the expected curve is referred to a well converged mesh.
    """
    targets = [int(t) for t in base]
    if not targets:
        raise DomainError("base schedule is empty")
    if not growth > 1:
        raise DomainError("growth factor must exceed 1")
    while targets[-1] * growth <= top:
        targets.append(int(round(targets[-1] * growth)))
    return sorted({t for t in targets if t >= MIN_TARGET_N})


def scaled_schedule(
    nkR: float,
    reference_nkR: float,
    base: Sequence[int] = DEFAULT_SCHEDULE,
    top: int = SCHEDULE_TOP,
    growth: float = SCHEDULE_GROWTH,
) -> list[int]:
    """Reference schedule rescaled to a mode's wavenumber, then extended.

    The targets ``base_i (nkR / reference_nkR)^2`` keep a fixed set of
    resolutions ``N/(nkR)^2`` for every mode, so knee slopes of different modes
    are measured over the same steps.  Beyond the rescaled top the schedule
    grows geometrically by ``growth`` up to ``top`` to expose the saturation of
    ``D_SE``.
    """
    if not nkR > 0 or not reference_nkR > 0:
        raise DomainError("wavenumbers must be positive")
    factor = (nkR / reference_nkR) ** 2
    return extended_schedule([int(round(b * factor)) for b in base], top, growth)


def reference_nkR(n: float = 3.3) -> float:
    """``n Re(kR)`` of the calibration mode ``(ell, m) = (5, 3)`` (TE)."""
    ell, m = REFERENCE_MODE
    return disk_find_mode(m, ell, n, Polarization.TE).nkR


@dataclass
class ResolutionRow:
    """One mesh of a study: ensemble-mean entropy quantities and identifiability."""

    N: int
    target_N: int
    S: float
    logN: float
    DSE: float
    chi2: float | None = None
    ratio: float | None = None
    ell: int | None = None
    m: int | None = None
    identified: bool | None = None


@dataclass
class ResolutionReport:
    """Per-mode outcome of a resolution study."""

    mode_id: str
    kR: complex
    nkR: float
    quantum_numbers: tuple[int, int] | None
    rows: list[ResolutionRow]
    N_ref: int
    saturated: bool
    dse_ref: float
    N_O: int | None
    ratio_at_N_O: float | None
    identified_at_N_O: bool | None
    N_identified: int | None
    ensemble: str
    n_pop: int
    knee_unit: str
    tau_sat: float
    tau_knee: float
    notes: list[str] = field(default_factory=list)
    samples: dict = field(default_factory=dict, repr=False)

    @property
    def coefficient(self) -> float | None:
        return None if self.N_O is None else self.N_O / self.nkR**2

    def to_dict(self) -> dict:
        out = {
            "mode_id": self.mode_id,
            "kR": [float(np.real(self.kR)), float(np.imag(self.kR))],
            "nkR": self.nkR,
            "quantum_numbers": list(self.quantum_numbers) if self.quantum_numbers else None,
            "N_ref": self.N_ref,
            "saturated": self.saturated,
            "dse_ref": self.dse_ref,
            "N_O": self.N_O,
            "N_O_over_nkR2": self.coefficient,
            "ratio_at_N_O": self.ratio_at_N_O,
            "identified_at_N_O": self.identified_at_N_O,
            "N_identified": self.N_identified,
            "ensemble": self.ensemble,
            "n_pop": self.n_pop,
            "knee_unit": self.knee_unit,
            "tau_sat": self.tau_sat,
            "tau_knee": self.tau_knee,
            "notes": list(self.notes),
            "table": [asdict(r) for r in self.rows],
        }
        return out


# ---------------------------------------------------------------------------
# shared machinery
# ---------------------------------------------------------------------------


def _entropy_of(field_values: np.ndarray) -> float:
    return shannon_entropy(normalize(field_values))


def _finish(
    mode_id: str,
    mode_kR: complex,
    nkR: float,
    quantum: tuple[int, int] | None,
    meshes: list[InteriorMesh],
    S: np.ndarray,
    tau_sat: float,
    tau_knee: float,
    knee_scale: float | None,
    identify: Callable[[InteriorMesh], QuantumNumbers] | None,
    ensemble: str,
) -> ResolutionReport:
    """Saturation, chi-square and knee from a (meshes x samples) entropy table."""
    Ns = np.array([m.N for m in meshes])
    logN = np.log(Ns)
    D = np.array([[dse(s, N) for s in row] for row, N in zip(S, Ns)])
    mean_D = D.mean(axis=1)
    sat = detect_saturation(list(zip(Ns.tolist(), mean_D.tolist())), tau=tau_sat)
    notes: list[str] = []
    if not sat.saturated:
        notes.append("D_SE did not saturate on the schedule; N_ref is the largest mesh")
    dse_ref = D[sat.index]
    rows: list[ResolutionRow] = []
    chi_pairs: list[tuple[int, float]] = []
    for i, mesh in enumerate(meshes):
        row = ResolutionRow(
            N=int(Ns[i]),
            target_N=int(mesh.target_N),
            S=float(S[i].mean()),
            logN=float(logN[i]),
            DSE=float(mean_D[i]),
        )
        if i <= sat.index:
            E = expected_curve(Ns[i], dse_ref)
            row.chi2 = chi_square(ChiSquareInput(S[i], E))
            chi_pairs.append((row.N, row.chi2))
        rows.append(row)

    N_O = None
    try:
        N_O = detect_N_O(chi_pairs, tau=tau_knee, scale=knee_scale) if len(chi_pairs) >= 4 else None
        if N_O is None:
            notes.append("fewer than four meshes below N_ref; knee not determined")
    except NotResolvedError:
        notes.append("chi-square knee not reached below N_ref")

    N_identified = None
    ratio_at = ident_at = None
    if identify is not None:
        # identifiability matters only on the resolution range below N_ref
        for row, mesh in zip(rows[: sat.index + 1], meshes):
            q = identify(mesh)
            row.ratio, row.ell, row.m = float(q.ratio), q.ell, q.m
            correct = quantum is None or (q.ell, q.m) == tuple(quantum)
            row.identified = bool(q.identified and correct)
            if N_identified is None and row.identified:
                N_identified = row.N
            if row.N == N_O:
                ratio_at, ident_at = row.ratio, row.identified

    return ResolutionReport(
        mode_id=mode_id,
        kR=complex(mode_kR),
        nkR=float(nkR),
        quantum_numbers=tuple(quantum) if quantum else None,
        rows=rows,
        N_ref=sat.N_ref,
        saturated=sat.saturated,
        dse_ref=float(mean_D[sat.index]),
        N_O=N_O,
        ratio_at_N_O=ratio_at,
        identified_at_N_O=ident_at,
        N_identified=N_identified,
        ensemble=ensemble,
        n_pop=int(S.shape[1]),
        knee_unit="(nkR)^2" if knee_scale is not None else "mesh point",
        tau_sat=tau_sat,
        tau_knee=tau_knee,
        notes=notes,
        samples={"S": S, "D": D},
    )


# ---------------------------------------------------------------------------
# disk study
# ---------------------------------------------------------------------------


def disk_intensity_samples(mode: ModeRecord, mesh: InteriorMesh, n_pop: int) -> list[np.ndarray]:
    """Standing-wave fields of the rotation ensemble on ``mesh``."""
    _, m = mode.quantum_numbers
    radial = bessel_j(m, mode.shape.refractive_index * mode.kR * mesh.radius)
    theta = mesh.angle
    if m == 0 or n_pop == 1:
        phases = [0.0]
    else:
        phases = [j * np.pi / (m * n_pop) for j in range(n_pop)]
    fields = [radial * np.cos(m * (theta - phi)) for phi in phases]
    if m == 0 and n_pop > 1:
        fields = fields * n_pop
    return fields


def analyze_disk_mode(
    mode: ModeRecord,
    schedule: Sequence[int] | None = None,
    tau_sat: float = TAU_SAT,
    tau_knee: float | None = None,
    n_pop: int = DEFAULT_N_POP,
    knee_scaled: bool = True,
    identify: bool = True,
    mode_id: str | None = None,
) -> ResolutionReport:
    """Resolution study of an analytic disk mode over a mesh schedule.

    Parameters
    ----------
    mode : ModeRecord
        Circular-disk mode with quantum numbers.
    schedule : sequence of int, optional
        Increasing target mesh counts; defaults to :func:`scaled_schedule`
        for the mode's ``nkR``.
    tau_sat, tau_knee : float
        Saturation and knee thresholds.  ``tau_knee`` defaults to
        ``TAU_KNEE_SCALED`` (per unit ``N/(nkR)^2``) or ``TAU_KNEE`` (per mesh
        point) according to ``knee_scaled``.
    n_pop : int
        Size of the rotation ensemble (1 = single sample).
    knee_scaled : bool
        Measure the chi-square slope per unit ``N/(nkR)^2`` instead of per
        mesh point.
    identify : bool
        Run quantum-number extraction on the canonical (``phi = 0``) pattern.
    """
    ell, m = mode.quantum_numbers
    mode_id = mode_id or f"disk_l{ell}_m{m}"
    shape = mode.shape
    nkR = mode.nkR
    if schedule is None:
        schedule = scaled_schedule(nkR, reference_nkR(shape.refractive_index))
    if tau_knee is None:
        tau_knee = TAU_KNEE_SCALED if knee_scaled else TAU_KNEE
    meshes = [interior_mesh(shape, int(t)) for t in schedule]
    S = np.array([[_entropy_of(f) for f in disk_intensity_samples(mode, mesh, n_pop)] for mesh in meshes])

    def canonical(mesh: InteriorMesh) -> QuantumNumbers:
        field_values = disk_intensity_samples(mode, mesh, 1)[0]
        return extract_quantum_numbers(normalize(field_values), mesh)

    ensemble = "single-sample" if S.shape[1] == 1 else f"rotation ensemble ({S.shape[1]} orientations)"
    return _finish(
        mode_id,
        mode.kR,
        nkR,
        mode.quantum_numbers,
        meshes,
        S,
        tau_sat,
        tau_knee,
        nkR**2 if knee_scaled else None,
        canonical if identify else None,
        ensemble,
    )


# ---------------------------------------------------------------------------
# sweep study
# ---------------------------------------------------------------------------


def analyze_sweep(
    field_on: Callable[[int, InteriorMesh], np.ndarray],
    shapes: Sequence,
    schedule: Sequence[int] | None,
    kR: complex,
    quantum_numbers: tuple[int, int] | None = None,
    tau_sat: float = TAU_SAT,
    tau_knee: float | None = None,
    knee_scaled: bool = True,
    mode_id: str = "sweep",
) -> tuple[ResolutionReport, list[list[InteriorMesh]]]:
    """Resolution study over a deformation sweep.

    ``field_on(j, mesh)`` returns the field of sweep sample ``j`` (shape
    ``shapes[j]``) on ``mesh``.  Every sample gets its own mesh of each target
    size; the row ``N`` reported is that of the first sample.  ``schedule``
    defaults to :func:`extended_schedule`; ``tau_knee`` defaults as in
    :func:`analyze_disk_mode`.
    """
    if schedule is None:
        schedule = extended_schedule()
    if tau_knee is None:
        tau_knee = TAU_KNEE_SCALED if knee_scaled else TAU_KNEE
    meshes = [[interior_mesh(s, int(t)) for s in shapes] for t in schedule]
    S = np.array([[_entropy_of(field_on(j, mesh)) for j, mesh in enumerate(row)] for row in meshes])
    Ns = [row[0].N for row in meshes]
    # different shapes may realise slightly different counts: use per-sample N in D_SE
    D = np.array([[dse(S[i, j], meshes[i][j].N) for j in range(len(shapes))] for i in range(len(schedule))])
    S_equiv = np.log(Ns)[:, None] - D  # entropy referred to the row count
    nkR = float(shapes[0].refractive_index * np.real(kR))
    report = _finish(
        mode_id,
        kR,
        nkR,
        quantum_numbers,
        [row[0] for row in meshes],
        S_equiv,
        tau_sat,
        tau_knee,
        nkR**2 if knee_scaled else None,
        None,
        f"deformation ensemble ({len(shapes)} samples)",
    )
    report.samples["S_raw"] = S
    return report, meshes
