"""Run configuration: a single JSON document, validated and hashable."""

from __future__ import annotations

import csv
import hashlib
import json
import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from ..errors import ConfigError, DomainError
from ..geometry import ALPHA_MAX, Polarization

# keys that steer where and how fast a run happens but never what it computes
_LOCATION_KEYS = ("out_dir", "cache_dir", "workers")


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration.

    Attributes
    ----------
    modes : tuple of (m, ell)
        Circular-cavity quantum numbers to solve, analyse and track.
    kR_seeds : tuple of complex
        Additional continuation seeds (without quantum numbers) for sweeps.
    refractive_index : float
        Cavity index ``n > 1``.
    polarization : Polarization
        TM, TE or Dirichlet (closed cavity).
    parity : str
        Symmetry class ``"even"`` or ``"odd"`` under ``y -> -y`` for the
        boundary-integral solver.
    alpha_grid : tuple of float
        Monotone deformation grid of the ellipse sweep (steps <= 0.01).
    schedule : tuple of int or None
        Mesh targets of the disk study; ``None`` selects the per-mode schedule
        rescaled with ``(nkR)^2``.
    sweep_schedule : tuple of int or None
        Mesh targets of the sweep study; ``None`` selects the reference
        schedule with its geometric extension.
    tau_sat, tau_knee : float or None
        Saturation and knee thresholds (``None``: library defaults).
    n_pop : int
        Rotation-ensemble size of the disk study.
    knee_scaled : bool
        Knee slope per unit ``N/(nkR)^2`` instead of per mesh point.
    points_per_wavelength : float
        Boundary resolution of the boundary-integral solver.
    scaling_points : tuple of (nkR, N_O)
        Externally supplied points for ``fit-scaling``; when empty the points
        come from the resolution reports of the run.
    out_dir, cache_dir : str
        Output and cache directories.
    workers : int
        Worker processes (>= 1).
    """

    modes: tuple[tuple[int, int], ...] = ()
    kR_seeds: tuple[complex, ...] = ()
    refractive_index: float = 3.3
    polarization: Polarization = Polarization.TE
    parity: str = "even"
    alpha_grid: tuple[float, ...] = (0.0,)
    schedule: tuple[int, ...] | None = None
    sweep_schedule: tuple[int, ...] | None = None
    tau_sat: float | None = None
    tau_knee: float | None = None
    n_pop: int = 16
    knee_scaled: bool = True
    points_per_wavelength: float = 12.0
    scaling_points: tuple[tuple[float, float], ...] = ()
    out_dir: str = "out"
    cache_dir: str = "cache"
    workers: int = field(default_factory=lambda: os.cpu_count() or 1)

    def __post_init__(self):
        _validate(self)

    # -- serialisation -----------------------------------------------------

    def to_dict(self) -> dict:
        d = asdict(self)
        d["modes"] = [list(m) for m in self.modes]
        d["kR_seeds"] = [[float(np.real(k)), float(np.imag(k))] for k in self.kR_seeds]
        d["polarization"] = self.polarization.value
        d["alpha_grid"] = list(self.alpha_grid)
        d["schedule"] = None if self.schedule is None else list(self.schedule)
        d["sweep_schedule"] = None if self.sweep_schedule is None else list(self.sweep_schedule)
        d["scaling_points"] = [list(p) for p in self.scaling_points]
        return d

    def content_hash(self) -> str:
        """SHA-256 of everything that influences results (locations excluded)."""
        d = self.to_dict()
        for key in _LOCATION_KEYS:
            d.pop(key)
        return hashlib.sha256(canonical_json(d).encode()).hexdigest()

    @property
    def is_sweep(self) -> bool:
        return len(self.alpha_grid) > 1

    def mode_ids(self) -> list[str]:
        return [f"l{ell}_m{m}" for m, ell in self.modes]


def canonical_json(obj) -> str:
    """Deterministic JSON text (sorted keys, no whitespace variation)."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def _fail(msg: str):
    raise ConfigError(msg)


def _validate(cfg: RunConfig) -> None:
    for m, ell in cfg.modes:
        if not (isinstance(m, int) and isinstance(ell, int)) or m < 0 or ell < 1:
            _fail(f"mode (m={m}, ell={ell}) needs integers m >= 0, ell >= 1")
    if len(set(cfg.modes)) != len(cfg.modes):
        _fail("duplicate entries in modes")
    for k in cfg.kR_seeds:
        if not np.real(k) > 0:
            _fail(f"kR seed {k} must have a positive real part")
    if not cfg.refractive_index > 1:
        _fail("refractive_index must exceed 1")
    if cfg.parity not in ("even", "odd"):
        _fail("parity must be 'even' or 'odd'")
    grid = np.asarray(cfg.alpha_grid, dtype=float)
    if grid.size == 0:
        _fail("alpha_grid must not be empty")
    if np.any(grid < 0) or np.any(grid > ALPHA_MAX):
        _fail(f"alpha values must lie in [0, {ALPHA_MAX}]")
    steps = np.diff(grid)
    if steps.size and not (np.all(steps > 0) or np.all(steps < 0)):
        _fail("alpha_grid must be strictly monotone")
    for name in ("schedule", "sweep_schedule"):
        sched = getattr(cfg, name)
        if sched is None:
            continue
        if len(sched) < 4:
            _fail(f"{name} needs at least four mesh counts")
        if any(b <= a for a, b in zip(sched, sched[1:])):
            _fail(f"{name} must be strictly increasing")
        if sched[0] < 16:
            _fail(f"{name} entries must be >= 16")
    for name in ("tau_sat", "tau_knee"):
        value = getattr(cfg, name)
        if value is not None and not value > 0:
            _fail(f"{name} must be positive")
    if cfg.n_pop < 1:
        _fail("n_pop must be >= 1")
    if not cfg.points_per_wavelength > 0:
        _fail("points_per_wavelength must be positive")
    for k, N in cfg.scaling_points:
        if not (k > 0 and N > 0):
            _fail("scaling points need positive nkR and N_O")
    if cfg.workers < 1:
        _fail("workers must be >= 1")


def _as_int(value, name):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
        _fail(f"{name} must be an integer, got {value!r}")
    return int(value)


def config_from_dict(data: dict) -> RunConfig:
    """Build a :class:`RunConfig` from parsed JSON, rejecting unknown keys."""
    if not isinstance(data, dict):
        _fail("configuration must be a JSON object")
    known = set(RunConfig.__dataclass_fields__)
    unknown = sorted(set(data) - known)
    if unknown:
        _fail(f"unknown configuration keys: {', '.join(unknown)}")
    kw = dict(data)
    try:
        if "modes" in kw:
            kw["modes"] = tuple(
                (_as_int(p[0], "m"), _as_int(p[1], "ell")) for p in kw["modes"] if _pair(p, "modes")
            )
        if "kR_seeds" in kw:
            kw["kR_seeds"] = tuple(
                complex(float(p[0]), float(p[1])) for p in kw["kR_seeds"] if _pair(p, "kR_seeds")
            )
        if "polarization" in kw:
            kw["polarization"] = Polarization.parse(kw["polarization"])
        if "alpha_grid" in kw:
            kw["alpha_grid"] = tuple(float(a) for a in kw["alpha_grid"])
        for name in ("schedule", "sweep_schedule"):
            if kw.get(name) is not None:
                kw[name] = tuple(_as_int(v, name) for v in kw[name])
        if "scaling_points" in kw:
            kw["scaling_points"] = tuple(
                (float(p[0]), float(p[1])) for p in kw["scaling_points"] if _pair(p, "scaling_points")
            )
        for name in ("n_pop", "workers"):
            if name in kw:
                kw[name] = _as_int(kw[name], name)
        for name in ("refractive_index", "points_per_wavelength"):
            if name in kw:
                kw[name] = float(kw[name])
        for name in ("tau_sat", "tau_knee"):
            if kw.get(name) is not None:
                kw[name] = float(kw[name])
        if "knee_scaled" in kw and not isinstance(kw["knee_scaled"], bool):
            _fail("knee_scaled must be a boolean")
        for name in ("out_dir", "cache_dir", "parity"):
            if name in kw and not isinstance(kw[name], str):
                _fail(f"{name} must be a string")
    except (TypeError, ValueError, DomainError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    return RunConfig(**kw)


def _pair(p, name) -> bool:
    if not isinstance(p, (list, tuple)) or len(p) != 2:
        _fail(f"entries of {name} must be pairs")
    return True


def load_config(path: str | Path) -> RunConfig:
    """Read and validate a JSON configuration file.

    Raises
    ------
    ConfigError
        If the file is missing, not valid JSON, or fails validation.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read configuration {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    return config_from_dict(data)


def apply_seed_schedule(cfg: RunConfig, path: str | Path) -> RunConfig:
    """Override modes and/or the mesh schedule from a CSV file.

    The CSV carries a header; columns ``m`` and ``ell`` replace the mode list,
    a column ``N`` replaces the disk-study schedule (and the sweep schedule
    when the run is a sweep).  Other columns are ignored.
    """
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read seed schedule {path}: {exc}") from exc
    if not rows:
        _fail(f"seed schedule {path} has no rows")
    cols = set(rows[0])
    changes = {}
    try:
        if {"m", "ell"} <= cols:
            changes["modes"] = tuple(
                (int(r["m"]), int(r["ell"])) for r in rows if r["m"] not in ("", None)
            )
        if "N" in cols:
            sched = tuple(int(r["N"]) for r in rows if r["N"] not in ("", None))
            changes["schedule"] = sched
            if cfg.is_sweep:
                changes["sweep_schedule"] = sched
    except ValueError as exc:
        raise ConfigError(f"seed schedule {path}: {exc}") from exc
    if not changes:
        _fail(f"seed schedule {path} needs columns 'm,ell' and/or 'N'")
    return replace(cfg, **changes)
