"""Batch commands: solve, sweep, resolve, fit and report.

Every command takes a validated :class:`RunConfig`, writes its artifacts below
``cfg.out_dir`` and merges a stage entry into the run manifest.  Work items
(one per mode) run in a process pool of ``cfg.workers`` processes; the main
process is the single writer of every output file and of the manifest, which
is assembled after all workers have joined.

Commands return an exit status: 0 success, 3 solver failure, 4 analysis
failure.  Configuration errors surface as :class:`ConfigError` before any
work starts (the command line maps them to status 2).
"""

from __future__ import annotations

import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from ..bem import fourier_bessel_field
from ..disk import ModeRecord, disk_find_mode
from ..entropy import TAU_SAT, entropy_extrema, fit_scaling
from ..errors import CacheError, CavityEntropyError, CollisionError, InvariantViolationError, SolverError
from ..resolution import ResolutionReport, analyze_disk_mode, analyze_sweep
from ..sweep import COLLISION_TOLERANCE, sweep_trajectory
from .cache import ModeCache, cache_key
from .config import RunConfig
from .output import ArtifactWriter, svg_plot, update_manifest

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_ANALYSIS = 4

_ENTROPY_SLACK = 1e-12

KR_TABLE = "kR_table.csv"
SWEEP_DIR = "sweep"
RESOLVE_DIR = "resolve"
SCALING_JSON = "scaling.json"


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def _map(fn: Callable, tasks: Sequence, workers: int) -> list:
    """Run ``fn`` over ``tasks`` (in order) with up to ``workers`` processes."""
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        return list(pool.map(fn, tasks))


def _disk_key(cfg: RunConfig, m: int, ell: int) -> str:
    return cache_key(
        "disk",
        {
            "m": m,
            "ell": ell,
            "refractive_index": cfg.refractive_index,
            "polarization": cfg.polarization.value,
            "alpha": 0.0,
        },
    )


def _trajectory_key(cfg: RunConfig, label: str, seed: complex) -> str:
    return cache_key(
        "trajectory",
        {
            "label": label,
            "seed": [float(np.real(seed)), float(np.imag(seed))],
            "alpha_grid": list(cfg.alpha_grid),
            "refractive_index": cfg.refractive_index,
            "polarization": cfg.polarization.value,
            "parity": cfg.parity,
            "points_per_wavelength": cfg.points_per_wavelength,
        },
    )


def _mode_id(m: int, ell: int) -> str:
    return f"l{ell}_m{m}"


# ---------------------------------------------------------------------------
# solve-disk
# ---------------------------------------------------------------------------


def _solve_disk_task(task):
    m, ell, n, pol = task
    try:
        return disk_find_mode(m, ell, n, pol), None
    except CavityEntropyError as exc:
        return None, f"{type(exc).__name__}: {exc}"


def cmd_solve_disk(cfg: RunConfig) -> int:
    """Solve every ``(m, ell)`` seed of the circular cavity and cache it.

    Writes ``kR_table.csv`` (``m,ell,re_kR,im_kR``) with one row per solved
    seed.  A failing seed is reported and skipped; the status is then 3.
    """
    t0 = time.perf_counter()
    cache = ModeCache(cfg.cache_dir)
    writer = ArtifactWriter(cfg.out_dir)
    results: dict[tuple[int, int], ModeRecord] = {}
    failures: dict[str, str] = {}
    todo = []
    hits = 0
    for m, ell in cfg.modes:
        key = _disk_key(cfg, m, ell)
        if cache.has(key):
            try:
                results[(m, ell)] = cache.read_record(key)
                hits += 1
                continue
            except CacheError as exc:
                _log(f"warning: {exc}; solving again")
        todo.append((m, ell))
    solved = _map(
        _solve_disk_task,
        [(m, ell, cfg.refractive_index, cfg.polarization) for m, ell in todo],
        cfg.workers,
    )
    for (m, ell), (record, error) in zip(todo, solved):
        if record is None:
            failures[_mode_id(m, ell)] = error
            _log(f"solve-disk: mode (m={m}, ell={ell}) failed: {error}")
            continue
        cache.write_record(_disk_key(cfg, m, ell), record)
        results[(m, ell)] = record
    rows = [
        (m, ell, float(np.real(results[(m, ell)].kR)), float(np.imag(results[(m, ell)].kR)))
        for m, ell in cfg.modes
        if (m, ell) in results
    ]
    writer.csv(KR_TABLE, ("m", "ell", "re_kR", "im_kR"), rows)
    update_manifest(
        cfg.out_dir,
        cfg.content_hash(),
        "solve-disk",
        time.perf_counter() - t0,
        writer.files,
        {"cache_hits": hits, "solved": len(todo) - len(failures), "failures": failures},
    )
    return EXIT_SOLVER if failures else EXIT_OK


# ---------------------------------------------------------------------------
# sweep-ellipse
# ---------------------------------------------------------------------------


def _sweep_seeds(cfg: RunConfig, cache: ModeCache) -> tuple[list[tuple[str, object, complex]], dict[str, str]]:
    """(label, seed, seed kR) per tracked mode; disk seeds come from the cache or a fresh solve."""
    seeds, failures = [], {}
    for m, ell in cfg.modes:
        key = _disk_key(cfg, m, ell)
        try:
            record = cache.read_record(key) if cache.has(key) else None
        except CacheError:
            record = None
        if record is None:
            try:
                record = disk_find_mode(m, ell, cfg.refractive_index, cfg.polarization)
            except CavityEntropyError as exc:
                failures[_mode_id(m, ell)] = f"{type(exc).__name__}: {exc}"
                continue
            cache.write_record(key, record)
        seeds.append((_mode_id(m, ell), record, complex(record.kR)))
    for i, k in enumerate(cfg.kR_seeds):
        seeds.append((f"seed{i}", complex(k), complex(k)))
    return seeds, failures


def _sweep_task(task):
    label, seed, alphas, n, pol, parity, ppw = task
    try:
        traj = sweep_trajectory(alphas, seed, n, pol, parity=parity, ppw=ppw, label=label)
        return traj.records, True, None
    except CavityEntropyError as exc:
        partial = getattr(exc, "partial", None)
        records = partial.records if partial is not None else ()
        failure = {"alpha": getattr(exc, "alpha", None), "error": f"{type(exc).__name__}: {exc}"}
        return records, False, failure


def cmd_sweep_ellipse(cfg: RunConfig) -> int:
    """Track every mode over ``alpha_grid`` and write ``sweep/<mode>.csv``.

    Each CSV has columns ``alpha,eps,re_kR,im_kR``.  A continuation failure is
    reported with its ``alpha``; the trajectory up to the previous point is
    kept in the cache and in the CSV, and the status is 3.  Two modes that
    converge onto the same ``kR`` are a collision (status 3).
    """
    t0 = time.perf_counter()
    cache = ModeCache(cfg.cache_dir)
    writer = ArtifactWriter(cfg.out_dir)
    seeds, failures = _sweep_seeds(cfg, cache)
    trajectories: dict[str, tuple[ModeRecord, ...]] = {}
    hits = 0
    todo = []
    for label, seed, seed_kR in seeds:
        key = _trajectory_key(cfg, label, seed_kR)
        if cache.has(key, ".traj"):
            try:
                header, records = cache.read_trajectory(key)
                if header["complete"]:
                    trajectories[label] = tuple(records)
                    hits += 1
                    continue
            except CacheError as exc:
                _log(f"warning: {exc}; tracking again")
        todo.append((label, seed, seed_kR))
    tasks = [
        (label, seed, cfg.alpha_grid, cfg.refractive_index, cfg.polarization, cfg.parity, cfg.points_per_wavelength)
        for label, seed, _ in todo
    ]
    for (label, _, seed_kR), (records, complete, failure) in zip(todo, _map(_sweep_task, tasks, cfg.workers)):
        cache.write_trajectory(_trajectory_key(cfg, label, seed_kR), label, records, complete, failure)
        trajectories[label] = tuple(records)
        if not complete:
            failures[label] = f"continuation failed at alpha={failure['alpha']}: {failure['error']}"
            _log(f"sweep-ellipse: {label}: {failures[label]}")

    labels = [label for label, _, _ in seeds]
    for i, first in enumerate(labels):
        for second in labels[i + 1 :]:
            a, b = trajectories.get(first, ()), trajectories.get(second, ())
            for ra, rb in zip(a, b):
                if abs(ra.kR - rb.kR) < COLLISION_TOLERANCE:
                    msg = f"{CollisionError.__name__}: modes {first} and {second} collide at alpha={ra.alpha}"
                    failures[f"{first}+{second}"] = msg
                    _log(f"sweep-ellipse: {msg}")
                    break

    series = []
    for label in labels:
        records = trajectories.get(label, ())
        rows = [(r.alpha, r.shape.eccentricity, float(np.real(r.kR)), float(np.imag(r.kR))) for r in records]
        writer.csv(f"{SWEEP_DIR}/{label}.csv", ("alpha", "eps", "re_kR", "im_kR"), rows)
        series.append({"x": [r[1] for r in rows], "y": [r[2] for r in rows], "label": label})
    if series:
        writer.text(
            f"{SWEEP_DIR}/fig_kR_vs_eps.svg",
            svg_plot(series, "Re kR along the deformation", "eccentricity", "Re kR"),
        )
    update_manifest(
        cfg.out_dir,
        cfg.content_hash(),
        "sweep-ellipse",
        time.perf_counter() - t0,
        writer.files,
        {"cache_hits": hits, "tracked": len(todo), "failures": failures},
    )
    return EXIT_SOLVER if failures else EXIT_OK


# ---------------------------------------------------------------------------
# resolve
# ---------------------------------------------------------------------------


def _check_bound(S: np.ndarray, Ns: np.ndarray, mode_id: str) -> None:
    if np.any(S > np.log(Ns) + _ENTROPY_SLACK):
        raise InvariantViolationError(f"{mode_id}: entropy above log N")


def _resolve_disk_task(task):
    mode_id, record, cfg = task
    try:
        report = analyze_disk_mode(
            record,
            schedule=cfg.schedule,
            tau_sat=cfg.tau_sat if cfg.tau_sat is not None else TAU_SAT,
            tau_knee=cfg.tau_knee,
            n_pop=cfg.n_pop,
            knee_scaled=cfg.knee_scaled,
            mode_id=mode_id,
        )
        Ns = np.array([r.N for r in report.rows])
        _check_bound(report.samples["S"], Ns[:, None], mode_id)
        entropy_rows = [(mode_id, 0.0, 0.0, r.N, r.S, r.logN, r.DSE) for r in report.rows]
        return _strip(report), entropy_rows, None, None
    except CavityEntropyError as exc:
        return None, None, None, f"{type(exc).__name__}: {exc}"


def _resolve_sweep_task(task):
    mode_id, records, cfg = task
    try:
        fields = [fourier_bessel_field(r.shape, r.kR, r.densities) for r in records]
        shapes = [r.shape for r in records]
        report, meshes = analyze_sweep(
            lambda j, mesh: fields[j](mesh.points),
            shapes,
            cfg.sweep_schedule,
            records[0].kR,
            quantum_numbers=records[0].quantum_numbers,
            tau_sat=cfg.tau_sat if cfg.tau_sat is not None else TAU_SAT,
            tau_knee=cfg.tau_knee,
            knee_scaled=cfg.knee_scaled,
            mode_id=mode_id,
        )
        S = report.samples["S_raw"]
        Ns = np.array([[mesh.N for mesh in row] for row in meshes])
        _check_bound(S, Ns, mode_id)
        entropy_rows = []
        for i, row in enumerate(meshes):
            for j, mesh in enumerate(row):
                logN = float(np.log(mesh.N))
                entropy_rows.append(
                    (mode_id, shapes[j].alpha, shapes[j].eccentricity, mesh.N, float(S[i, j]), logN, logN - float(S[i, j]))
                )
        extrema_rows = [
            (mode_id, row[0].target_N, kind, shapes[j].alpha, shapes[j].eccentricity, float(S[i, j]))
            for i, row in enumerate(meshes)
            for j, kind in entropy_extrema(S[i])
        ]
        per_eps = {
            "extrema": extrema_rows,
            "eps": [s.eccentricity for s in shapes],
            "N": [row[0].target_N for row in meshes],
            "S": S.tolist(),
            "logN": np.log(Ns).tolist(),
        }
        return _strip(report), entropy_rows, per_eps, None
    except CavityEntropyError as exc:
        return None, None, None, f"{type(exc).__name__}: {exc}"


def _strip(report: ResolutionReport) -> ResolutionReport:
    report.samples = {}
    return report


def _missing(what: str, command: str, cfg: RunConfig) -> CacheError:
    return CacheError(f"no cached {what}; run `cavityentropy {command} --config <config> --cache {cfg.cache_dir}` first")


def _resolve_plots(writer: ArtifactWriter, report: ResolutionReport, per_eps: dict | None) -> None:
    mid = report.mode_id
    N = [r.N for r in report.rows]
    base = f"{RESOLVE_DIR}/{mid}"
    if per_eps is None:
        series = [
            {"x": N, "y": [r.S for r in report.rows], "label": "S"},
            {"x": N, "y": [r.logN for r in report.rows], "label": "log N"},
        ]
        writer.text(f"{base}_entropy.svg", svg_plot(series, f"Entropies of {mid}", "N", "entropy", logx=True))
        series = [{"x": N, "y": [r.DSE for r in report.rows], "label": "D_SE"}]
        writer.text(f"{base}_dse.svg", svg_plot(series, f"D_SE of {mid}", "N", "log N - S", logx=True))
    else:
        eps = per_eps["eps"]
        series = []
        for i, target in enumerate(per_eps["N"]):
            series.append({"x": eps, "y": per_eps["S"][i], "label": f"S, N~{target}"})
        for i, target in enumerate(per_eps["N"]):
            series.append({"x": eps, "y": per_eps["logN"][i], "label": f"log N, N~{target}", "style": "line"})
        writer.text(f"{base}_entropy.svg", svg_plot(series, f"Entropies of {mid}", "eccentricity", "entropy"))
        series = [
            {"x": eps, "y": list(np.array(per_eps["logN"][i]) - np.array(per_eps["S"][i])), "label": f"N~{t}"}
            for i, t in enumerate(per_eps["N"])
        ]
        writer.text(f"{base}_dse.svg", svg_plot(series, f"D_SE of {mid}", "eccentricity", "log N - S"))
    chi = [(r.N, r.chi2) for r in report.rows if r.chi2 is not None]
    series = [{"x": [c[0] for c in chi], "y": [c[1] for c in chi], "label": "chi^2"}]
    if report.N_O is not None:
        series.append(
            {"x": [report.N_O], "y": [dict(chi)[report.N_O]], "label": f"N_O = {report.N_O}", "style": "marker"}
        )
    writer.text(f"{base}_chi2.svg", svg_plot(series, f"chi-square of {mid}", "N", "chi^2", logx=True, logy=True))


def cmd_resolve(cfg: RunConfig) -> int:
    """Resolution study per mode from cached solves.

    Without a sweep (``alpha_grid`` of one point) each disk mode gets the
    analytic-field study over its mesh schedule; with a sweep each tracked
    mode gets the deformation-ensemble study.  Writes ``resolve/entropy.csv``
    (``mode_id,alpha,eps,N,S,logN,DSE``), ``resolve/chi2.csv``
    (``mode_id,N,chi2``), ``resolve/summary.csv``, one JSON report and three
    SVG figures per mode; sweeps add ``resolve/extrema.csv`` with the interior
    local maxima and minima of every entropy curve ``S(eps)``.  A mode whose analysis fails is reported and left
    out; the others are unaffected (status 4).

    Raises
    ------
    CacheError
        If a required solve is not cached; the message names the command to run.
    """
    t0 = time.perf_counter()
    cache = ModeCache(cfg.cache_dir)
    writer = ArtifactWriter(cfg.out_dir)
    tasks = []
    if cfg.is_sweep:
        for m, ell in cfg.modes:
            disk_key = _disk_key(cfg, m, ell)
            if not cache.has(disk_key):
                raise _missing(f"disk solve for (m={m}, ell={ell})", "solve-disk", cfg)
            seed = cache.read_record(disk_key)
            key = _trajectory_key(cfg, _mode_id(m, ell), seed.kR)
            if not cache.has(key, ".traj"):
                raise _missing(f"trajectory for (m={m}, ell={ell})", "sweep-ellipse", cfg)
            header, records = cache.read_trajectory(key)
            if not header["complete"]:
                raise SolverError(f"trajectory of (m={m}, ell={ell}) is incomplete: {header['failure']}")
            tasks.append((_mode_id(m, ell), tuple(records), cfg))
        results = _map(_resolve_sweep_task, tasks, cfg.workers)
    else:
        for m, ell in cfg.modes:
            key = _disk_key(cfg, m, ell)
            if not cache.has(key):
                raise _missing(f"disk solve for (m={m}, ell={ell})", "solve-disk", cfg)
            tasks.append((_mode_id(m, ell), cache.read_record(key), cfg))
        results = _map(_resolve_disk_task, tasks, cfg.workers)

    entropy_rows, chi_rows, summary_rows, extrema_rows, failures = [], [], [], [], {}
    for (mode_id, _, _), (report, rows, per_eps, error) in zip(tasks, results):
        if report is None:
            failures[mode_id] = error
            _log(f"resolve: {mode_id} failed: {error}")
            continue
        entropy_rows.extend(rows)
        if per_eps is not None:
            extrema_rows.extend(per_eps["extrema"])
        chi_rows.extend((mode_id, r.N, r.chi2) for r in report.rows if r.chi2 is not None)
        summary_rows.append(
            (
                mode_id,
                float(np.real(report.kR)),
                float(np.imag(report.kR)),
                report.nkR,
                report.N_ref,
                report.saturated,
                report.N_O,
                report.N_identified,
                report.ratio_at_N_O,
            )
        )
        writer.json(f"{RESOLVE_DIR}/{mode_id}_report.json", report.to_dict())
        _resolve_plots(writer, report, per_eps)
    writer.csv(f"{RESOLVE_DIR}/entropy.csv", ("mode_id", "alpha", "eps", "N", "S", "logN", "DSE"), entropy_rows)
    writer.csv(f"{RESOLVE_DIR}/chi2.csv", ("mode_id", "N", "chi2"), chi_rows)
    if cfg.is_sweep:
        writer.csv(
            f"{RESOLVE_DIR}/extrema.csv", ("mode_id", "target_N", "kind", "alpha", "eps", "S"), extrema_rows
        )
    writer.csv(
        f"{RESOLVE_DIR}/summary.csv",
        ("mode_id", "re_kR", "im_kR", "nkR", "N_ref", "saturated", "N_O", "N_identified", "ratio_at_N_O"),
        summary_rows,
    )
    update_manifest(
        cfg.out_dir,
        cfg.content_hash(),
        "resolve",
        time.perf_counter() - t0,
        writer.files,
        {"modes": len(tasks), "failures": failures},
    )
    return EXIT_ANALYSIS if failures else EXIT_OK


# ---------------------------------------------------------------------------
# fit-scaling and report
# ---------------------------------------------------------------------------


def _points_from_reports(cfg: RunConfig) -> list[tuple[float, float]]:
    points = []
    for mode_id in cfg.mode_ids():
        path = Path(cfg.out_dir) / RESOLVE_DIR / f"{mode_id}_report.json"
        if not path.is_file():
            _log(f"fit-scaling: no report for {mode_id}; run `cavityentropy resolve` first")
            continue
        report = json.loads(path.read_text())
        if report.get("N_O") is not None:
            points.append((float(report["nkR"]), float(report["N_O"])))
    return points


def cmd_fit_scaling(cfg: RunConfig) -> int:
    """Fit ``N_O = c (nkR)^2`` and write ``scaling.json`` and its figure.

    Points come from ``scaling_points`` of the configuration when given,
    otherwise from the resolution reports of the run.  Fewer than two points
    is an analysis failure (status 4).
    """
    t0 = time.perf_counter()
    writer = ArtifactWriter(cfg.out_dir)
    points = list(cfg.scaling_points) or _points_from_reports(cfg)
    if len(points) < 2:
        _log(f"fit-scaling: need at least two (nkR, N_O) points, have {len(points)}")
        return EXIT_ANALYSIS
    fit = fit_scaling(points)
    x = [k * k for k, _ in fit.points]
    writer.json(
        SCALING_JSON,
        {
            "c": fit.c,
            "residual": fit.residual,
            "points": [{"nkR": k, "N_O": N} for k, N in fit.points],
            "source": "config" if cfg.scaling_points else "resolve",
        },
    )
    line_x = [0.0, max(x)]
    series = [
        {"x": x, "y": [N for _, N in fit.points], "label": "N_O", "style": "marker"},
        {"x": line_x, "y": [fit.c * v for v in line_x], "label": f"{fit.c:.3g} (nkR)^2", "style": "line"},
    ]
    writer.text("fig_scaling.svg", svg_plot(series, "Minimum mesh count", "(nkR)^2", "N_O"))
    update_manifest(cfg.out_dir, cfg.content_hash(), "fit-scaling", time.perf_counter() - t0, writer.files)
    return EXIT_OK


def cmd_report(cfg: RunConfig) -> int:
    """Collect the run's tables into ``summary.json`` and ``summary.md``."""
    t0 = time.perf_counter()
    out = Path(cfg.out_dir)
    writer = ArtifactWriter(out)
    summary: dict = {"config_hash": cfg.content_hash(), "config": cfg.to_dict()}
    for key in ("out_dir", "cache_dir", "workers"):
        summary["config"].pop(key)
    lines = ["# Run summary", "", f"configuration hash `{cfg.content_hash()}`", ""]
    table = out / KR_TABLE
    if table.is_file():
        summary["kR_table"] = table.read_text().splitlines()
        lines += ["## Resonances", "", "```", *summary["kR_table"], "```", ""]
    resolve_summary = out / RESOLVE_DIR / "summary.csv"
    if resolve_summary.is_file():
        summary["resolution"] = resolve_summary.read_text().splitlines()
        lines += ["## Resolution", "", "```", *summary["resolution"], "```", ""]
    scaling = out / SCALING_JSON
    if scaling.is_file():
        data = json.loads(scaling.read_text())
        summary["scaling"] = {"c": data["c"], "residual": data["residual"]}
        lines += ["## Scaling", "", f"N_O = {data['c']:.4g} (nkR)^2, max relative residual {data['residual']:.3g}", ""]
    if len(summary) == 2:
        _log("report: nothing to report yet; run solve-disk, resolve or fit-scaling first")
        return EXIT_ANALYSIS
    writer.json("summary.json", summary)
    writer.text("summary.md", "\n".join(lines))
    update_manifest(out, cfg.content_hash(), "report", time.perf_counter() - t0, writer.files)
    return EXIT_OK
