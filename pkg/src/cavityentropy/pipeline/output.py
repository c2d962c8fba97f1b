"""Deterministic artifact writers (CSV, JSON), checksums and the run manifest.

Floats are written with ``repr`` (shortest round-tripping form), CSVs use
``,`` delimiters, ``.`` decimals, a header row and LF line endings, and JSON
has sorted keys, so identical inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .. import __version__
from ..errors import CacheError
from .cache import SOLVER_VERSION

MANIFEST_NAME = "manifest.json"


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(value)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _clean(obj):
    """Make ``obj`` strict-JSON serialisable (non-finite floats become null)."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, complex):
        return [_clean(obj.real), _clean(obj.imag)]
    return obj


def json_text(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def sha256_file(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


class ArtifactWriter:
    """Writes artifacts below ``root`` and remembers what it wrote."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.files: dict[str, str] = {}

    def _put(self, rel: str, text: str) -> Path:
        path = self.root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        data = text.encode()
        path.write_bytes(data)
        self.files[rel] = hashlib.sha256(data).hexdigest()
        return path

    def csv(self, rel: str, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
        return self._put(rel, csv_text(header, rows))

    def json(self, rel: str, obj) -> Path:
        return self._put(rel, json_text(obj))

    def text(self, rel: str, text: str) -> Path:
        return self._put(rel, text)


def update_manifest(
    root: str | Path,
    config_hash: str,
    stage: str,
    seconds: float,
    files: dict[str, str],
    extra: dict | None = None,
) -> dict:
    """Merge one stage into ``manifest.json`` and verify every listed file.

    The manifest keeps the configuration hash, the solver and package
    versions, per-stage timings (and extra stage facts such as cache hits) and
    the SHA-256 of every artifact.  It is the run log: timings differ between
    runs, the listed artifacts do not.

    Raises
    ------
    CacheError
        If a listed artifact is missing or its checksum does not match.
    """
    root = Path(root)
    path = root / MANIFEST_NAME
    manifest = {}
    if path.is_file():
        try:
            manifest = json.loads(path.read_text())
        except json.JSONDecodeError:
            manifest = {}
    if manifest.get("config_hash") != config_hash:
        manifest = {}  # a different configuration starts a fresh manifest
    manifest["config_hash"] = config_hash
    manifest["solver_version"] = SOLVER_VERSION
    manifest["package_version"] = __version__
    stages = manifest.setdefault("stages", {})
    stages[stage] = {"seconds": round(float(seconds), 6), **(extra or {})}
    listed = manifest.setdefault("files", {})
    listed.update(files)
    for rel, digest in sorted(listed.items()):
        target = root / rel
        if not target.is_file() or sha256_file(target) != digest:
            raise CacheError(f"manifest entry {rel} is missing or altered")
    path.write_text(json_text(manifest))
    return manifest


# ---------------------------------------------------------------------------
# SVG
# ---------------------------------------------------------------------------

_PALETTE = ("#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#17becf", "#9467bd", "#e377c2", "#8c564b", "#7f7f7f", "#bcbd22")


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    return list(np.linspace(lo, hi, count))


def svg_plot(
    series: Sequence[dict],
    title: str,
    xlabel: str,
    ylabel: str,
    logy: bool = False,
    logx: bool = False,
    width: int = 640,
    height: int = 420,
) -> str:
    """A self-contained SVG line/marker plot.

    Each series is a dict with ``x``, ``y``, ``label`` and optionally
    ``style`` (``"line"``, ``"marker"`` or ``"both"``, default ``"both"``).
    Non-finite points, and non-positive ones on log axes, are skipped.
    """
    left, right, top, bottom = 70, 160, 40, 50
    pw, ph = width - left - right, height - top - bottom

    def tx(v):
        return np.log10(v) if logx else v

    def ty(v):
        return np.log10(v) if logy else v

    pts = []
    for s in series:
        x = np.asarray(s["x"], dtype=float)
        y = np.asarray(s["y"], dtype=float)
        ok = np.isfinite(x) & np.isfinite(y)
        if logx:
            ok &= x > 0
        if logy:
            ok &= y > 0
        pts.append((tx(x[ok]), ty(y[ok])))
    allx = np.concatenate([p[0] for p in pts]) if pts else np.array([])
    ally = np.concatenate([p[1] for p in pts]) if pts else np.array([])
    if allx.size == 0:
        allx, ally = np.array([0.0, 1.0]), np.array([0.0, 1.0])
    x0, x1 = float(allx.min()), float(allx.max())
    y0, y1 = float(ally.min()), float(ally.max())
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    def px(v):
        return left + (v - x0) / (x1 - x0) * pw

    def py(v):
        return top + ph - (v - y0) / (y1 - y0) * ph

    def fmt(v, log):
        value = 10**v if log else v
        return f"{value:.3g}"

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="14">{_esc(title)}</text>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for v in _ticks(x0, x1):
        out.append(f'<line x1="{px(v):.2f}" y1="{top + ph}" x2="{px(v):.2f}" y2="{top + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{px(v):.2f}" y="{top + ph + 16}" text-anchor="middle">{fmt(v, logx)}</text>')
    for v in _ticks(y0, y1):
        out.append(f'<line x1="{left - 4}" y1="{py(v):.2f}" x2="{left}" y2="{py(v):.2f}" stroke="black"/>')
        out.append(f'<text x="{left - 6}" y="{py(v) + 4:.2f}" text-anchor="end">{fmt(v, logy)}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 10}" text-anchor="middle">{_esc(xlabel)}</text>')
    out.append(
        f'<text x="16" y="{top + ph / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {top + ph / 2:.1f})">{_esc(ylabel)}</text>'
    )
    for i, (s, (x, y)) in enumerate(zip(series, pts)):
        color = _PALETTE[i % len(_PALETTE)]
        style = s.get("style", "both")
        if style in ("line", "both") and x.size > 1:
            path = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y))
            out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        if style in ("marker", "both"):
            for a, b in zip(x, y):
                out.append(f'<circle cx="{px(a):.2f}" cy="{py(b):.2f}" r="3" fill="{color}"/>')
        ly = top + 14 * i + 8
        out.append(f'<rect x="{left + pw + 10}" y="{ly - 6}" width="10" height="10" fill="{color}"/>')
        out.append(f'<text x="{left + pw + 24}" y="{ly + 3}">{_esc(str(s.get("label", "")))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
