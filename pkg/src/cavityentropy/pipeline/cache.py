"""Content-addressed cache of solved modes and trajectories.

File layout (little endian)::

    uint64           length L of the header
    L bytes          UTF-8 JSON header
    remaining bytes  complex128 arrays, concatenated in header order

The header records the shape, ``alpha``, polarization, ``kR``, ``M``, the
mesh spec (if a field is stored), the solver version, the array names and
lengths, and the SHA-256 of the array block, which is verified on read.
File names are the SHA-256 of the canonical JSON of the solve inputs plus
the solver version, so any change of inputs or solver misses the cache.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
from pathlib import Path

import numpy as np

from .. import __version__
from ..disk import ModeRecord
from ..errors import CacheError
from ..geometry import EllipseSpec, Polarization
from .config import canonical_json

SOLVER_VERSION = f"{__version__}/nystrom-kress-1"
_HEADER_LEN = struct.Struct("<Q")
_DTYPE = np.dtype("<c16")


def cache_key(kind: str, inputs: dict) -> str:
    """SHA-256 over ``kind``, the solve inputs and the solver version."""
    payload = {"kind": kind, "inputs": inputs, "solver_version": SOLVER_VERSION}
    return hashlib.sha256(canonical_json(payload).encode()).hexdigest()


def _shape_dict(shape: EllipseSpec) -> dict:
    return {
        "alpha": float(shape.alpha),
        "refractive_index": float(shape.refractive_index),
        "polarization": shape.polarization.value,
    }


def _shape_from(d: dict) -> EllipseSpec:
    return EllipseSpec(float(d["alpha"]), float(d["refractive_index"]), Polarization.parse(d["polarization"]))


def _record_header(record: ModeRecord) -> tuple[dict, list[tuple[str, np.ndarray]]]:
    arrays: list[tuple[str, np.ndarray]] = []
    if record.field is not None:
        arrays.append(("field", np.asarray(record.field, dtype=complex)))
    if record.densities is not None:
        arrays.append(("density_u", np.asarray(record.densities[0], dtype=complex)))
        arrays.append(("density_v", np.asarray(record.densities[1], dtype=complex)))
    header = {
        "shape": _shape_dict(record.shape),
        "alpha": float(record.shape.alpha),
        "polarization": record.shape.polarization.value,
        "kR": [float(np.real(record.kR)), float(np.imag(record.kR))],
        "M": record.M,
        "quantum_numbers": list(record.quantum_numbers) if record.quantum_numbers else None,
        "mesh": record.mesh.spec() if record.mesh is not None else None,
        "info": _jsonable(record.info),
    }
    return header, arrays


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def _write(path: Path, header: dict, arrays: list[tuple[str, np.ndarray]]) -> None:
    block = b"".join(np.ascontiguousarray(a, dtype=_DTYPE).tobytes() for _, a in arrays)
    header = dict(header)
    header["solver_version"] = SOLVER_VERSION
    header["arrays"] = [{"name": n, "length": int(a.size)} for n, a in arrays]
    header["sha256"] = hashlib.sha256(block).hexdigest()
    text = canonical_json(header).encode()
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + f".tmp{os.getpid()}")
    with open(tmp, "wb") as fh:
        fh.write(_HEADER_LEN.pack(len(text)))
        fh.write(text)
        fh.write(block)
    os.replace(tmp, path)  # atomic: readers never see a half-written file


def _read(path: Path) -> tuple[dict, dict[str, np.ndarray]]:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise CacheError(f"cannot read cache file {path}: {exc}") from exc
    if len(raw) < _HEADER_LEN.size:
        raise CacheError(f"cache file {path} is truncated")
    (n,) = _HEADER_LEN.unpack_from(raw)
    try:
        header = json.loads(raw[_HEADER_LEN.size : _HEADER_LEN.size + n].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CacheError(f"cache file {path} has a corrupt header") from exc
    block = raw[_HEADER_LEN.size + n :]
    if hashlib.sha256(block).hexdigest() != header.get("sha256"):
        raise CacheError(f"cache file {path} fails its checksum")
    arrays: dict[str, np.ndarray] = {}
    offset = 0
    for spec in header["arrays"]:
        size = int(spec["length"]) * _DTYPE.itemsize
        arrays[spec["name"]] = np.frombuffer(block[offset : offset + size], dtype=_DTYPE).astype(complex)
        offset += size
    if offset != len(block):
        raise CacheError(f"cache file {path} has trailing data")
    return header, arrays


def _record_from(header: dict, arrays: dict[str, np.ndarray]) -> ModeRecord:
    densities = None
    if "density_u" in arrays:
        densities = (arrays["density_u"], arrays["density_v"])
    q = header.get("quantum_numbers")
    return ModeRecord(
        kR=complex(*header["kR"]),
        shape=_shape_from(header["shape"]),
        quantum_numbers=tuple(q) if q else None,
        densities=densities,
        M=header.get("M"),
        info=dict(header.get("info") or {}),
    )


class ModeCache:
    """Directory of cached mode records and trajectories."""

    def __init__(self, root: str | Path):
        self.root = Path(root)

    def path(self, key: str, suffix: str = ".mode") -> Path:
        return self.root / f"{key}{suffix}"

    # single records ---------------------------------------------------------

    def write_record(self, key: str, record: ModeRecord) -> Path:
        header, arrays = _record_header(record)
        path = self.path(key)
        _write(path, header, arrays)
        return path

    def read_record(self, key: str) -> ModeRecord:
        header, arrays = _read(self.path(key))
        return _record_from(header, arrays)

    def has(self, key: str, suffix: str = ".mode") -> bool:
        return self.path(key, suffix).is_file()

    # trajectories -----------------------------------------------------------

    def write_trajectory(self, key: str, label: str, records, complete: bool, failure: dict | None = None) -> Path:
        """Store a (possibly partial) trajectory in one file."""
        headers, arrays = [], []
        for i, record in enumerate(records):
            h, arr = _record_header(record)
            headers.append(h)
            arrays.extend((f"{i}:{name}", a) for name, a in arr)
        header = {
            "label": label,
            "complete": bool(complete),
            "failure": failure,
            "records": headers,
        }
        path = self.path(key, ".traj")
        _write(path, header, arrays)
        return path

    def read_trajectory(self, key: str) -> tuple[dict, list[ModeRecord]]:
        header, arrays = _read(self.path(key, ".traj"))
        records = []
        for i, h in enumerate(header["records"]):
            own = {name.split(":", 1)[1]: a for name, a in arrays.items() if name.split(":", 1)[0] == str(i)}
            records.append(_record_from(h, own))
        return header, records
