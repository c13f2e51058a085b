"""On-disk formats: raw complex binaries with JSON sidecars, PBM masks, reports.

Binary layout is little-endian float64, interleaved (re, im), row-major for
plane samples.  Every sidecar and report carries the format version string
"planar-sieve/1".  Report JSON is canonical (sorted keys, tight separators,
no NaN/inf) so that identical runs produce byte-identical files.
"""

import base64
import json
import math
from pathlib import Path

import numpy as np

from .density import Mask
from .tfcore.types import FORMAT_VERSION, FockRepr, Signal, TFGrid, TFRepr

INFEASIBLE = "infeasible"


class FormatError(ValueError):
    """Malformed or version-incompatible on-disk data."""


def _complex_to_bytes(values: np.ndarray) -> bytes:
    flat = np.ascontiguousarray(values).reshape(-1)
    inter = np.empty(2 * flat.size, dtype="<f8")
    inter[0::2] = flat.real
    inter[1::2] = flat.imag
    return inter.tobytes()


def _complex_from_bytes(raw: bytes, count: int) -> np.ndarray:
    inter = np.frombuffer(raw, dtype="<f8")
    if inter.size != 2 * count:
        raise FormatError(
            f"expected {2 * count} float64 values, found {inter.size}")
    return inter[0::2] + 1j * inter[1::2]


def json_safe(value):
    """Map values to JSON-encodable form; non-finite floats to markers."""
    if isinstance(value, dict):
        return {str(k): json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(v) for v in value]
    if isinstance(value, (np.floating, float)):
        f = float(value)
        if math.isinf(f):
            return INFEASIBLE
        if math.isnan(f):
            raise ValueError("NaN has no report encoding (defect upstream)")
        return f
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, np.ndarray):
        return [json_safe(v) for v in value.tolist()]
    return value


def canonical_json(obj) -> str:
    """Deterministic JSON encoding: sorted keys, no whitespace, no NaN/inf."""
    return json.dumps(json_safe(obj), sort_keys=True,
                      separators=(",", ":"), allow_nan=False) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(canonical_json(obj))
    return path


def load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON in {path}: {exc}") from exc


def _check_sidecar(meta, kind, path):
    if meta.get("format") != FORMAT_VERSION:
        raise FormatError(
            f"{path}: format {meta.get('format')!r}, expected {FORMAT_VERSION!r}")
    if meta.get("kind") != kind:
        raise FormatError(f"{path}: kind {meta.get('kind')!r}, expected {kind!r}")


def _grid_meta(grid: TFGrid) -> dict:
    return {"nx": grid.nx, "nw": grid.nw, "dx": grid.dx, "dw": grid.dw,
            "x0": grid.x0, "w0": grid.w0}


def _grid_from_meta(meta) -> TFGrid:
    return TFGrid(nx=int(meta["nx"]), nw=int(meta["nw"]), dx=float(meta["dx"]),
                  dw=float(meta["dw"]), x0=float(meta["x0"]), w0=float(meta["w0"]))


def write_signal(base, sig: Signal) -> tuple:
    """Write <base>.bin and <base>.json; returns both paths."""
    base = Path(base)
    bin_path = base.with_suffix(".bin")
    meta_path = base.with_suffix(".json")
    bin_path.write_bytes(_complex_to_bytes(sig.samples))
    write_json(meta_path, {"format": FORMAT_VERSION, "kind": "signal",
                           "n": sig.n, "dt": sig.dt, "t0": sig.t0})
    return bin_path, meta_path


def read_signal(base) -> Signal:
    base = Path(base)
    meta = load_json(base.with_suffix(".json"))
    _check_sidecar(meta, "signal", base)
    n = int(meta["n"])
    samples = _complex_from_bytes(base.with_suffix(".bin").read_bytes(), n)
    return Signal(samples, float(meta["dt"]), float(meta["t0"]))


def _write_plane(base, rep, kind):
    base = Path(base)
    bin_path = base.with_suffix(".bin")
    meta_path = base.with_suffix(".json")
    bin_path.write_bytes(_complex_to_bytes(rep.values))
    write_json(meta_path, {"format": FORMAT_VERSION, "kind": kind,
                           "grid": _grid_meta(rep.grid)})
    return bin_path, meta_path


def _read_plane(base, kind, cls):
    base = Path(base)
    meta = load_json(base.with_suffix(".json"))
    _check_sidecar(meta, kind, base)
    grid = _grid_from_meta(meta["grid"])
    flat = _complex_from_bytes(base.with_suffix(".bin").read_bytes(),
                               grid.nx * grid.nw)
    return cls(grid, flat.reshape(grid.nx, grid.nw))


def write_tfrepr(base, rep: TFRepr):
    return _write_plane(base, rep, "tfrepr")


def read_tfrepr(base) -> TFRepr:
    return _read_plane(base, "tfrepr", TFRepr)


def write_fock(base, rep: FockRepr):
    return _write_plane(base, rep, "fockrepr")


def read_fock(base) -> FockRepr:
    return _read_plane(base, "fockrepr", FockRepr)


def signal_payload(name: str, sig: Signal) -> dict:
    """Wire form of a signal: metadata plus base64 of the binary layout."""
    return {"name": name, "n": sig.n, "dt": sig.dt, "t0": sig.t0,
            "data": base64.b64encode(_complex_to_bytes(sig.samples)).decode()}


def payload_signal(payload) -> Signal:
    samples = _complex_from_bytes(base64.b64decode(payload["data"]),
                                  int(payload["n"]))
    return Signal(samples, float(payload["dt"]), float(payload["t0"]))


def write_mask(base, mask: Mask) -> tuple:
    """Write <base>.pbm (P1, width = frequency cells) and <base>.json."""
    base = Path(base)
    pbm_path = base.with_suffix(".pbm")
    meta_path = base.with_suffix(".json")
    lines = [f"P1", f"{mask.grid.nw} {mask.grid.nx}"]
    for row in mask.cells:
        bits = "".join("1" if v else "0" for v in row)
        lines.extend(bits[k:k + 64] for k in range(0, len(bits), 64))
    pbm_path.write_text("\n".join(lines) + "\n")
    write_json(meta_path, {"format": FORMAT_VERSION, "kind": "mask",
                           "grid": _grid_meta(mask.grid)})
    return pbm_path, meta_path


def read_mask(base) -> Mask:
    base = Path(base)
    meta = load_json(base.with_suffix(".json"))
    _check_sidecar(meta, "mask", base)
    grid = _grid_from_meta(meta["grid"])
    text = base.with_suffix(".pbm").read_text()
    tokens = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            tokens.extend(line.split())
    if not tokens or tokens[0] != "P1":
        raise FormatError(f"{base}: not an ASCII PBM (P1) file")
    dims = tokens[1:3]
    bits = "".join(tokens[3:])
    if len(dims) != 2:
        raise FormatError(f"{base}: missing PBM dimensions")
    width, height = int(dims[0]), int(dims[1])
    if (width, height) != (grid.nw, grid.nx):
        raise FormatError(
            f"{base}: PBM size {width}x{height} does not match sidecar grid")
    if len(bits) != width * height or set(bits) - {"0", "1"}:
        raise FormatError(f"{base}: PBM payload malformed")
    cells = np.array([c == "1" for c in bits], dtype=bool)
    return Mask(grid, cells.reshape(grid.nx, grid.nw))
