import json
import math

import numpy as np
import pytest

import planarsieve as ps
from planarsieve import io as psio


def test_signal_roundtrip(tmp_path, small_geom):
    rng = np.random.default_rng(0)
    sig = ps.Signal(rng.standard_normal(small_geom.n)
                    + 1j * rng.standard_normal(small_geom.n),
                    small_geom.dt, small_geom.t0)
    psio.write_signal(tmp_path / "sig", sig)
    back = psio.read_signal(tmp_path / "sig")
    assert np.array_equal(back.samples, sig.samples)
    assert back.dt == sig.dt and back.t0 == sig.t0


def test_binary_layout_is_little_endian_interleaved(tmp_path):
    sig = ps.Signal(np.array([1.0 + 2.0j, -3.5 + 0.25j]), 0.5, 0.0)
    bin_path, _ = psio.write_signal(tmp_path / "s", sig)
    raw = np.frombuffer(bin_path.read_bytes(), dtype="<f8")
    assert raw.tolist() == [1.0, 2.0, -3.5, 0.25]


def test_tfrepr_roundtrip(tmp_path, small_grid):
    rng = np.random.default_rng(1)
    rep = ps.TFRepr(small_grid, rng.standard_normal(small_grid.shape)
                    + 1j * rng.standard_normal(small_grid.shape))
    psio.write_tfrepr(tmp_path / "rep", rep)
    back = psio.read_tfrepr(tmp_path / "rep")
    assert np.array_equal(back.values, rep.values)
    assert back.grid == rep.grid


def test_fock_roundtrip(tmp_path, small_grid):
    rng = np.random.default_rng(2)
    rep = ps.FockRepr(small_grid, rng.standard_normal(small_grid.shape) + 0j)
    psio.write_fock(tmp_path / "f", rep)
    back = psio.read_fock(tmp_path / "f")
    assert np.array_equal(back.values, rep.values)


def test_kind_mismatch_rejected(tmp_path, small_grid):
    rep = ps.TFRepr(small_grid, np.zeros(small_grid.shape, complex))
    psio.write_tfrepr(tmp_path / "rep", rep)
    with pytest.raises(psio.FormatError):
        psio.read_fock(tmp_path / "rep")


def test_version_mismatch_rejected(tmp_path, small_geom):
    sig = ps.Signal(np.zeros(4, complex), 0.5, 0.0)
    psio.write_signal(tmp_path / "s", sig)
    meta = json.loads((tmp_path / "s.json").read_text())
    meta["format"] = "planar-sieve/999"
    (tmp_path / "s.json").write_text(json.dumps(meta))
    with pytest.raises(psio.FormatError):
        psio.read_signal(tmp_path / "s")


def test_truncated_binary_rejected(tmp_path):
    sig = ps.Signal(np.zeros(8, complex), 0.5, 0.0)
    bin_path, _ = psio.write_signal(tmp_path / "s", sig)
    bin_path.write_bytes(bin_path.read_bytes()[:-8])
    with pytest.raises(psio.FormatError):
        psio.read_signal(tmp_path / "s")


def test_mask_roundtrip(tmp_path, small_grid):
    rng = np.random.default_rng(3)
    mask = ps.Mask(small_grid, rng.random(small_grid.shape) < 0.2)
    pbm, _ = psio.write_mask(tmp_path / "m", mask)
    back = psio.read_mask(tmp_path / "m")
    assert np.array_equal(back.cells, mask.cells)
    assert back.grid == mask.grid
    first = pbm.read_text().splitlines()
    assert first[0] == "P1"
    assert first[1] == f"{small_grid.nw} {small_grid.nx}"
    assert all(len(line) <= 64 for line in first[2:])


def test_mask_pbm_with_comments_and_spacing(tmp_path, small_grid):
    mask = ps.Mask.from_discs(small_grid, [(0.0, 0.0, 0.5)])
    pbm, _ = psio.write_mask(tmp_path / "m", mask)
    text = pbm.read_text().splitlines()
    text.insert(1, "# a comment")
    pbm.write_text("\n".join(text) + "\n")
    back = psio.read_mask(tmp_path / "m")
    assert np.array_equal(back.cells, mask.cells)


def test_mask_size_mismatch_rejected(tmp_path, small_grid):
    mask = ps.Mask.empty(small_grid)
    pbm, _ = psio.write_mask(tmp_path / "m", mask)
    lines = pbm.read_text().splitlines()
    lines[1] = "3 3"
    pbm.write_text("\n".join(lines) + "\n")
    with pytest.raises(psio.FormatError):
        psio.read_mask(tmp_path / "m")


def test_canonical_json_deterministic():
    a = psio.canonical_json({"b": 1, "a": [1.5, 2], "c": {"y": True, "x": None}})
    b = psio.canonical_json({"c": {"x": None, "y": True}, "a": [1.5, 2], "b": 1})
    assert a == b
    assert a.endswith("\n")
    assert ": " not in a and ", " not in a      # tight separators
    assert json.loads(a) == {"a": [1.5, 2], "b": 1, "c": {"x": None, "y": True}}


def test_canonical_json_infinity_marker():
    s = psio.canonical_json({"bound": math.inf, "arr": [1.0, math.inf]})
    obj = json.loads(s)
    assert obj["bound"] == psio.INFEASIBLE
    assert obj["arr"][1] == psio.INFEASIBLE
    with pytest.raises(ValueError):
        psio.canonical_json({"x": math.nan})


def test_json_safe_numpy_scalars():
    out = psio.json_safe({"i": np.int64(3), "f": np.float64(1.5),
                          "b": np.bool_(True), "a": np.array([1.0, 2.0])})
    assert out == {"i": 3, "f": 1.5, "b": True, "a": [1.0, 2.0]}
    assert isinstance(out["i"], int) and isinstance(out["f"], float)


def test_signal_payload_roundtrip(small_geom):
    rng = np.random.default_rng(4)
    sig = ps.Signal(rng.standard_normal(small_geom.n)
                    + 1j * rng.standard_normal(small_geom.n),
                    small_geom.dt, small_geom.t0)
    payload = psio.signal_payload("x", sig)
    back = psio.payload_signal(payload)
    assert np.array_equal(back.samples, sig.samples)
    assert payload["name"] == "x"
