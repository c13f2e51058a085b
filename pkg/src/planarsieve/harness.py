"""Experiment drivers: corpus generation, verification sweeps, recovery runs.

Configs are pydantic models loaded from JSON; every random draw is keyed by
(seed, stream, index) through SeedSequence so reports are reproducible and
independent of execution order.  Parallel runs split by case and merge in
index order, so a parallel report is byte-identical to a sequential one.
"""

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from . import io as psio
from .density import (Mask, bound_curve, default_r_grid, nyquist_density,
                      optimize_R, uncertainty_check, verify_theorem1)
from .tfcore.types import GeometryError
from .oracle import dense_density_oracle
from .recover import SolverParams, denoise_l1, inpaint_l1, missing_data_bound
from .tfcore import (FORMAT_VERSION, Signal, SignalGeometry, TFGrid, TFRepr,
                     stft, tf_norm, window_values)

# Seed streams; fixed so adding a new consumer never reshuffles old draws.
_STREAM_CORPUS = 0
_STREAM_MASK = 1
_STREAM_DENOISE = 2
_STREAM_INPAINT = 3

_VERIFY_R_DEFAULT = (0.5, 1.0, 2.0)
_ORACLE_GRID_LIMIT = 128
_ORACLE_CASE_CAP = 10


class ConfigError(ValueError):
    """Invalid experiment configuration."""


class OracleMismatchError(AssertionError):
    """Fast path disagreed with the independent slow route."""


# Named geometries: (signal n/dt/t0, grid, strict window support).  The grid
# extent leaves >= 6 units of signal margin on each side except for "tiny",
# which exists only for cross-checks against the dense LP route.
_PRESETS = {
    "default": ((897, 1.0 / 32, -14.0),
                (257, 257, 1.0 / 16, 1.0 / 16, -8.0, -8.0), True),
    "small": ((321, 1.0 / 16, -10.0),
              (65, 65, 1.0 / 8, 1.0 / 8, -4.0, -4.0), True),
    "fock": ((769, 1.0 / 32, -12.0),
             (385, 385, 1.0 / 32, 1.0 / 32, -6.0, -6.0), True),
    "tiny": ((8, 0.5, -1.75),
             (12, 12, 0.5, 1.0 / 8, -2.75, -0.75), False),
}


def preset_geometry(name: str):
    """Return (SignalGeometry, TFGrid, strict_support) for a named preset."""
    try:
        (n, dt, t0), (nx, nw, dx, dw, x0, w0), strict = _PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown geometry preset {name!r}; "
                          f"choose from {sorted(_PRESETS)}") from None
    return SignalGeometry(n, dt, t0), TFGrid(nx, nw, dx, dw, x0, w0), strict


class SignalGeomModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    n: int
    dt: float
    t0: float


class GridModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    nx: int
    nw: int
    dx: float
    dw: float
    x0: float
    w0: float


class GeometryModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    preset: Optional[str] = "small"
    signal: Optional[SignalGeomModel] = None
    grid: Optional[GridModel] = None
    strict_support: Optional[bool] = None

    def resolve(self):
        if self.preset is not None:
            geom, grid, strict = preset_geometry(self.preset)
        elif self.signal is None or self.grid is None:
            raise ConfigError(
                "geometry needs either a preset or both signal and grid")
        else:
            geom = grid = None
            strict = True
        if self.signal is not None:
            geom = SignalGeometry(self.signal.n, self.signal.dt, self.signal.t0)
        if self.grid is not None:
            g = self.grid
            grid = TFGrid(g.nx, g.nw, g.dx, g.dw, g.x0, g.w0)
        if self.strict_support is not None:
            strict = self.strict_support
        return geom, grid, strict


class CorpusModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    count: int = 10
    max_atoms: int = 3
    coeff: Literal["normal", "unit"] = "normal"


class MaskModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    kind: Literal["random_cells", "disc_union", "file"] = "disc_union"
    count: int = 1
    p: float = 0.05
    num_discs: int = 2
    r_min: float = 0.2
    r_max: float = 0.5
    path: Optional[str] = None


class SolverModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    max_iters: int = 20000
    gap_tol: float = 1e-6
    step_ratio: float = 0.95
    op_norm_iters: int = 100


class NoiseModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    amplitude: float = 5.0      # masked-noise L1, relative to the clean plane L1
    epsilon_rel: float = 0.01   # observed-noise L1 budget, same normalization


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")
    format: str = FORMAT_VERSION
    seed: int = 0
    geometry: GeometryModel = Field(default_factory=GeometryModel)
    corpus: CorpusModel = Field(default_factory=CorpusModel)
    masks: MaskModel = Field(default_factory=MaskModel)
    r_grid: Optional[list[float]] = None
    slack: float = 0.05
    solver: SolverModel = Field(default_factory=SolverModel)
    noise: NoiseModel = Field(default_factory=NoiseModel)


def load_config(source) -> ExperimentConfig:
    """Build a config from a dict, JSON file path, or existing model."""
    if isinstance(source, ExperimentConfig):
        return source
    if isinstance(source, (str, Path)):
        try:
            source = psio.load_json(source)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {source}") from None
        except psio.FormatError as exc:
            raise ConfigError(str(exc)) from None
    try:
        cfg = ExperimentConfig.model_validate(source)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from None
    if cfg.format != FORMAT_VERSION:
        raise ConfigError(
            f"config format {cfg.format!r}, expected {FORMAT_VERSION!r}")
    return cfg


def _rng(seed: int, stream: int, index: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence([seed, stream, index])))


def _safe_box(grid: TFGrid, margin: float):
    bx = min(-grid.x0, grid.x_end) - margin
    bw = min(-grid.w0, grid.w_end) - margin
    return bx, bw


@dataclass(frozen=True)
class CorpusItem:
    index: int
    signal: Signal
    atoms: tuple        # of (coeff complex, time shift, frequency shift)


def _atom_samples(times, coeff, a, b):
    return coeff * window_values(times - a) * np.exp(2j * np.pi * b * times)


def generate_corpus(cfg: ExperimentConfig) -> list:
    """Deterministic random sums of time-frequency shifted window atoms.

    Atom centers stay 3 units inside the grid so the plane samples capture
    essentially all of each atom's mass.
    """
    geom, grid, _ = cfg.geometry.resolve()
    bx, bw = _safe_box(grid, 3.0)
    if bx <= 0 or bw <= 0:
        raise ConfigError(
            f"grid extent too small for corpus atoms (need > 3 units of "
            f"margin, have {min(bx, bw) + 3.0:.3g})")
    times = SignalGeometry.of(geom).times()
    items = []
    for k in range(cfg.corpus.count):
        rng = _rng(cfg.seed, _STREAM_CORPUS, k)
        n_atoms = int(rng.integers(1, cfg.corpus.max_atoms + 1))
        atoms = []
        samples = np.zeros(geom.n, dtype=complex)
        for _ in range(n_atoms):
            a = float(rng.uniform(-bx, bx))
            b = float(rng.uniform(-bw, bw))
            if cfg.corpus.coeff == "unit":
                c = complex(np.exp(2j * np.pi * rng.uniform()))
            else:
                c = complex(rng.standard_normal(), rng.standard_normal())
                c /= np.sqrt(2.0)
            atoms.append((c, a, b))
            samples += _atom_samples(times, c, a, b)
        items.append(CorpusItem(index=k, signal=Signal(samples, geom.dt, geom.t0),
                                atoms=tuple(atoms)))
    return items


def generate_masks(cfg: ExperimentConfig) -> list:
    _, grid, _ = cfg.geometry.resolve()
    spec = cfg.masks
    if spec.kind == "file":
        if spec.path is None:
            raise ConfigError("mask kind 'file' requires a path")
        mask = psio.read_mask(spec.path)
        if mask.grid.shape != grid.shape:
            raise ConfigError("mask file grid does not match config geometry")
        return [mask]
    masks = []
    for m in range(spec.count):
        rng = _rng(cfg.seed, _STREAM_MASK, m)
        if spec.kind == "random_cells":
            if not (0.0 <= spec.p <= 1.0):
                raise ConfigError("cell probability p must lie in [0, 1]")
            cells = rng.random(grid.shape) < spec.p
            masks.append(Mask(grid, cells))
        else:
            if not (0 < spec.r_min <= spec.r_max):
                raise ConfigError("need 0 < r_min <= r_max for disc masks")
            bx, bw = _safe_box(grid, 1.0)
            if min(bx, bw) <= spec.r_max:
                raise ConfigError(
                    "disc masks do not fit the grid interior; shrink r_max")
            discs = []
            for _ in range(spec.num_discs):
                r = float(rng.uniform(spec.r_min, spec.r_max))
                cx = float(rng.uniform(-(bx - r), bx - r))
                cw = float(rng.uniform(-(bw - r), bw - r))
                discs.append((cx, cw, r))
            masks.append(Mask.from_discs(grid, discs))
    return masks


def _config_echo(cfg: ExperimentConfig) -> dict:
    return cfg.model_dump(mode="json")


def _theorem_r_list(cfg: ExperimentConfig):
    return [float(r) for r in (cfg.r_grid or _VERIFY_R_DEFAULT)]


def _density_rows(masks, r_list, slack):
    rows = []
    for m, mask in enumerate(masks):
        for R in r_list:
            dens = nyquist_density(mask, R, mode="outer")
            rows.append({"mask": m, "R": R, "rho": dens.rho,
                         "count": dens.count, "bound": dens.bound})
    return rows


def _oracle_guard(masks, r_list):
    """Cross-check the scan against the dense per-center route on small grids.

    Returns the number of (mask, R) pairs checked; raises on any mismatch.
    """
    checked = 0
    for m, mask in enumerate(masks):
        if max(mask.grid.shape) > _ORACLE_GRID_LIMIT:
            continue
        for R in r_list:
            if checked >= _ORACLE_CASE_CAP:
                return checked
            for mode in ("center_in", "outer"):
                fast = nyquist_density(mask, R, mode=mode)
                count, rho, center = dense_density_oracle(mask, R, mode=mode)
                if (count != fast.count or rho != fast.rho
                        or center != fast.argmax_center):
                    raise OracleMismatchError(
                        f"density scan mismatch: mask {m}, R={R}, mode={mode}: "
                        f"scan ({fast.count}, {fast.rho}, {fast.argmax_center})"
                        f" vs dense ({count}, {rho}, {center})")
            checked += 1
    return checked


def _verify_rows_for_signal(cfg: ExperimentConfig, s: int):
    geom, grid, strict = cfg.geometry.resolve()
    item = generate_corpus(cfg)[s]
    masks = generate_masks(cfg)
    rep = stft(item.signal, grid, strict_support=strict)
    r_list = _theorem_r_list(cfg)
    theorem = []
    uncertainty = []
    for m, mask in enumerate(masks):
        for R in r_list:
            t = verify_theorem1(rep, mask, R, slack=cfg.slack)
            theorem.append({"signal": s, "mask": m, "R": R, "lhs": t.lhs,
                            "rhs": t.rhs, "ratio": t.ratio, "rho": t.rho,
                            "passed": t.passed})
        u = uncertainty_check(rep, mask, r_grid=cfg.r_grid, slack=cfg.slack)
        uncertainty.append({"signal": s, "mask": m, "epsilon": u.epsilon,
                            "inf_bound": u.inf_bound, "r_star": u.r_star,
                            "measure": u.measure, "passed": u.passed})
    return theorem, uncertainty


def _verify_worker(packed):
    cfg_dict, s = packed
    return _verify_rows_for_signal(load_config(cfg_dict), s)


def _map_cases(worker, packed_args, parallel: int):
    if parallel <= 1:
        return [worker(a) for a in packed_args]
    with ProcessPoolExecutor(max_workers=parallel) as pool:
        return list(pool.map(worker, packed_args, chunksize=1))


def run_verify(cfg: ExperimentConfig, parallel: int = 1) -> dict:
    """Theorem and uncertainty sweeps over corpus x masks x R."""
    masks = generate_masks(cfg)
    r_list = _theorem_r_list(cfg)
    checked = _oracle_guard(masks, r_list)
    density = _density_rows(masks, r_list, cfg.slack)
    packed = [(cfg.model_dump(mode="json"), s) for s in range(cfg.corpus.count)]
    results = _map_cases(_verify_worker, packed, parallel)
    theorem = [row for t, _ in results for row in t]
    uncertainty = [row for _, u in results for row in u]
    n_pass = sum(r["passed"] for r in theorem)
    u_pass = sum(r["passed"] for r in uncertainty)
    return {
        "format": FORMAT_VERSION,
        "kind": "verify",
        "config": _config_echo(cfg),
        "density": density,
        "theorem": theorem,
        "uncertainty": uncertainty,
        "aggregate": {
            "theorem_cases": len(theorem),
            "theorem_passed": n_pass,
            "uncertainty_cases": len(uncertainty),
            "uncertainty_passed": u_pass,
            "oracle_checked": checked,
            "all_passed": n_pass == len(theorem) and u_pass == len(uncertainty),
        },
    }


def _mask_guarantees(cfg: ExperimentConfig, masks):
    """Per-mask quantities shared by every recovery case.

    bound_factor is min over admissible R of 2c/(c - rho) with
    c = 1 - e^{-pi/R^2}; the absolute inpainting bound is eps * factor.
    """
    infos = []
    for mask in masks:
        r_star, bound_star = optimize_R(mask, r_grid=cfg.r_grid, mode="outer")
        rho_r1 = nyquist_density(mask, 1.0, mode="outer").rho
        factor = float("inf")
        for R, rho, _ in bound_curve(mask, r_grid=cfg.r_grid, mode="outer"):
            b = missing_data_bound(1.0, rho, R)
            if np.isfinite(b):
                factor = min(factor, b)
        infos.append({"r_star": r_star, "bound_star": bound_star,
                      "rho_r1": rho_r1, "bound_factor": factor})
    return infos


def _recover_case(cfg: ExperimentConfig, mode: str, infos, case: int):
    geom, grid, strict = cfg.geometry.resolve()
    masks = generate_masks(cfg)
    n_masks = len(masks)
    s, m = case // n_masks, case % n_masks
    item = generate_corpus(cfg)[s]
    mask = masks[m]
    info = infos[m]
    clean = stft(item.signal, grid, strict_support=strict)
    clean_l1 = tf_norm(clean, 1)
    params = SolverParams(max_iters=cfg.solver.max_iters,
                          gap_tol=cfg.solver.gap_tol,
                          step_ratio=cfg.solver.step_ratio,
                          op_norm_iters=cfg.solver.op_norm_iters,
                          seed=cfg.seed)

    if mode == "denoise":
        rng = _rng(cfg.seed, _STREAM_DENOISE, case)
        field = (rng.standard_normal(grid.shape)
                 + 1j * rng.standard_normal(grid.shape)) * mask.cells
        l1 = float(np.sum(np.abs(field)) * grid.dA)
        if l1 > 0:
            field *= cfg.noise.amplitude * clean_l1 / l1
        observed = TFRepr(grid, clean.values + field)
        res = denoise_l1(observed, geom, params, strict_support=strict)
        condition_ok = info["bound_star"] < 0.5
        eps = 0.0
        bound = 0.0
    elif mode == "inpaint":
        rng = _rng(cfg.seed, _STREAM_INPAINT, case)
        keep = ~mask.cells
        field = (rng.standard_normal(grid.shape)
                 + 1j * rng.standard_normal(grid.shape)) * keep
        l1 = float(np.sum(np.abs(field)) * grid.dA)
        eps = cfg.noise.epsilon_rel * clean_l1
        if l1 > 0:
            field *= eps / l1
        observed = TFRepr(grid, (clean.values + field) * keep)
        res = inpaint_l1(observed, mask, geom, params, strict_support=strict)
        condition_ok = np.isfinite(info["bound_factor"])
        bound = eps * info["bound_factor"] if condition_ok else float("inf")
    else:
        raise ConfigError(f"unknown recovery mode {mode!r}")

    rec_plane = stft(res.recovered, grid, strict_support=strict)
    plane_err = tf_norm(TFRepr(grid, rec_plane.values - clean.values), 1)
    sig_err = item.signal.norm(2)
    if sig_err > 0:
        diff = res.recovered.samples - item.signal.samples
        sig_rel = float(np.sqrt(np.sum(np.abs(diff) ** 2) * geom.dt)) / sig_err
    else:
        sig_rel = float("inf")
    plane_rel = plane_err / clean_l1 if clean_l1 > 0 else float("inf")
    if mode == "denoise":
        guarantee_ok = (not condition_ok) or plane_rel <= 1e-2
    else:
        guarantee_ok = (not condition_ok) or \
            plane_err <= bound * (1.0 + cfg.slack)
    row = {
        "case": case, "signal": s, "mask": m, "mode": mode,
        "rho_r1": info["rho_r1"], "r_star": info["r_star"],
        "bound_star": info["bound_star"], "condition_ok": condition_ok,
        "noise_l1": float(np.sum(np.abs(field)) * grid.dA), "eps": eps,
        "bound": bound, "plane_err_l1": plane_err, "plane_rel_err": plane_rel,
        "signal_rel_err": sig_rel, "guarantee_ok": guarantee_ok,
        "objective": res.residual_l1, "iterations": res.iterations,
        "status": res.status,
        "gap": float(res.gap_trace[-1]) if res.iterations else 0.0,
    }
    return row, res.recovered


def _recover_worker(packed):
    cfg_dict, mode, infos, case = packed
    return _recover_case(load_config(cfg_dict), mode, infos, case)


def run_recover(cfg: ExperimentConfig, mode: str = "denoise",
                parallel: int = 1):
    """L1 recovery over corpus x masks; returns (report, artifacts).

    Artifacts are (name, Signal) pairs for the recovered signals, in case
    order; the report alone is canonical and deterministic.
    """
    if mode not in ("denoise", "inpaint"):
        raise ConfigError(f"unknown recovery mode {mode!r}")
    masks = generate_masks(cfg)
    infos = _mask_guarantees(cfg, masks)
    n_cases = cfg.corpus.count * len(masks)
    packed = [(cfg.model_dump(mode="json"), mode, infos, c)
              for c in range(n_cases)]
    results = _map_cases(_recover_worker, packed, parallel)
    rows = [r for r, _ in results]
    artifacts = [(f"case{r['case']:03d}_recovered", sig)
                 for r, sig in results]
    evaluated = [r for r in rows if r["condition_ok"]]
    held = sum(r["guarantee_ok"] for r in evaluated)
    return {
        "format": FORMAT_VERSION,
        "kind": "recover",
        "mode": mode,
        "config": _config_echo(cfg),
        "cases": rows,
        "aggregate": {
            "cases": len(rows),
            "condition_ok": len(evaluated),
            "guarantees_held": held,
            "all_guarantees_hold": held == len(evaluated),
            "converged": sum(r["status"] == "converged" for r in rows),
        },
    }, artifacts


def run_density(cfg: ExperimentConfig) -> dict:
    """Density and bound sweep over R for each configured mask."""
    masks = generate_masks(cfg)
    r_list = [float(r) for r in cfg.r_grid] if cfg.r_grid is not None \
        else [float(r) for r in default_r_grid()]
    rows = []
    optima = []
    summaries = []
    for m, mask in enumerate(masks):
        summaries.append({"mask": m, "count": mask.count,
                          "measure": mask.measure})
        for R in r_list:
            try:
                inner = nyquist_density(mask, R, mode="center_in")
                outer = nyquist_density(mask, R, mode="outer")
            except GeometryError:
                continue
            rows.append({"mask": m, "R": R, "rho_center": inner.rho,
                         "rho_outer": outer.rho, "count_outer": outer.count,
                         "bound_outer": outer.bound})
        r_star, bound_star = optimize_R(mask, r_grid=cfg.r_grid, mode="outer")
        optima.append({"mask": m, "r_star": r_star, "bound_star": bound_star})
    return {
        "format": FORMAT_VERSION,
        "kind": "density",
        "config": _config_echo(cfg),
        "masks": summaries,
        "rows": rows,
        "optima": optima,
    }


def run_corpus(cfg: ExperimentConfig):
    """Generate the signal corpus; returns (manifest report, artifacts)."""
    items = generate_corpus(cfg)
    rows = []
    artifacts = []
    for item in items:
        rows.append({
            "index": item.index,
            "n": item.signal.n,
            "norm_l2": item.signal.norm(2),
            "atoms": [[c.real, c.imag, a, b] for (c, a, b) in item.atoms],
            "file": f"signal{item.index:03d}",
        })
        artifacts.append((f"signal{item.index:03d}", item.signal))
    return {
        "format": FORMAT_VERSION,
        "kind": "corpus",
        "config": _config_echo(cfg),
        "signals": rows,
        "aggregate": {"count": len(rows)},
    }, artifacts


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path


def emit_plotdata(report: dict, out_dir) -> list:
    """Flatten a report into CSV files for plotting; returns written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    kind = report.get("kind")
    written = []
    if kind == "verify":
        written.append(_write_csv(
            out_dir / "theorem_cases.csv",
            ["signal", "mask", "R", "rho", "lhs", "rhs", "ratio", "passed"],
            [[r["signal"], r["mask"], r["R"], r["rho"], r["lhs"], r["rhs"],
              r["ratio"], r["passed"]] for r in report["theorem"]]))
        written.append(_write_csv(
            out_dir / "uncertainty_cases.csv",
            ["signal", "mask", "epsilon", "inf_bound", "r_star", "measure",
             "passed"],
            [[r["signal"], r["mask"], r["epsilon"], r["inf_bound"],
              r["r_star"], r["measure"], r["passed"]]
             for r in report["uncertainty"]]))
        written.append(_write_csv(
            out_dir / "density_vs_bound.csv",
            ["mask", "R", "rho", "bound"],
            [[r["mask"], r["R"], r["rho"], r["bound"]]
             for r in report["density"]]))
    elif kind == "recover":
        cols = ["case", "signal", "mask", "mode", "rho_r1", "r_star",
                "bound_star", "condition_ok", "noise_l1", "eps", "bound",
                "plane_err_l1", "plane_rel_err", "signal_rel_err",
                "guarantee_ok", "objective", "iterations", "status", "gap"]
        written.append(_write_csv(
            out_dir / "recover_cases.csv", cols,
            [[r[c] for c in cols] for r in report["cases"]]))
        written.append(_write_csv(
            out_dir / "error_vs_density.csv",
            ["case", "rho_r1", "plane_err_l1", "bound"],
            [[r["case"], r["rho_r1"], r["plane_err_l1"], r["bound"]]
             for r in report["cases"]]))
    elif kind == "density":
        written.append(_write_csv(
            out_dir / "density_curve.csv",
            ["mask", "R", "rho_center", "rho_outer", "bound_outer"],
            [[r["mask"], r["R"], r["rho_center"], r["rho_outer"],
              r["bound_outer"]] for r in report["rows"]]))
        written.append(_write_csv(
            out_dir / "density_optima.csv",
            ["mask", "r_star", "bound_star"],
            [[r["mask"], r["r_star"], r["bound_star"]]
             for r in report["optima"]]))
    else:
        raise ConfigError(f"no plot data emitter for report kind {kind!r}")
    return written


def write_artifacts(artifacts, out_dir) -> list:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, sig in artifacts:
        paths.extend(psio.write_signal(out_dir / name, sig))
    return paths
