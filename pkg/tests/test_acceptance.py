"""Acceptance gate: end-to-end checks at their stated tolerances.

Each test covers one acceptance criterion and prints a single verdict line
(visible with `pytest -s` or in the failure message).  Criteria:

 1. concentration bound holds on the full-size grid, 100 cases, under 5 min
 2. density scan bit-exact against the dense per-center route, 30 masks
 3. local reproducing identity on the fine grid, residual <= 1e-3
 4. disc-convolution mass ratio within 2e-3 of the closed form at R = 1
 5. plane/signal energy identity within 1e-4
 6. zero-noise L1 fit recovers to 1e-4, 10 signals
 7. masked adversarial noise removed to 1e-2 when the bound is below 1/2
 8. missing-data recovery error within 1.05x of its bound, 20 noisy cases
 9. primal-dual optimum brackets the LP oracle within the facet band
10. repeated CLI runs produce byte-identical reports
"""

import json
import math
import time

import numpy as np
import pytest

import planarsieve as ps
from planarsieve import oracle
from planarsieve import io as psio
from planarsieve.cli import main as cli_main
from planarsieve.harness import generate_corpus, load_config, run_verify

from conftest import atoms_signal


def _verdict(name, ok, detail):
    line = f"[{name}] {'PASS' if ok else 'FAIL'} - {detail}"
    print(line)
    assert ok, line


def test_criterion_01_concentration_bound_full_grid():
    cfg = load_config({
        "seed": 7,
        "geometry": {"preset": "default"},
        "corpus": {"count": 10, "max_atoms": 3},
        "masks": {"kind": "random_cells", "count": 5, "p": 0.05},
        "r_grid": [0.8, 1.25],
    })
    t0 = time.time()
    report = run_verify(cfg)
    elapsed = time.time() - t0
    rows = report["theorem"]
    n_pass = sum(r["passed"] for r in rows)
    worst = max(r["ratio"] for r in rows)
    ok = len(rows) == 100 and n_pass == 100 and elapsed < 300.0
    _verdict("criterion-01", ok,
             f"{n_pass}/{len(rows)} cases, worst lhs/rhs {worst:.3f}, "
             f"{elapsed:.1f}s (budget 300s)")


def test_criterion_02_density_scan_bit_exact():
    grids = [
        ps.TFGrid(8, 8, 0.5, 0.5, -2.0, -2.0),
        ps.TFGrid(16, 12, 0.25, 0.25, -2.0, -1.5),
        ps.TFGrid(32, 32, 1.0 / 8, 1.0 / 8, -2.0, -2.0),
        ps.TFGrid(64, 48, 1.0 / 8, 1.0 / 8, -4.0, -3.0),
        ps.TFGrid(96, 64, 1.0 / 16, 1.0 / 16, -3.0, -2.0),
        ps.TFGrid(128, 128, 1.0 / 16, 1.0 / 16, -4.0, -4.0),
    ]
    r_by_grid = [(1.0, 0.5), (1.0, 0.6), (1.0, 1.6), (0.8,), (1.0,), (1.3,)]
    t0 = time.time()
    checked = 0
    mismatches = 0
    for i in range(30):
        grid = grids[i % len(grids)]
        rng = np.random.default_rng(1000 + i)
        if i % 5 == 4:
            span = min(grid.span_x(), grid.span_w())
            r = rng.uniform(0.1, 0.2) * span
            cx = rng.uniform(grid.x0 + r, grid.x_end - r)
            cw = rng.uniform(grid.w0 + r, grid.w_end - r)
            mask = ps.Mask.from_discs(grid, [(cx, cw, r)])
        else:
            mask = ps.Mask(grid, rng.random(grid.shape)
                           < rng.uniform(0.05, 0.35))
        for R in r_by_grid[i % len(grids)]:
            for mode in ("center_in", "outer"):
                fast = ps.nyquist_density(mask, R, mode=mode)
                slow = oracle.dense_density_oracle(mask, R, mode=mode)
                checked += 1
                if slow != (fast.count, fast.rho, fast.argmax_center):
                    mismatches += 1
    elapsed = time.time() - t0
    ok = mismatches == 0 and elapsed < 120.0
    _verdict("criterion-02", ok,
             f"30 masks, {checked} scan/oracle comparisons, "
             f"{mismatches} mismatches, {elapsed:.1f}s (budget 120s)")


def test_criterion_03_local_reproducing_fine_grid():
    geom = ps.SignalGeometry(769, 1.0 / 32, -12.0)
    grid = ps.TFGrid(385, 385, 1.0 / 32, 1.0 / 32, -6.0, -6.0)
    states = [
        atoms_signal(geom, [(1.0, 0.0, 0.0)]),
        atoms_signal(geom, [(0.8, 0.5, -0.75), (-0.6j, -1.25, 1.0)]),
    ]
    probes = [(0.0, 0.0), (2.0, 0.0), (0.0, 2.0), (-2.0, 0.0), (0.0, -2.0),
              (1.0, 1.0), (-1.0, 1.5), (0.5, -1.25), (1.40625, 0.71875),
              (-0.96875, -1.0625), (1.75, -0.5), (-1.5, -1.5)]
    worst = 0.0
    for sig in states:
        fock = ps.bargmann_from_stft(ps.stft(sig, grid))
        for R in (0.5, 1.0, 2.0):
            rpt = ps.local_reproducing_check(fock, R, probes)
            worst = max(worst, rpt.max_residual)
    ok = worst <= 1e-3
    _verdict("criterion-03", ok,
             f"max residual {worst:.2e} over 2 states x 3 radii x "
             f"{len(probes)} probes (tol 1e-3)")


def test_criterion_04_disc_mass_ratio():
    geom = ps.SignalGeometry(769, 1.0 / 32, -12.0)
    grid = ps.TFGrid(385, 385, 1.0 / 32, 1.0 / 32, -6.0, -6.0)
    focks = [
        ps.bargmann_from_stft(ps.stft(atoms_signal(geom, [(1.0, 0.0, 0.0)]),
                                      grid)),
        ps.bargmann_from_stft(ps.stft(
            atoms_signal(geom, [(0.7, -0.5, 0.5), (0.4j, 1.0, -0.25)]), grid)),
    ]
    ratios, expected, dev = oracle.nu_check(1.0, focks)
    ok = dev <= 2e-3 and abs(expected - 0.9567860817362277) < 1e-12
    _verdict("criterion-04", ok,
             f"ratios {[f'{r:.6f}' for r in ratios]} vs {expected:.6f}, "
             f"max dev {dev:.2e} (tol 2e-3)")


def test_criterion_05_energy_identity():
    worst = 0.0
    for preset, atoms in (("small", [(0.8, 0.0, 0.0), (-0.5j, 0.6, 0.5)]),
                          ("default", [(1.0, -2.0, 1.5), (0.3, 3.0, -2.5)])):
        from planarsieve.harness import preset_geometry
        geom, grid, strict = preset_geometry(preset)
        sig = atoms_signal(geom, atoms)
        rep = ps.stft(sig, grid, strict_support=strict)
        ratio = ps.tf_norm(rep, 2) ** 2 / sig.norm(2) ** 2
        worst = max(worst, abs(ratio - 1.0))
    ok = worst <= 1e-4
    _verdict("criterion-05", ok,
             f"max |energy ratio - 1| = {worst:.2e} (tol 1e-4)")


def test_criterion_06_zero_noise_denoise():
    cfg = load_config({"seed": 1001, "geometry": {"preset": "small"},
                       "corpus": {"count": 10, "max_atoms": 3}})
    geom, grid, strict = cfg.geometry.resolve()
    worst = 0.0
    iters = 0
    for item in generate_corpus(cfg):
        clean = ps.stft(item.signal, grid, strict_support=strict)
        res = ps.denoise_l1(clean, geom)
        rec = ps.stft(res.recovered, grid)
        rel = ps.tf_norm(ps.TFRepr(grid, rec.values - clean.values), 1) \
            / ps.tf_norm(clean, 1)
        worst = max(worst, rel)
        iters = max(iters, res.iterations)
    ok = worst <= 1e-4 and iters <= 20000
    _verdict("criterion-06", ok,
             f"10 signals, worst rel err {worst:.2e} (tol 1e-4), "
             f"max iterations {iters}")


def _mask_with_density_cap(specs, grid, cap):
    masks = []
    for discs in specs:
        mask = ps.Mask.from_discs(grid, discs)
        rho = ps.nyquist_density(mask, 1.0, mode="outer").rho
        assert rho <= cap, f"mask spec {discs} has rho {rho} > {cap}"
        masks.append((mask, rho))
    return masks


def test_criterion_07_adversarial_masked_noise():
    cfg = load_config({"seed": 2002, "geometry": {"preset": "small"},
                       "corpus": {"count": 10, "max_atoms": 3}})
    geom, grid, strict = cfg.geometry.resolve()
    masks = _mask_with_density_cap(
        [[(1.0, 1.0, 0.35), (-1.5, -0.5, 0.3)],
         [(-1.2, 0.8, 0.32), (1.4, -1.1, 0.28)]], grid, cap=0.4)
    corpus = generate_corpus(cfg)
    succeeded = 0
    worst = 0.0
    for k, item in enumerate(corpus):
        clean = ps.stft(item.signal, grid)
        for m, (mask, rho) in enumerate(masks):
            rng = np.random.default_rng(5000 + 10 * k + m)
            noise = (rng.standard_normal(grid.shape)
                     + 1j * rng.standard_normal(grid.shape)) * mask.cells
            noise *= 5.0 * ps.tf_norm(clean, 1) \
                / (np.sum(np.abs(noise)) * grid.dA)
            obs = ps.TFRepr(grid, clean.values + noise)
            res = ps.denoise_l1(obs, geom)
            rec = ps.stft(res.recovered, grid)
            rel = ps.tf_norm(ps.TFRepr(grid, rec.values - clean.values), 1) \
                / ps.tf_norm(clean, 1)
            worst = max(worst, rel)
            succeeded += rel <= 1e-2
    ok = succeeded == 20
    _verdict("criterion-07", ok,
             f"{succeeded}/20 cases recovered (tol 1e-2), "
             f"worst rel err {worst:.2e}, masks rho(., 1) <= 0.4")


def test_criterion_08_missing_data_bound():
    cfg = load_config({"seed": 3003, "geometry": {"preset": "small"},
                       "corpus": {"count": 10, "max_atoms": 3}})
    geom, grid, strict = cfg.geometry.resolve()
    masks = _mask_with_density_cap(
        [[(0.6, -0.4, 0.42)], [(-0.8, 0.9, 0.40)]], grid, cap=0.7)
    r_sweep = [R for R in ps.default_r_grid()
               if 1.0 / R >= 1.0 / 8 and 2.0 / R <= 8.0]
    params = ps.SolverParams(max_iters=4000)
    corpus = generate_corpus(cfg)
    held = 0
    worst_margin = 0.0
    for k, item in enumerate(corpus):
        clean = ps.stft(item.signal, grid)
        for m, (mask, rho) in enumerate(masks):
            keep = ~mask.cells
            eps = 0.01 * ps.tf_norm(clean, 1)
            rng = np.random.default_rng(6000 + 10 * k + m)
            nf = (rng.standard_normal(grid.shape)
                  + 1j * rng.standard_normal(grid.shape)) * keep
            nf *= eps / (np.sum(np.abs(nf)) * grid.dA)
            obs = ps.TFRepr(grid, (clean.values + nf) * keep)
            res = ps.inpaint_l1(obs, mask, geom, params)
            rec = ps.stft(res.recovered, grid)
            err = ps.tf_norm(ps.TFRepr(grid, rec.values - clean.values), 1)
            bound = min(ps.missing_data_bound(
                eps, ps.nyquist_density(mask, R, mode="outer").rho, R)
                for R in r_sweep)
            assert eps > 0 and math.isfinite(bound)
            held += err <= bound * 1.05
            worst_margin = max(worst_margin, err / bound)
    ok = held == 20
    _verdict("criterion-08", ok,
             f"{held}/20 noisy cases within 1.05x bound, "
             f"worst err/bound {worst_margin:.3f}")


def test_criterion_09_solver_brackets_lp():
    geom = ps.SignalGeometry(8, 0.5, -1.75)
    grid = ps.TFGrid(12, 12, 0.5, 1.0 / 8, -2.75, -0.75)
    band = oracle.lp_facet_slack()
    params = ps.SolverParams(max_iters=50000, gap_tol=1e-9)
    inside = 0
    worst = 0.0
    for k in range(10):
        rng = np.random.default_rng(np.random.SeedSequence([123, k]))
        data = rng.standard_normal(grid.shape) \
            + 1j * rng.standard_normal(grid.shape)
        lp_opt, _ = oracle.lp_l1_oracle(geom, grid, data)
        res = ps.denoise_l1(ps.TFRepr(grid, data), geom, params,
                            strict_support=False)
        cp = res.residual_l1
        inside += (lp_opt - 1e-6 <= cp <= lp_opt * (1.0 + band) + 1e-6)
        worst = max(worst, abs(cp - lp_opt) / lp_opt)
    ok = inside == 10
    _verdict("criterion-09", ok,
             f"{inside}/10 instances inside [lp - 1e-6, lp*(1 + {band:.2e}) "
             f"+ 1e-6], worst |cp-lp|/lp {worst:.2e}")


def test_criterion_10_byte_identical_reports(tmp_path):
    cfg = {
        "seed": 5,
        "geometry": {"preset": "small"},
        "corpus": {"count": 2, "max_atoms": 2},
        "masks": {"kind": "disc_union", "count": 1, "num_discs": 1,
                  "r_min": 0.25, "r_max": 0.35},
        "solver": {"max_iters": 800},
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    for out, extra in (("v1", []), ("v2", []), ("v3", ["--parallel", "2"])):
        rc = cli_main(["verify", "--config", str(cfg_path),
                       "--out", str(tmp_path / out)] + extra)
        assert rc == 0
    for out in ("r1", "r2"):
        rc = cli_main(["recover", "--config", str(cfg_path),
                       "--out", str(tmp_path / out)])
        assert rc == 0
    v = [(tmp_path / n / "report.json").read_bytes()
         for n in ("v1", "v2", "v3")]
    r = [(tmp_path / n / "report.json").read_bytes() for n in ("r1", "r2")]
    sig = [(tmp_path / n / "case000_recovered.bin").read_bytes()
           for n in ("r1", "r2")]
    ok = v[0] == v[1] == v[2] and r[0] == r[1] and sig[0] == sig[1]
    _verdict("criterion-10", ok,
             f"verify x3 (incl. parallel) and recover x2 reports plus "
             f"artifacts byte-identical: {ok}")
