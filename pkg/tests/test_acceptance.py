"""Acceptance gate: one test per shipped guarantee.

Each test prints a single verdict line (run with ``pytest -v -s`` to see
them) and then asserts, so a red criterion is visible both ways.  Everything
here goes through public API only; expected values are frozen from
independent closed forms or brute-force oracles, not from the code under
test.
"""

import json
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from hyperpot import (
    DRIFT_THRESHOLD,
    SUITE_NAMES,
    GridFunction,
    KernelSpec,
    NFunction,
    PotentialConfig,
    build_nfunction,
    check_axioms,
    check_conditions,
    check_domination,
    drift_percent,
    hedberg_split,
    lp_norm,
    luxemburg_norm,
    make_bessel,
    make_chebyshev,
    make_cyclic,
    potential,
    run_experiment,
    solve_haar,
    verify_corollary,
    verify_hedberg_estimates,
    verify_strong_pp,
    verify_theorem,
    verify_weak_1_1,
)

POWER_QUARTER = KernelSpec(family="power", alpha=0.25)


def _verdict(num: int, desc: str, ok: bool) -> None:
    print(f"[criterion {num:2d}] {'PASS' if ok else 'FAIL'} {desc}")
    assert ok, desc


@pytest.fixture(scope="module")
def cheb128():
    return make_chebyshev(128)


@pytest.fixture(scope="module")
def bessel128():
    return make_bessel(0.5, 128, 0.25)


@pytest.fixture(scope="module")
def bessel256():
    return make_bessel(0.5, 256, 0.125)


# -- 1: structure identities --------------------------------------------------

def test_c01_axiom_suite(z6, z12, s3, q8, cheb64):
    t0 = time.perf_counter()
    worst = 0.0
    all_pass = True
    for _, table in (z6, z12, s3, q8, cheb64):
        rep = check_axioms(table)
        all_pass &= rep.passed and len(rep.as_dict()["per_axiom_pass"]) == 6
        worst = max(worst, rep.max_violation)
    elapsed = time.perf_counter() - t0
    _verdict(
        1,
        f"axiom residual {worst:.2e} <= 1e-12 on five instances in {elapsed:.2f}s < 5s",
        all_pass and worst <= 1e-12 and elapsed < 5.0,
    )


# -- 2: Haar solver vs brute invariance ---------------------------------------

def _invariance_residual(table, h, pairs):
    """max over (x,z) of |sum_y c(x,y,z) h(y) - h(z)| via stored atoms only."""
    n = table.space.n_points
    worst = 0.0
    for x, z in pairs:
        acc = 0.0
        for y in range(n):
            if not (np.isfinite(h[y]) and table.has(x, y)):
                continue
            acc += table.measure_vector(x, y)[z] * h[y]
        worst = max(worst, abs(acc - h[z]))
    return worst


def test_c02_haar_solver(z6, z12, s3, q8, cheb64):
    checks = []
    for (space, table), want in (
        (z6, np.ones(6)),
        (z12, np.ones(12)),
        (s3, np.array([1.0, 3.0, 2.0])),
        (q8, np.array([1.0, 2.0, 2.0, 2.0, 1.0])),
    ):
        h = solve_haar(table)
        n = space.n_points
        checks.append(h[space.identity] == 1.0)
        checks.append(np.max(np.abs(h - want)) <= 1e-12)
        pairs = [(x, z) for x in range(n) for z in range(n)]
        checks.append(_invariance_residual(table, h, pairs) <= 1e-12)

    space, table = cheb64
    h = solve_haar(table)
    interior = np.flatnonzero(np.isfinite(h))
    checks.append(h[0] == 1.0 and interior.size >= 33)
    checks.append(np.max(np.abs(h[interior[1:]] - 2.0)) <= 1e-10)
    half = int(interior.max())
    pairs = [(x, z) for x in range(half + 1) for z in range(half + 1 - x)]
    checks.append(_invariance_residual(table, h, pairs) <= 1e-10)

    _verdict(
        2,
        "solved Haar matches uniform / class-size / doubled-interior weights "
        "and the brute invariance oracle",
        all(checks),
    )


# -- 3: gauge closed form ------------------------------------------------------

def test_c03_gauge_closed_form():
    phi = build_nfunction(POWER_QUARTER, N=1.0, p=2.0)
    r = np.geomspace(1e-6, 1e6, 1201)
    inv = phi.inv(r)
    rel = np.max(np.abs(inv - 16.0 * r ** 0.25) / (16.0 * r ** 0.25))
    slopes = np.diff(np.log(inv)) / np.diff(np.log(r))
    slope_err = np.max(np.abs(slopes - 0.25))
    _verdict(
        3,
        f"inverse gauge is 16 r^(1/4) (rel err {rel:.2e} <= 1e-6, "
        f"log-log slope off by {slope_err:.2e} <= 1e-6)",
        rel <= 1e-6 and slope_err <= 1e-6,
    )


# -- 4: Luxemburg norm degenerates to L^p -------------------------------------

def test_c04_luxemburg_matches_lp():
    space, _ = make_cyclic(32)
    worst = 0.0
    for p in (1.5, 2.0, 3.0):
        phi = NFunction.power(p)
        for i in range(100):
            rng = np.random.default_rng(1000 + i)
            f = GridFunction(space, rng.uniform(-3.0, 5.0, 32) * rng.uniform(0.1, 10.0))
            a, b = luxemburg_norm(f, phi), lp_norm(f, p)
            worst = max(worst, abs(a - b) / b)
    _verdict(
        4,
        f"Luxemburg norm equals the L^p norm for power gauges "
        f"(rel err {worst:.2e} <= 1e-8, 300 cases)",
        worst <= 1e-8,
    )


# -- 5: maximal operator bounds ------------------------------------------------

def test_c05_maximal_bounds(z6, z12, s3, q8, cheb64, cheb128, bessel128, bessel256):
    roster = (z6, z12, s3, q8, cheb64, bessel128)
    finite = all(
        np.isfinite(verify_weak_1_1(t).sup_ratio)
        and np.isfinite(verify_strong_pp(t, p=2.0).sup_ratio)
        for _, t in roster
    )
    drifts = []
    for base, refined in ((cheb64, cheb128), (bessel128, bessel256)):
        for run in (verify_weak_1_1, lambda t: verify_strong_pp(t, p=2.0)):
            drifts.append(drift_percent(run(base[1]).sup_ratio, run(refined[1]).sup_ratio))
    dominated = all(
        (rep := check_domination(t)).passed and rep.sup_ratio <= 1.0 + 1e-9
        for _, t in roster
    )
    _verdict(
        5,
        f"weak/strong maximal constants finite, refinement drift "
        f"{max(drifts):.1f}% <= {DRIFT_THRESHOLD:.0f}%, domination holds pointwise",
        finite and max(drifts) <= DRIFT_THRESHOLD and dominated,
    )


# -- 6: condition constants -----------------------------------------------------

def test_c06_condition_constants(z6, z12, s3, q8, cheb64, bessel128):
    group_exact = all(
        (c := check_conditions(t)).passed and c.c1 == 1.0
        for _, t in (z6, z12, s3, q8)
    )
    window_ok = True
    for _, table in (cheb64, bessel128):
        cert = check_conditions(table)
        window_ok &= (
            cert.passed
            and len(cert.radii_tested) > 0
            and all(np.isfinite(v) for v in (cert.c1, cert.c2, cert.c3))
        )
    _verdict(
        6,
        "c1 = 1 exactly on groups; finite (c1,c2,c3) across canonical radii "
        "on the truncated and quadrature instances",
        group_exact and window_ok,
    )


# -- 7: near/far split diagnostics ----------------------------------------------

def test_c07_hedberg_diagnostics(z6, cheb16, cheb64, cheb128, bessel128):
    rng = np.random.default_rng(7)
    quarter = PotentialConfig(kernel=POWER_QUARTER, N=1.0)
    # exact partition: near + far recovers the potential bitwise
    exact = True
    for (space, table), cfg in ((z6, quarter), (cheb16, quarter)):
        for _ in range(4):
            v = np.zeros(space.n_points)
            v[table.window] = rng.uniform(0.0, 2.0, len(table.window))
            f = GridFunction(space, v)
            ia = potential(table, cfg, f).values
            for x in table.window[:: max(1, len(table.window) // 8)]:
                for r in (0.5, 1.5, 2.5, 4.5, 1e6):
                    a, b = hedberg_split(table, cfg, f, int(x), r)
                    exact &= a + b == ia[x]

    phi = build_nfunction(POWER_QUARTER, N=1.0, p=2.0)
    reps = {
        name: verify_hedberg_estimates(t, quarter, phi, 2.0)
        for name, (_, t) in (("base", cheb64), ("refined", cheb128))
    }
    keys = ("C_ar", "C_br", "C_hedberg", "C_step")
    finite = all(np.isfinite(rep.constants[k]) for rep in reps.values() for k in keys)
    drift = max(
        drift_percent(reps["base"].constants[k], reps["refined"].constants[k])
        for k in keys[:3]
    )

    _, bt = bessel128
    bcfg = PotentialConfig(kernel=POWER_QUARTER, N=bt.space.dim_exponent)
    bphi = build_nfunction(POWER_QUARTER, N=bt.space.dim_exponent, p=2.0)
    brep = verify_hedberg_estimates(bt, bcfg, bphi, 2.0)
    bessel_ok = brep.passed and all(np.isfinite(brep.constants[k]) for k in keys)

    _verdict(
        7,
        f"near/far partition exact; C_ar/C_br/C_hedberg drift "
        f"{drift:.1f}% <= {DRIFT_THRESHOLD:.0f}%; step check constant finite",
        exact and finite and drift <= DRIFT_THRESHOLD and bessel_ok,
    )


# -- 8: endpoint theorem and L^p -> L^q corollary --------------------------------

def test_c08_theorem_and_corollary(cheb64, cheb128, bessel128, bessel256):
    checks = []
    drifts = []

    cor64 = verify_corollary(cheb64[1], 0.25, 2.0)
    cor128 = verify_corollary(cheb128[1], 0.25, 2.0)
    checks.append(cor64.constants["q"] == 4.0 and np.isfinite(cor64.sup_ratio))
    drifts.append(drift_percent(cor64.sup_ratio, cor128.sup_ratio))

    bcor = verify_corollary(bessel128[1], 1.0, 2.0)
    bcor2 = verify_corollary(bessel256[1], 1.0, 2.0)
    checks.append(bcor.constants["q"] == pytest.approx(6.0, rel=1e-12))
    drifts.append(drift_percent(bcor.sup_ratio, bcor2.sup_ratio))
    spread = bcor.constants["dilation_spread"]
    checks.append(1.0 <= spread <= 3.0)

    for kern in (POWER_QUARTER, KernelSpec(family="power_log", alpha=0.25, beta=0.5)):
        cfg = PotentialConfig(kernel=kern, N=1.0)
        t64 = verify_theorem(cheb64[1], cfg, 2.0)
        t128 = verify_theorem(cheb128[1], cfg, 2.0)
        checks.append(np.isfinite(t64.sup_ratio))
        drifts.append(drift_percent(t64.sup_ratio, t128.sup_ratio))

    _verdict(
        8,
        f"corollary exponents q=4 and q=6 hit exactly, theorem ratios finite, "
        f"max drift {max(drifts):.1f}% <= {DRIFT_THRESHOLD:.0f}%, "
        f"dilation spread {spread:.2f} <= 3",
        all(checks) and max(drifts) <= DRIFT_THRESHOLD,
    )


# -- 9: reproducibility -----------------------------------------------------------

def test_c09_parallel_reproducibility(tmp_path):
    config = {
        "instance": {"kind": "cyclic", "n": 16},
        "kernel": {"family": "power", "alpha": 0.25},
        "p": 2.0,
        "suites": list(SUITE_NAMES),
        "resolutions": [],
        "seed": 0,
    }
    blobs = []
    for workers in (1, 4):
        out = tmp_path / f"w{workers}"
        run_experiment(config, out, max_workers=workers)
        blobs.append((out / "report.json").read_bytes())
    _verdict(9, "report.json byte-identical for 1 vs 4 workers", blobs[0] == blobs[1])


# -- 10: end-to-end budget ----------------------------------------------------------

def test_c10_default_pipeline_budget(tmp_path):
    script = Path(__file__).resolve().parents[1] / "scripts" / "run_default_pipeline.py"
    t0 = time.perf_counter()
    proc = subprocess.run(
        [sys.executable, str(script), "--out", str(tmp_path / "pipeline")],
        capture_output=True, text=True, timeout=400,
    )
    elapsed = time.perf_counter() - t0
    lines = proc.stdout.splitlines()
    _verdict(
        10,
        f"default pipeline (5 instances x all suites) rc={proc.returncode} "
        f"in {elapsed:.1f}s < 300s",
        proc.returncode == 0 and elapsed < 300.0 and sum("PASS" in l for l in lines) >= 39,
    )
