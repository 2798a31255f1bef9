"""Acceptance criteria, each at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -v``; the terminal summary lists
one PASS/FAIL line per criterion.
"""

import csv
import io
import math
import time

import numpy as np
import pytest

from cbi.cli import main
from cbi.hfix import HContext, h_eval
from cbi.model import refine_partition, uniform_consistent_partition, validate_partition
from cbi.oracle import STANDARD, beta_predictive, grid_minimize
from cbi.planner import asymptotic_limits, plan_demands_beta, plan_demands_cbi
from cbi.solver import Branch, build_conservative_prior, solve, solve_fault_free, solve_no_failure

from helpers import random_partition

PAIRS = {46: 0.009895, 500: 0.097982, 1000: 0.178476}
# rows r = 0..9: beta total, then CBI totals for y2 = 1e-4, 2e-5, 1e-5
TABLE = {
    46: [
        (4602, 46861, 39294, 40440), (9229, 52320, 59357, 62567), (13855, 75760, 82957, 86230),
        (18481, 99569, 106864, 110175), (23107, 123607, 130966, 134304), (27734, 147800, 155205, 158562),
        (32360, 172105, 179545, 182916), (36986, 196495, 203961, 207343), (41612, 220951, 228438, 231829),
        (46239, 245460, 252964, 256362),
    ],
    500: [
        (4602, 49322, 41140, 42247), (9450, 54417, 61792, 65156), (14298, 78771, 86315, 89744),
        (19147, 103509, 111155, 114625), (23996, 128486, 136199, 139697), (28845, 153623, 161385, 164903),
        (33694, 178878, 186676, 190209), (38543, 204221, 212046, 215592), (43392, 229633, 237480, 241035),
        (48241, 255100, 262966, 266528),
    ],
    1000: [
        (4602, 51882, 43119, 44174), (9681, 56634, 64371, 67900), (14766, 81955, 89868, 93466),
        (19852, 107674, 115694, 119334), (24938, 133641, 141732, 145402), (30024, 159777, 167919, 171609),
        (35111, 186034, 194214, 197921), (40198, 212383, 220593, 224312), (45285, 238804, 247037, 250767),
        (50372, 265283, 273536, 277273),
    ],
}
Y2 = (1e-4, 2e-5, 1e-5)


def report(label, lines):
    print(f"\n[{label}]")
    for line in lines:
        print(f"  {line}")


@pytest.mark.criterion("C1", "Beta column of the demand table, exact, < 5 s")
def test_c01_beta_column():
    start = time.perf_counter()
    misses = []
    for m, rows in TABLE.items():
        for r, row in enumerate(rows):
            got = plan_demands_beta(m, PAIRS[m], r).total_demands
            if got != row[0]:
                misses.append(f"m={m} r={r}: {got} vs {row[0]}")
    elapsed = time.perf_counter() - start
    report("C1", [f"30 cells, {len(misses)} off, {elapsed:.2f} s", *misses])
    assert not misses
    assert elapsed < 5


@pytest.mark.criterion("C2", "CBI columns of the demand table within +-2, < 120 s")
def test_c02_cbi_columns(capsys):
    start = time.perf_counter()
    code = main(["table"])
    elapsed = time.perf_counter() - start
    out = capsys.readouterr().out
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 90
    misses, beta_misses = [], []
    for row in rows:
        m, r, y2 = int(row["m"]), int(row["r"]), float(row["y2"])
        want = TABLE[m][r]
        if int(row["beta_total"]) != want[0]:
            beta_misses.append(row)
        expected = want[1 + Y2.index(y2)]
        got = int(row["cbi_total"])
        assert int(row["beta_total"]) <= got
        if abs(got - expected) > 2:
            misses.append(f"m={m} y2={y2:g} r={r}: {got} vs {expected} ({got - expected:+d})")
    with capsys.disabled():
        report("C2", [f"90 cells, {len(misses)} outside +-2, {elapsed:.1f} s", *misses])
    assert not beta_misses
    assert elapsed < 120
    assert not misses


@pytest.mark.criterion("C3", "fixed-point identities on 500 random instances")
def test_c03_fixed_point_identities():
    rng = np.random.default_rng(20240603)
    bad, skipped = [], 0
    for i in range(500):
        part = random_partition(rng, int(rng.choice([3, 4, 5])))
        r, k, m = int(rng.integers(1, 101)), float(rng.integers(1, 10**5 + 1)), int(rng.integers(1, 1001))
        sol = solve(part, r, k, m)
        if sol.branch is Branch.DEGENERATE_ZERO:
            skipped += 1
            continue
        ctx = HContext(m, k, r)
        e1 = abs(h_eval(ctx, sol.y_star) - sol.phi_star)
        e2 = abs(h_eval(ctx, sol.y_star_star) - sol.phi_star)
        ordered = sol.y_star_star < ctx.lower_zero < ctx.pole < sol.y_star
        if e1 > 1e-9 or e2 > 1e-9 or not ordered:
            bad.append(f"#{i} n={part.n} r={r} k={k:g} m={m}: |h(y*)-phi|={e1:.2e} |h(y**)-phi|={e2:.2e} ordered={ordered}")
    report("C3", [f"500 instances, {skipped} degenerate, {len(bad)} violations", *bad])
    assert not bad


@pytest.mark.criterion("C4", "solver matches the grid oracle within 1e-6 on 200 instances, < 60 s")
def test_c04_oracle_equivalence():
    rng = np.random.default_rng(4)
    start = time.perf_counter()
    worst, bad = 0.0, []
    for i in range(200):
        part = random_partition(rng, int(rng.choice([2, 3, 4])))
        r = 0 if rng.random() < 0.3 else float(rng.uniform(1, 100))
        k, m = float(rng.uniform(1, 100)), int(rng.integers(1, 51))
        phi_s = solve(part, r, k, m).phi_star
        phi_o, _ = grid_minimize(part, STANDARD, r, k, m)
        diff = abs(phi_s - phi_o)
        worst = max(worst, diff)
        if diff > 1e-6:
            bad.append(f"#{i} n={part.n} r={r:g} k={k:g} m={m}: solver {phi_s!r} oracle {phi_o!r}")
    elapsed = time.perf_counter() - start
    report("C4", [f"max |diff| = {worst:.2e}, {elapsed:.1f} s", *bad])
    assert not bad
    assert elapsed < 60


@pytest.mark.criterion("C5", "phi* monotone in k and r and bounded by (1-y2)^m")
def test_c05_monotonicity_bounds():
    rng = np.random.default_rng(5)
    slack = 1e-12
    bad = []
    ks = np.geomspace(1, 1e7, 15)
    for i in range(30):
        part = random_partition(rng, int(rng.choice([3, 4, 5])))
        m = int(rng.integers(1, 1001))
        r = int(rng.integers(1, 21))
        sup = math.exp(m * math.log1p(-part.breakpoints[2]))
        ladder = [solve(part, r, k, m).phi_star for k in ks]
        if any(b < a - slack for a, b in zip(ladder, ladder[1:])):
            bad.append(f"#{i}: not nondecreasing in k")
        if max(ladder) > sup + slack:
            bad.append(f"#{i}: above (1-y2)^m")
        k = float(rng.uniform(1, 1e5))
        rungs = [solve(part, rr, k, m).phi_star for rr in range(0, 12)]
        if any(b > a + slack for a, b in zip(rungs, rungs[1:])):
            bad.append(f"#{i}: not nonincreasing in r")
    report("C5", [f"30 partitions, {len(bad)} violations", *bad])
    assert not bad


@pytest.mark.criterion("C6", "degenerate rules")
def test_c06_degenerate_rules():
    two = validate_partition([0, 0.3, 1], [0.4, 0.6])
    for r in (1, 5, 100):
        assert solve(two, r, 1e6, 46).phi_star == 0.0
    ff = validate_partition([0, 1], [0.3, 0.7], fault_free=True)
    for r in (1, 3):
        assert solve(ff, r, 1e6, 46).phi_star == 0.0
    single = validate_partition([0, 1], [1.0])
    for r in (0, 2):
        sol = solve(single, r, 50, 10)
        prior = build_conservative_prior(sol, single, r, 50, 10)
        assert sol.phi_star == 0.0
        assert prior.atoms == ((1.0, 1.0),)
    report("C6", ["n <= 2 with r > 0, fault-free single interval and n = 1 all degenerate"])


@pytest.mark.criterion("C7", "r = 0 fixed-point identity and fault-free two-term closed form")
def test_c07_no_failure_identity():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(200):
        part = random_partition(rng, int(rng.choice([2, 3, 4, 5])))
        k, m = float(rng.uniform(1, 1e5)), int(rng.integers(1, 1001))
        sol = solve_no_failure(part, k, m)
        if sol.branch is Branch.DEGENERATE_ZERO:
            continue
        worst = max(worst, abs(sol.phi_star - math.exp(m * math.log1p(-sol.y_star)) * (m + k) / k))
    worst_ff = 0.0
    for _ in range(50):
        p0 = float(rng.uniform(0.01, 0.99))
        part = validate_partition([0, 1], [p0, 1 - p0], fault_free=True)
        k, m = float(rng.uniform(1, 1e4)), int(rng.integers(1, 1001))
        sol = solve_fault_free(part, 0, k, m)
        y = sol.y_star
        closed = (p0 + (1 - p0) * (1 - y) ** (m + k)) / (p0 + (1 - p0) * (1 - y) ** k)
        worst_ff = max(worst_ff, abs(sol.phi_star - closed))
    report("C7", [f"identity residual max {worst:.2e}", f"two-term residual max {worst_ff:.2e}"])
    assert worst <= 1e-10
    assert worst_ff <= 1e-12


@pytest.mark.criterion("C8", "large-r limits of y*, y** and k_beta/r")
def test_c08_asymptotics():
    m, alpha, r = 46, 0.009895, 10**4
    part = uniform_consistent_partition([0, 1e-6, 1e-4, 1])
    plan = plan_demands_cbi(part, m, alpha, r)
    assert plan.feasible
    sol = solve(part, r, plan.k_required, m)
    pole = r / (r + plan.k_required)
    lim = asymptotic_limits(m, alpha, pole)
    e_star = abs(sol.y_star - lim.y_star_limit) / lim.y_star_limit
    e_ss = abs(sol.y_star_star - lim.y_star_star_limit) / lim.y_star_star_limit
    beta = plan_demands_beta(m, alpha, 10**6)
    e_beta = abs(beta.k_required / 10**6 - lim.kbeta_over_r) / lim.kbeta_over_r
    report(
        "C8",
        [
            f"k_C = {plan.k_required}, y* = {sol.y_star:.6g} vs {lim.y_star_limit:.6g} ({e_star:.1e})",
            f"y** = {sol.y_star_star:.6g} vs {lim.y_star_star_limit:.6g} ({e_ss:.1e}), {lim.y_star_star_descriptor.value}",
            f"k_beta/r = {beta.k_required / 10**6:.6g} vs {lim.kbeta_over_r:.6g} ({e_beta:.1e})",
        ],
    )
    assert e_star <= 0.01 and e_ss <= 0.01
    assert e_beta <= 1e-3


@pytest.mark.criterion("C9", "fault-free phi*(k) limits")
def test_c09_fault_free_limits():
    part = validate_partition([0, 1e-6, 1e-5, 1], [0.9, 0.09, 0.009, 0.001], fault_free=True)
    m = 10**4
    limit = math.exp(m * math.log1p(-1e-5))
    lines = []
    for r in (1, 2, 5):
        phi = solve(part, r, 1e8, m).phi_star
        lines.append(f"r={r}: phi*(1e8) = {phi:.6f}, limit {limit:.6f}")
        assert abs(phi - limit) <= 0.005 * limit
    ladder = [solve(part, 0, k, m).phi_star for k in (1e4, 1e6, 1e8)]
    lines.append(f"r=0: phi* = {', '.join(f'{v:.6f}' for v in ladder)}")
    report("C9", lines)
    assert ladder[0] <= ladder[1] <= ladder[2]
    assert ladder[2] >= 0.995


@pytest.mark.criterion("C10", "refinement closes the gap to the Beta predictive")
def test_c10_refinement():
    m, r, k = 5, 1, 10
    part = uniform_consistent_partition([0, 0.25, 0.5, 0.75, 1])
    beta = beta_predictive(m, k, r)
    gaps = []
    for _ in range(9):
        gaps.append(beta - solve(part, r, k, m).phi_star)
        part = refine_partition(part, 2)
    report("C10", [f"n={4 * 2**i}: gap/beta = {g / beta:.4%}" for i, g in enumerate(gaps)])
    assert all(b <= a for a, b in zip(gaps, gaps[1:]))
    assert min(gaps) >= -1e-12
    assert gaps[-1] < 0.01 * beta
