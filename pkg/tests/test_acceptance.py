"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line.

Criteria 1-3 run full proofs and dominate the runtime (tens of minutes in
total on one core). The summary lines appear at the end of the pytest run.
"""

import math
import random
import time
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from boussinesq_cap.certify import (
    bound_Y,
    bound_Z0,
    bound_Z1,
    bound_Z2,
    build_operators,
    check_cond_m,
    curly_B,
    prove,
    ring1_inv_mu_max,
)
from boussinesq_cap.cli import main
from boussinesq_cap.interval import Interval
from boussinesq_cap.problem import jacobian_entry, mu_at, residual
from boussinesq_cap.solver import NEWTON_TOL, continue_branch, seed_branch, solve_point
from boussinesq_cap.space import (
    IndexSets,
    Params,
    SymCoeffs,
    conv_full,
    evaluate_field,
    full_lattice,
    norm_nu,
    norm_nu_full,
    write_solution,
)

from oracles import brute_bounds, quarter_norm, random_coeffs, signed_dict

TWO_PI = 2 * math.pi
NU = 1.01


# -- end-to-end proofs ----------------------------------------------------------


def branch_point(lam_end, m_cont, m_proof=None, lam_start=0.1346):
    """Seed the (1,1) branch, continue in lambda at fixed mean, optionally refine m."""
    p = Params(lam=lam_start, L=TWO_PI, nu=NU, m=(m_cont, m_cont))
    pt = solve_point(seed_branch((1, 1), p, 0.3), p)
    pt = continue_branch(pt, 0.01, lam_end, pin="mean")[-1]
    if m_proof is not None and m_proof != m_cont:
        m = (m_proof, m_proof)
        pt = solve_point(pt.x.resized(m), pt.params.with_(m=m), pin="mean")
    return pt


def residual_inf(pt):
    m1, m2 = pt.params.m
    return float(np.max(np.abs(residual(pt.x, pt.params)[:m1, 1:m2])))


def run_proof(record, n, lam, m_cont, m_proof, r_max, time_limit, ref_r):
    pt = branch_point(lam, m_cont, m_proof)
    t0 = time.perf_counter()
    try:
        cert = prove(pt.x, pt.params)
    except Exception as exc:  # any certification failure is a criterion failure
        record(n, False, f"lambda={lam} m={pt.params.m}: {type(exc).__name__}: {exc}")
        raise
    elapsed = time.perf_counter() - t0
    r = cert.r_star
    ratio = r / ref_r
    ok = r <= r_max and elapsed <= time_limit
    record(
        n,
        ok,
        f"lambda={lam} m={pt.params.m} r={r:.5e} (reference {ref_r:.5e}, ratio {ratio:.3g}) "
        f"newton residual {residual_inf(pt):.1e} proof {elapsed:.0f}s",
    )
    return cert, pt, elapsed


def test_criterion_1_proof_at_first_point(record):
    cert, pt, elapsed = run_proof(record, 1, 0.1446, 35, 35, 1e-9, 600, 1.07191e-11)
    assert residual_inf(pt) < NEWTON_TOL
    assert cert.r_star <= 1e-9
    assert 1.07191e-13 <= cert.r_star <= 1.07191e-9
    assert elapsed <= 600


def test_criterion_2_proof_at_m61(record):
    cert, pt, elapsed = run_proof(record, 2, 0.2346, 35, 61, 1e-9, 1800, 1.45275e-11)
    assert cert.r_star <= 1e-9
    assert elapsed <= 1800


def test_criterion_3_hard_mode(record):
    cert, pt, elapsed = run_proof(record, 3, 1.0846, 35, 61, 1e-1, math.inf, 1.09053e-3)
    assert cert.r_star <= 1e-1


# -- oracle dominance ---------------------------------------------------------------


def test_criterion_4_oracle_dominance(record):
    rng = np.random.default_rng(2024)
    violations = []
    tightest = {}
    for trial in range(20):
        lam = float(rng.uniform(0.05, 0.6))
        p = Params(lam=lam, L=TWO_PI, nu=NU, m=(3, 3))
        c00, data = random_coeffs(rng, p.m, scale=0.5)
        x = SymCoeffs(c00, data)
        A, Adag = build_operators(x, p)
        xi = x.to_interval()
        ours = {
            "Y": bound_Y(xi, A, p).hi,
            "Z0": bound_Z0(A, Adag, p).hi,
            "Z1": bound_Z1(xi, A, p).hi,
            "Z2": bound_Z2(A, p).hi,
        }
        ref = brute_bounds(c00, data, lam, p.L, p.nu, p.m, A.block.lo, factor=8)
        for key, val in ours.items():
            if not mpmath.mpf(val) >= ref[key]:
                violations.append((trial, key, val, float(ref[key])))
            if ref[key] > 0:
                tightest[key] = max(tightest.get(key, 0.0), float(ref[key] / val))
    detail = f"20 random xbar at m=(3,3), lattice F_24x24: {len(violations)} violations; " + ", ".join(
        f"{k} ref/bound up to {v:.6f}" for k, v in sorted(tightest.items())
    )
    record(4, not violations, detail)
    assert not violations


# -- ring reductions -----------------------------------------------------------------


def random_triples(rng, count):
    out = []
    while len(out) < count:
        lam = float(rng.uniform(0.05, 1.5))
        L = float(rng.uniform(1.0, 8.0))
        m1 = int(rng.integers(2, 5))
        m2 = max(m1, math.ceil(L / (2 * math.pi**2 * math.sqrt(lam)))) + int(rng.integers(0, 2))
        p = Params(lam=lam, L=L, nu=NU, m=(m1, m2))
        if check_cond_m(p):
            out.append(p)
    return out


def test_criterion_5_ring_reductions(record):
    rng = np.random.default_rng(77)
    failures = []
    for p in random_triples(rng, 10):
        ix = IndexSets(p.m)
        big = ix.F(7)
        R1 = {tuple(k) for k in ix.ring(1)}
        R2 = {tuple(k) for k in ix.ring(2)}
        # far-column bound: max over I_2m within F_7m versus max over R_2
        c00, data = random_coeffs(rng, p.m, scale=0.5)
        x = SymCoeffs(c00, data)
        far = big[~ix.in_F(big, 2)]
        vals = {tuple(q): curly_B(x, p, tuple(q)) for q in far}
        arg = max(vals, key=vals.get)
        if max(vals[q] for q in R2) != vals[arg] or arg not in R2:
            failures.append(("far columns", p, arg))
        A, _ = build_operators(x, p)
        parts = {}
        bound_Z1(x, A, p, parts=parts)
        if parts["B3"] < vals[arg]:
            failures.append(("rigorous far bound below brute force", p))
        # inverse symbol: max over I_m within F_7m versus max over R_1
        tail = big[~ix.in_F(big, 1)]
        inv = 1.0 / mu_at(tail[:, 0], tail[:, 1], p)
        k_arg = tuple(tail[int(np.argmax(inv))])
        if k_arg not in R1 or np.any(inv <= 0):
            failures.append(("inverse symbol", p, k_arg))
        enc = ring1_inv_mu_max(p)
        if not enc.hi >= inv.max():
            failures.append(("rigorous ring max below brute force", p))
    record(5, not failures, f"10 random (lambda, L, m) triples: {len(failures)} mismatches")
    assert not failures


# -- norm identities ----------------------------------------------------------------------


def full_conv_norm(a, b, nu):
    """Norm over all of Z^2 of the convolution of two centred arrays."""
    p1 = (a.shape[0] - 1) // 2 + (b.shape[0] - 1) // 2
    p2 = (a.shape[1] - 1) // 2 + (b.shape[1] - 1) // 2
    out = conv_full(a, b, out_shape=(2 * p1 + 1, 2 * p2 + 1), out_offset=(-p1, -p2))
    return norm_nu_full(out, nu, (p1, p2)), out, (p1, p2)


def test_criterion_6_norm_identities(record):
    rng = np.random.default_rng(6)
    bad = {"sym": 0, "product": 0, "scalar": 0}
    for _ in range(1000):
        m = (int(rng.integers(1, 5)), int(rng.integers(2, 5)))
        c00, xd = random_coeffs(rng, m, decay=rng.uniform(0.2, 1.0))
        _, yd = random_coeffs(rng, m, decay=rng.uniform(0.2, 1.0))
        x, y = SymCoeffs(c00, xd), SymCoeffs(0.0, yd)
        nx, ny = norm_nu(x, NU), norm_nu(y, NU)
        sx = full_lattice(x, include_c00=False)
        sy = full_lattice(y, include_c00=False)
        centre = (m[0] - 1, m[1] - 1)
        if norm_nu_full(sx, NU, centre) > 4 * nx * (1 + 1e-14):
            bad["sym"] += 1
        prod, _, _ = full_conv_norm(sx, sy, NU)
        if prod > 16 * nx * ny * (1 + 1e-14):
            bad["product"] += 1
        # c00 * sym(x) restricted to the quarter lattice is c00 x
        delta = np.zeros_like(sx)
        delta[centre] = c00
        _, out, (p1, p2) = full_conv_norm(delta, sx, NU)
        quarter = sum(
            abs(out[p1 + a, p2 + b]) * NU ** (a + b) for a in range(m[0]) for b in range(1, m[1])
        )
        if abs(quarter - abs(c00) * nx) > 1e-14 * max(1.0, abs(c00) * nx):
            bad["scalar"] += 1
    # exact 4x instance: all mass on k1 > 0, k2 > 0
    data = np.zeros((3, 3))
    data[1, 1], data[2, 1], data[1, 2] = 0.5, -0.25, 2.0
    d = signed_dict(0.0, data, exact=True)
    nu = Fraction(101, 100)
    exact_four = sum(abs(v) * nu ** (abs(k[0]) + abs(k[1])) for k, v in d.items()) == 4 * quarter_norm(d, nu)
    ok = not any(bad.values()) and exact_four
    record(6, ok, f"1000 random instances, violations {bad}; exact 4x instance: {exact_four}")
    assert ok


# -- Jacobian versus finite differences ---------------------------------------------------------


def test_criterion_7_jacobian_finite_differences(record):
    rng = np.random.default_rng(7)
    worst = 0.0
    probes = 0
    for _ in range(50):
        m = (int(rng.integers(2, 6)), int(rng.integers(2, 6)))
        p = Params(lam=float(rng.uniform(0.05, 1.0)), L=float(rng.uniform(1.0, 8.0)), nu=NU, m=m)
        c00, data = random_coeffs(rng, m, decay=1.0)
        x = SymCoeffs(c00, data)
        for _ in range(20):
            k = (int(rng.integers(0, 2 * m[0] - 1)), int(rng.integers(1, 2 * m[1] - 1)))
            j = (int(rng.integers(0, m[0])), int(rng.integers(1, m[1])))
            h = 1e-7
            xp, xm = x.copy(), x.copy()
            xp.data[j] += h
            xm.data[j] -= h
            fd = (residual(xp, p)[k] - residual(xm, p)[k]) / (2 * h)
            exact = jacobian_entry(x, p, k, j)
            # coefficients are O(1), so entries are compared relative to max(|J|, 1)
            worst = max(worst, abs(fd - exact) / max(abs(exact), 1.0))
            probes += 1
    record(7, worst < 1e-6, f"{probes} probes, worst relative error {worst:.2e}")
    assert probes == 1000 and worst < 1e-6


# -- interval containment fuzzing ------------------------------------------------------------------


def _random_interval(rng):
    e = rng.randint(-40, 40)
    lo = rng.uniform(-1.0, 1.0) * 2.0**e
    w = rng.random() * 2.0 ** (e + rng.randint(-60, 1))
    return Interval(lo, lo + w) if rng.random() < 0.9 else Interval(lo, lo)


def _sample(rng, iv):
    return iv.lo + (iv.hi - iv.lo) * rng.random() if iv.hi > iv.lo else iv.lo


def test_criterion_8_interval_fuzz(record):
    rng = random.Random(8)
    violations = 0
    count = 0
    ops = ("add", "sub", "mul", "div", "sqrt", "pow")
    while count < 1_000_000:
        a, b = _random_interval(rng), _random_interval(rng)
        op = ops[count % len(ops)]
        x = _sample(rng, a)
        y = _sample(rng, b)
        if not (a.lo <= x <= a.hi and b.lo <= y <= b.hi):
            continue
        X, Y = Fraction(x), Fraction(y)
        if op == "add":
            r, exact = a + b, X + Y
        elif op == "sub":
            r, exact = a - b, X - Y
        elif op == "mul":
            r, exact = a * b, X * Y
        elif op == "div":
            if b.lo <= 0.0 <= b.hi:
                continue
            r, exact = a / b, X / Y
        elif op == "sqrt":
            a, X = abs(a), abs(X)
            r = a.sqrt()
            lo, hi = Fraction(r.lo), Fraction(r.hi)
            violations += not ((lo <= 0 or lo * lo <= X) and X <= hi * hi)
            count += 1
            continue
        else:
            n = rng.randint(0, 7)
            r, exact = a.pow_int(n), X**n
        violations += not (Fraction(r.lo) <= exact <= Fraction(r.hi))
        count += 1
    record(8, violations == 0, f"{count} random operation triples, {violations} containment violations")
    assert violations == 0


# -- render ----------------------------------------------------------------------------------------


def test_criterion_9_render_symmetry(record, tmp_path):
    rng = np.random.default_rng(9)
    p = Params(lam=0.1446, L=TWO_PI, nu=NU, m=(6, 6))
    c00, data = random_coeffs(rng, p.m)
    x = SymCoeffs(c00, data)
    t = np.linspace(0.0, 2 * math.pi / p.L, 17)
    y = np.linspace(0.0, 1.0, 19)
    u = evaluate_field(x, p, t, y)
    sym = max(
        np.max(np.abs(u - evaluate_field(x, p, -t, y))),
        np.max(np.abs(u - evaluate_field(x, p, t, -y))),
    )
    # single mode through the command-line renderer
    b = 0.37
    single = SymCoeffs.from_dict(p.m, {(1, 1): b})
    path = tmp_path / "single.json"
    write_solution(path, single, p)
    out = tmp_path / "u.csv"
    assert main(["render", str(path), "--nt", "33", "--ny", "21", "-o", str(out)]) == 0
    rows = [line.split(",") for line in out.read_text().splitlines()]
    ys = np.array([float(v) for v in rows[0][1:]])
    ts = np.array([float(r[0]) for r in rows[1:]])
    grid = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
    formula = 4 * b * np.outer(np.cos(p.L * ts), np.cos(2 * math.pi * ys))
    err = float(np.max(np.abs(grid - formula)))
    ok = sym <= 1e-12 and err <= 1e-12
    record(9, ok, f"symmetry defect {sym:.1e}, single-mode formula error {err:.1e}")
    assert ok
