import math

import numpy as np
import pytest

from boussinesq_cap.problem import energy_lines, mu, residual
from boussinesq_cap.solver import (
    NEWTON_TOL,
    AugmentedSystem,
    NoConvergence,
    SingularJacobian,
    StepUnderflow,
    approx_inverse,
    continue_branch,
    ensure_resolved,
    newton_solve,
    seed_branch,
    solve_point,
    tail_mass,
)
from boussinesq_cap.space import IndexSets, Params, SymCoeffs, norm_nu

TWO_PI = 2 * math.pi


def const_energy(a):
    return a * a / 2 + a**3 / 3


def test_newton_exact_constant_solution():
    a = 0.3
    p = Params(lam=0.1446, L=TWO_PI, nu=1.01, m=(3, 3))
    sys = AugmentedSystem(p, const_energy(a))
    res = newton_solve(sys, SymCoeffs.zeros(p.m, a))
    assert res.iterations <= 1
    assert res.x.c00 == pytest.approx(a, abs=1e-14)
    assert not np.any(res.x.data)


def test_newton_quadratic_convergence():
    a = 0.3
    p = Params(lam=0.1446, L=TWO_PI, nu=1.01, m=(3, 3))
    rng = np.random.default_rng(0)
    guess = SymCoeffs(a + 1e-3, 1e-3 * rng.normal(size=p.m))
    guess.data[:, 0] = 0.0
    res = newton_solve(AugmentedSystem(p, const_energy(a)), guess)
    h = res.history
    assert len(h) >= 3
    # each step roughly squares the residual
    for e0, e1 in zip(h[:-1], h[1:]):
        if e1 < 1e-13:
            break
        assert e1 <= 10.0 * e0 * e0
    assert norm_nu(res.x, 1.01) < 1e-12
    assert res.x.c00 == pytest.approx(a, abs=1e-12)


def test_newton_forced_failure():
    p = Params(lam=0.1446, L=TWO_PI, nu=1.01, m=(3, 3))
    guess = SymCoeffs(5.0, np.full(p.m, 3.0))
    guess.data[:, 0] = 0.0
    with pytest.raises(NoConvergence):
        newton_solve(AugmentedSystem(p, 1.0), guess, max_iter=1)


def test_seed_amplitude_zero_gives_trivial_solution():
    p = Params(lam=0.1446, L=TWO_PI, nu=1.01, m=(4, 4))
    x = seed_branch((0, 1), p, amplitude=0.0)
    assert not np.any(x.data)
    pt = solve_point(x, p)
    assert not np.any(np.abs(pt.x.data) > 1e-14)


def test_seed_mode_01_branch():
    lam = 1 / (4 * math.pi**2) + 0.01
    p = Params(lam=lam, L=TWO_PI, nu=1.01, m=(6, 6))
    pt = solve_point(seed_branch((0, 1), p, amplitude=0.05), p)
    assert norm_nu(pt.x, p.nu) > 1e-6
    assert pt.diagnostics["residual_inf"] < NEWTON_TOL


def test_seed_mode_12_branch():
    lam = 3 / (64 * math.pi**2) + 0.001
    p = Params(lam=lam, L=TWO_PI, nu=1.01, m=(6, 6))
    assert abs(mu((1, 2), p)) < 0.2
    pt = solve_point(seed_branch((1, 2), p, amplitude=0.02), p)
    assert norm_nu(pt.x, p.nu) > 1e-6
    assert abs(pt.x.data[1, 2]) > 1e-6


@pytest.fixture(scope="module")
def branch_start():
    p = Params(lam=0.1346, L=TWO_PI, nu=1.01, m=(16, 16))
    pt = solve_point(seed_branch((1, 1), p, 0.3), p)
    return continue_branch(pt, 0.01, 0.1446, pin="mean")[-1]


def test_continuation_zero_length(branch_start):
    br = continue_branch(branch_start, 0.01, branch_start.params.lam, pin="mean")
    assert len(br) == 1


def test_continuation_step_underflow(branch_start):
    with pytest.raises(StepUnderflow) as info:
        continue_branch(branch_start, 5.0, 50.0, dlam_min=1.0, pin="mean")
    assert len(info.value.branch) >= 1


def test_continuation_over_figure_range(branch_start):
    br = continue_branch(branch_start, 0.01, 0.2346, pin="mean")
    lams = br.lambdas
    assert lams[0] == pytest.approx(0.1446)
    assert lams[-1] == 0.2346
    assert len(br) - 1 <= 200
    assert all(b > a for a, b in zip(lams, lams[1:]))
    ix_m = branch_start.params.m
    for pt in br:
        f = residual(pt.x, pt.params)[: ix_m[0], 1 : ix_m[1]]
        assert np.max(np.abs(f)) < NEWTON_TOL
        assert energy_lines(pt.x, pt.params) == pytest.approx(pt.E_target, abs=NEWTON_TOL * max(1, abs(pt.E_target)))
    # solutions grow along the branch
    assert br[-1].diagnostics["norm_nu"] > br[0].diagnostics["norm_nu"]


def test_resolve_reproduces_point(branch_start):
    pt = branch_start
    again = solve_point(pt.x, pt.params, pt.E_target)
    assert np.max(np.abs(again.x.data - pt.x.data)) <= 10 * NEWTON_TOL
    assert abs(again.x.c00 - pt.x.c00) <= 10 * NEWTON_TOL


def test_ensure_resolved_grows_m(branch_start):
    pt = branch_start
    assert tail_mass(pt.x, pt.params.nu) > 1e-20
    grown = ensure_resolved(pt, threshold=tail_mass(pt.x, pt.params.nu) / 10, pin="mean", max_m=40)
    assert grown.params.m[0] > pt.params.m[0]
    assert grown.x.c00 == pytest.approx(pt.x.c00)


def test_approx_inverse_diagonal():
    d = np.array([2.0, -3.0, 0.5, 7.0])
    A = approx_inverse(np.diag(d))
    assert np.allclose(A, np.diag(1 / d), rtol=1e-15, atol=0)


def test_approx_inverse_random_well_conditioned():
    rng = np.random.default_rng(1)
    J = np.eye(20) * 5 + rng.normal(size=(20, 20))
    A = approx_inverse(J)
    assert np.max(np.sum(np.abs(np.eye(20) - A @ J), axis=1)) < 1e-10


def test_approx_inverse_singular():
    J = np.ones((4, 4))
    with pytest.raises(SingularJacobian):
        approx_inverse(J)


def test_augmented_jacobian_finite_differences():
    rng = np.random.default_rng(4)
    p = Params(lam=0.2, L=TWO_PI, nu=1.01, m=(3, 4))
    x = SymCoeffs(0.7, 0.3 * rng.normal(size=p.m))
    x.data[:, 0] = 0.0
    for pin in ("energy", "mean"):
        sys = AugmentedSystem(p, 1.3, pin=pin, c00_target=0.2)
        D = sys.jacobian(x)
        n = IndexSets(p.m).size
        h = 1e-6
        for col in range(1 + n):
            v = np.concatenate([[x.c00], x.vector()])
            vp, vm = v.copy(), v.copy()
            vp[col] += h
            vm[col] -= h
            gp = sys.evaluate(SymCoeffs.from_vector(p.m, vp[1:], vp[0]))
            gm = sys.evaluate(SymCoeffs.from_vector(p.m, vm[1:], vm[0]))
            assert np.allclose(D[:, col], (gp - gm) / (2 * h), rtol=1e-6, atol=1e-7)
