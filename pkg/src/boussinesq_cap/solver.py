"""Floating-point side: Newton on the energy-augmented system, seeding, continuation.

The mean mode ``c00`` is free in ``f = 0``; numerically it is pinned by
replacing the trivial ``(0, 0)`` equation with ``E(c00, x) = E_target``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .problem import energy_gradient, energy_lines, jacobian_block, mu, mu_grid, residual
from .space import IndexSets, Params, SymCoeffs, conv_square, norm_nu

__all__ = [
    "NEWTON_TOL",
    "MAX_ITER",
    "STEP_FLOOR",
    "SolverError",
    "SingularJacobian",
    "NoConvergence",
    "StepUnderflow",
    "PINS",
    "AugmentedSystem",
    "NewtonResult",
    "BranchPoint",
    "Branch",
    "newton_solve",
    "solve_point",
    "seed_branch",
    "continue_branch",
    "approx_inverse",
    "tail_mass",
    "ensure_resolved",
]

log = logging.getLogger(__name__)

NEWTON_TOL = 1e-13
MAX_ITER = 30
STEP_FLOOR = 1e-14


class SolverError(RuntimeError):
    pass


class SingularJacobian(SolverError):
    pass


class NoConvergence(SolverError):
    pass


class StepUnderflow(SolverError):
    pass


PINS = ("energy", "mean")


@dataclass
class AugmentedSystem:
    """Unknowns ``(c00, x on F_m)``; equations ``E - E_target`` and ``f_k``, ``k`` in ``F_m``.

    With ``pin="mean"`` the first equation is ``c00 - c00_target`` instead,
    which is the square system the validation works with.
    """

    params: Params
    E_target: float
    pin: str = "energy"
    c00_target: float = 0.0

    def __post_init__(self) -> None:
        if self.pin not in PINS:
            raise ValueError(f"pin must be one of {PINS}, got {self.pin!r}")

    @property
    def dim(self) -> int:
        return 1 + IndexSets(self.params.m).size

    def evaluate(self, x: SymCoeffs) -> np.ndarray:
        m1, m2 = self.params.m
        f = residual(x, self.params)[:m1, 1:m2].ravel()
        if self.pin == "mean":
            return np.concatenate([[float(x.c00) - self.c00_target], f])
        # energy equation scaled so the tolerance is relative for large |E|
        e = (energy_lines(x, self.params) - self.E_target) / self.energy_scale
        return np.concatenate([[e], f])

    @property
    def energy_scale(self) -> float:
        return max(1.0, abs(self.E_target))

    def jacobian(self, x: SymCoeffs) -> np.ndarray:
        n = self.dim
        D = np.empty((n, n))
        if self.pin == "mean":
            D[0, 0] = 1.0
            D[0, 1:] = 0.0
        else:
            dc, dx = energy_gradient(x, self.params)
            D[0, 0] = dc / self.energy_scale
            D[0, 1:] = dx / self.energy_scale
        D[1:, 0] = -2.0 * x.vector()
        D[1:, 1:] = jacobian_block(x, self.params)
        return D


@dataclass
class NewtonResult:
    x: SymCoeffs
    iterations: int
    residual_inf: float
    history: list[float]


def newton_solve(
    sys: AugmentedSystem,
    guess: SymCoeffs,
    tol: float = NEWTON_TOL,
    max_iter: int = MAX_ITER,
) -> NewtonResult:
    """Newton's method on the augmented system.

    Raises SingularJacobian if a linear solve fails and NoConvergence if the
    residual is not below ``tol`` after ``max_iter`` steps. For large
    solutions the residual can stall just above ``tol`` at rounding level;
    an iterate whose Newton step is below ``STEP_FLOOR`` relative to the
    unknowns is accepted as converged.
    """
    m = sys.params.m
    if guess.m != m:
        guess = guess.resized(m)
    c00 = float(guess.c00)
    v = guess.vector()
    x = SymCoeffs.from_vector(m, v, c00)
    G = sys.evaluate(x)
    hist = [float(np.max(np.abs(G)))]
    it = 0
    while hist[-1] >= tol:
        if it >= max_iter or not np.isfinite(hist[-1]):
            raise NoConvergence(f"residual {hist[-1]:.3e} after {it} iterations")
        D = sys.jacobian(x)
        try:
            step = np.linalg.solve(D, G)
        except np.linalg.LinAlgError as exc:
            raise SingularJacobian(str(exc)) from exc
        if not np.all(np.isfinite(step)):
            raise SingularJacobian("non-finite Newton step")
        c00 -= step[0]
        v = v - step[1:]
        x = SymCoeffs.from_vector(m, v, c00)
        G = sys.evaluate(x)
        hist.append(float(np.max(np.abs(G))))
        it += 1
        log.debug("newton it=%d res=%.3e", it, hist[-1])
        scale = max(1.0, abs(c00), float(np.max(np.abs(v))) if v.size else 0.0)
        if float(np.max(np.abs(step))) <= STEP_FLOOR * scale and hist[-1] < 1e3 * tol:
            break
    return NewtonResult(x, it, hist[-1], hist)


def seed_branch(mode: tuple[int, int], p: Params, amplitude: float = 0.05, sweeps: int = 4) -> SymCoeffs:
    """Single-mode ansatz near the bifurcation of ``mode`` from a constant state.

    The constant ``c00`` makes ``mode`` neutral (``mu_mode - 2 c00 = 0``) at
    zero amplitude. For nonzero amplitude ``b`` the slaved harmonics are set
    from the linear balance ``(mu_k - 2 c00) x_k = (sym x * sym x)_k`` and
    ``c00`` from the solvability condition at ``mode``; a few sweeps of this
    fixed point give a guess whose distance from the branch is higher order
    in ``b``. Only subsequent Newton convergence validates it.
    """
    m = p.m
    k1, k2 = mode
    if not (0 <= k1 < m[0] and 0 < k2 < m[1]):
        raise ValueError(f"mode {mode} outside F_m for m={m}")
    mu_q = mu(mode, p)
    c00 = 0.5 * mu_q
    x = SymCoeffs.zeros(m, c00)
    if amplitude == 0.0:
        return x
    x.data[k1, k2] = amplitude
    mus = mu_grid(m, p)
    for _ in range(sweeps):
        sx = SymCoeffs(0.0, x.data)
        quad = conv_square(sx)[: m[0], : m[1]]
        denom = mus - 2.0 * c00
        with np.errstate(divide="ignore", invalid="ignore"):
            slaved = np.where(np.abs(denom) > 1e-8, quad / denom, 0.0)
        slaved[:, 0] = 0.0
        slaved[k1, k2] = amplitude
        x = SymCoeffs(c00, slaved)
        sx = SymCoeffs(0.0, x.data)
        fb = conv_square(sx)[k1, k2]
        c00 = 0.5 * (mu_q - fb / amplitude)
        x = SymCoeffs(c00, x.data)
    return x


@dataclass
class BranchPoint:
    """One converged solution; ``E_target`` equals ``energy(x)`` to solver tolerance."""

    params: Params
    x: SymCoeffs
    E_target: float
    diagnostics: dict = field(default_factory=dict)


@dataclass
class Branch:
    points: list[BranchPoint] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __getitem__(self, i):
        return self.points[i]

    @property
    def lambdas(self) -> list[float]:
        return [pt.params.lam for pt in self.points]


def _diagnostics(x: SymCoeffs, p: Params, res: NewtonResult | None = None) -> dict:
    d = {
        "lambda": p.lam,
        "c00": float(x.c00),
        "energy": energy_lines(x, p),
        "norm_nu": norm_nu(x, p.nu),
        "tail_mass": tail_mass(x, p.nu),
    }
    if res is not None:
        d["newton_iterations"] = res.iterations
        d["residual_inf"] = res.residual_inf
    return d


def solve_point(x: SymCoeffs, p: Params, E_target: float | None = None, pin: str = "energy", **kw) -> BranchPoint:
    """Newton from ``x``; with ``pin="mean"`` the mean of ``x`` is kept and ``E_target`` is recomputed."""
    if pin == "mean":
        sys = AugmentedSystem(p, 0.0, pin="mean", c00_target=float(x.c00))
    else:
        if E_target is None:
            E_target = energy_lines(x, p)
        sys = AugmentedSystem(p, E_target)
    res = newton_solve(sys, x, **kw)
    if pin == "mean":
        E_target = energy_lines(res.x, p)
    return BranchPoint(p, res.x, E_target, _diagnostics(res.x, p, res))


def continue_branch(
    start: BranchPoint,
    dlam: float,
    lam_end: float,
    dlam_min: float | None = None,
    tol: float = NEWTON_TOL,
    max_iter: int = MAX_ITER,
    max_steps: int = 10_000,
    pin: str = "energy",
    max_jump: float = 0.25,
    callback=None,
) -> Branch:
    """Natural continuation in lambda.

    ``pin="energy"`` freezes ``E_target`` at the start value; ``pin="mean"``
    freezes ``c00`` instead. The previous solution is the predictor. A
    corrector that fails, or that lands farther than ``max_jump`` (relative,
    in the weighted norm) from the previous point, halves the step; the
    second condition stops the iteration from sliding onto the constant
    state. Below ``dlam_min`` the run stops with StepUnderflow carrying the
    partial branch as ``exc.branch``. After a success the step grows back
    toward ``dlam``.
    """
    if dlam_min is None:
        dlam_min = abs(dlam) / 1024.0
    branch = Branch([start])
    lam = start.params.lam
    direction = 1.0 if lam_end >= lam else -1.0
    h_max = abs(dlam)
    h = h_max
    steps = 0
    while direction * (lam_end - lam) > 0:
        if steps >= max_steps:
            raise StepUnderflow(f"step budget of {max_steps} exhausted at lambda={lam}")
        target = lam + direction * h
        if direction * (target - lam_end) > 0 or abs(target - lam_end) < 1e-12:
            target = lam_end
        prev = branch.points[-1]
        p = prev.params.with_(lam=target)
        try:
            pt = solve_point(prev.x, p, prev.E_target, pin=pin, tol=tol, max_iter=max_iter)
            scale = max(norm_nu(prev.x, p.nu), 1e-300)
            jump = norm_nu(SymCoeffs(0.0, pt.x.data - prev.x.data), p.nu) / scale
            if jump > max_jump:
                raise NoConvergence(f"corrector jumped {jump:.2e} relative")
        except (NoConvergence, SingularJacobian) as exc:
            h *= 0.5
            log.info("continuation step failed at lambda=%.6g (%s); h -> %.3g", target, exc, h)
            if h < dlam_min:
                err = StepUnderflow(f"step {h:.3g} below minimum {dlam_min:.3g} at lambda={lam}")
                err.branch = branch
                raise err
            continue
        branch.points.append(pt)
        if callback is not None:
            callback(pt)
        lam = target
        steps += 1
        h = min(h_max, 1.5 * h)
    return branch


def approx_inverse(J: np.ndarray) -> np.ndarray:
    """Numerical inverse of a square Jacobian block; quality is measured later by Z0."""
    J = np.asarray(J, dtype=float)
    if J.ndim != 2 or J.shape[0] != J.shape[1]:
        raise ValueError("approx_inverse expects a square matrix")
    try:
        A = np.linalg.inv(J)
    except np.linalg.LinAlgError as exc:
        raise SingularJacobian(str(exc)) from exc
    if not np.all(np.isfinite(A)):
        raise SingularJacobian("inverse has non-finite entries")
    if np.linalg.cond(J, 1) > 1e15:
        raise SingularJacobian("Jacobian block numerically singular")
    return A


def tail_mass(x: SymCoeffs, nu: float) -> float:
    """Weighted mass in the outermost layer of ``F_m`` relative to the whole norm."""
    total = norm_nu(x, nu)
    if total == 0.0:
        return 0.0
    m1, m2 = x.m
    d = np.abs(np.asarray(x.data, dtype=float))
    k1, k2 = np.indices(d.shape)
    w = float(nu) ** (k1 + k2)
    outer = (k1 == m1 - 1) | (k2 == m2 - 1)
    return float(np.sum(d[outer] * w[outer]) / total)


def ensure_resolved(
    pt: BranchPoint, threshold: float = 1e-14, growth: float = 1.25, max_m: int = 128, pin: str = "energy"
) -> BranchPoint:
    """Grow ``m`` by 25% and re-solve while the trailing layer carries too much mass."""
    while tail_mass(pt.x, pt.params.nu) > threshold:
        m1, m2 = pt.params.m
        new = (max(m1 + 1, math.ceil(growth * m1)), max(m2 + 1, math.ceil(growth * m2)))
        if max(new) > max_m:
            log.warning("truncation growth capped at m=%s (tail mass %.2e)", pt.params.m, tail_mass(pt.x, pt.params.nu))
            break
        p = pt.params.with_(m=new)
        pt = solve_point(pt.x.resized(new), p, pt.E_target, pin=pin)
    return pt
