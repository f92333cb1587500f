"""Rigorous side: the bounds Y, Z0, Z1, Z2, the radii polynomial, certificates.

Every bound is an :class:`Interval` whose upper endpoint is the certified
quantity. The numerical solution ``xbar`` is promoted to point intervals and
its mean ``c00`` is frozen, so the validated map is ``f`` in ``x`` alone.
The approximate inverse ``A^(m)`` is a float matrix treated as exact; its
quality only enters through ``Z0``.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .interval import (
    Interval,
    IntervalArray,
    mat_mul_verified,
    matvec_upper_nonneg,
    pi_interval,
    pow_int_array,
)
from .problem import L_enclosure, _lookup_table, coupling, jacobian_block, lambda_enclosure, mu_at, residual
from .solver import approx_inverse
from .space import IndexSets, Params, SymCoeffs, full_lattice, op_norm, solution_digest

__all__ = [
    "CertifyError",
    "MuSignError",
    "NoNegativeRadius",
    "PreconditionFailed",
    "TailOperator",
    "BoundSet",
    "RadiusResult",
    "Certificate",
    "check_cond_m",
    "build_operators",
    "bound_Y",
    "bound_Z0",
    "bound_Z1",
    "bound_Z2",
    "curly_B",
    "ring1_inv_mu_max",
    "verify_A_injective",
    "radii_polynomial",
    "eval_radii_polynomial",
    "error_bounds",
    "prove",
    "write_certificate",
    "read_certificate",
    "verify_certificate",
    "CERT_FORMAT",
]

CERT_FORMAT = "boussinesq-certificate/1"
R_STAR_DELTA = 1e-3
_TINY = 2.2250738585072014e-308  # smallest normal double


class CertifyError(RuntimeError):
    pass


class MuSignError(CertifyError):
    """Positivity of some tail ``mu_k`` could not be verified."""


class NoNegativeRadius(CertifyError):
    """The radii polynomial has no provably negative value."""


class PreconditionFailed(CertifyError):
    """The truncation condition or the injectivity check failed."""


def _up(a):
    return np.nextafter(a, np.inf)


def _dn(a):
    return np.nextafter(a, -np.inf)


def _nu(p: Params) -> Interval:
    return Interval.point(p.nu)


# ---------------------------------------------------------------------------
# Operators
# ---------------------------------------------------------------------------


@dataclass
class TailOperator:
    """``block`` on ``F_m x F_m``, ``mu_k ** power`` on the diagonal of ``I_m``, zero elsewhere.

    ``power = -1`` gives ``A``, ``power = +1`` gives ``A-dagger``.
    """

    block: IntervalArray
    params: Params
    power: int

    def __post_init__(self) -> None:
        if self.power not in (-1, 1):
            raise ValueError("power must be +1 or -1")
        self.block = IntervalArray.coerce(self.block)
        n = IndexSets(self.params.m).size
        if self.block.shape != (n, n):
            raise ValueError(f"block shape {self.block.shape} does not match |F_m| = {n}")

    def entry(self, k: tuple[int, int], j: tuple[int, int]) -> Interval:
        ix = IndexSets(self.params.m)
        kk, jj = np.array([k]), np.array([j])
        if ix.in_F(kk)[0] and ix.in_F(jj)[0]:
            return self.block[int(ix.flat(*k)), int(ix.flat(*j))]
        if tuple(k) == tuple(j) and not ix.in_F(kk)[0]:
            mu = mu_at(np.array([k[0]]), np.array([k[1]]), self.params, interval=True)[0]
            return mu if self.power == 1 else Interval(1.0, 1.0) / mu
        return Interval(0.0, 0.0)


def build_operators(x: SymCoeffs, p: Params) -> tuple[TailOperator, TailOperator]:
    """``A`` (float inverse of the float Jacobian block) and ``A-dagger`` (interval Jacobian block)."""
    xf = x if not x.is_interval else SymCoeffs(x.c00.mid if isinstance(x.c00, Interval) else x.c00, x.data.mid)
    J = jacobian_block(xf, p)
    A = approx_inverse(J)
    Jd = jacobian_block(xf.to_interval(), p)
    return TailOperator(IntervalArray.point(A), p, -1), TailOperator(Jd, p, 1)


# ---------------------------------------------------------------------------
# Preconditions
# ---------------------------------------------------------------------------


def check_cond_m(p: Params) -> bool:
    """Verify ``m2 >= max(m1, L / (2 pi^2 sqrt(lam)))`` in interval arithmetic."""
    m1, m2 = p.m
    if m2 < m1:
        return False
    pi = pi_interval()
    lam = lambda_enclosure(p)
    if lam.lo <= 0:
        return False
    bound = L_enclosure(p) / (2 * pi * pi * lam.sqrt())
    return m2 >= bound.hi


def _inv_mu_checked(k1: np.ndarray, k2: np.ndarray, p: Params) -> IntervalArray:
    """Enclosure of ``1/mu`` with positivity verified; zero where ``k2 = 0``."""
    mu = mu_at(k1, k2, p, interval=True)
    live = np.asarray(np.broadcast_to(k2, mu.shape)) != 0
    if np.any(mu.lo[live] <= 0):
        bad = np.argwhere(live & (mu.lo <= 0))[0]
        raise MuSignError(f"mu not provably positive at index {tuple(int(v) for v in bad)}")
    safe = IntervalArray(np.where(live, mu.lo, 1.0), np.where(live, mu.hi, 1.0), check=False)
    inv = IntervalArray.point(np.ones(mu.shape)) / safe
    inv.lo[~live] = 0.0
    inv.hi[~live] = 0.0
    return inv


def ring1_inv_mu_max(p: Params) -> Interval:
    """Enclosure of ``max_{k in R_1} 1/mu_k`` (positivity verified)."""
    ring = IndexSets(p.m).ring(1)
    inv = _inv_mu_checked(ring[:, 0], ring[:, 1], p)
    return Interval(float(inv.lo.max()), float(inv.hi.max()))


def verify_A_injective(A: TailOperator, Z0: Interval, p: Params) -> bool:
    """Pass iff ``Z0 < 1`` and ``mu_k > 0`` on ``R_1`` (hence on ``I_m`` under the truncation condition)."""
    if not Z0.hi < 1.0:
        return False
    if not check_cond_m(p):
        return False
    try:
        ring1_inv_mu_max(p)
    except MuSignError:
        return False
    return True


# ---------------------------------------------------------------------------
# Bounds
# ---------------------------------------------------------------------------


def _weights(k1: np.ndarray, k2: np.ndarray, p: Params) -> IntervalArray:
    return pow_int_array(_nu(p), np.abs(k1) + np.abs(k2))


def _as_interval_x(x: SymCoeffs) -> SymCoeffs:
    return x if x.is_interval else x.to_interval()


def bound_Y(x: SymCoeffs, A: TailOperator, p: Params) -> Interval:
    """Enclosure of ``sum_{F_{2m-1}} |(A f(xbar))_k| nu^|k|``."""
    xi = _as_interval_x(x)
    m1, m2 = p.m
    f = residual(xi, p)
    n1, n2 = f.shape
    fF = f[:m1, 1:m2].reshape(-1, 1)
    yF = mat_mul_verified(A.block, fF).reshape(m1, m2 - 1)
    k1, k2 = np.meshgrid(np.arange(n1), np.arange(n2), indexing="ij")
    tail = ((k1 >= m1) | (k2 >= m2)) & (k2 > 0)
    inv = _inv_mu_checked(k1[tail], k2[tail], p)
    yT = IntervalArray(f.lo[tail], f.hi[tail], check=False) * inv
    total = (abs(yF) * _weights(k1[:m1, 1:m2], k2[:m1, 1:m2], p)).sum()
    if yT.size:
        total = total + (abs(yT) * _weights(k1[tail], k2[tail], p)).sum()
    return Interval(max(total.lo, 0.0), total.hi)


def bound_Z0(A: TailOperator, Adag: TailOperator, p: Params) -> Interval:
    """Upper bound of ``||I - A^(m) D^(m)f||`` in the weighted operator norm."""
    F = IndexSets(p.m).F()
    M = mat_mul_verified(A.block, Adag.block)
    n = M.shape[0]
    d = np.arange(n)
    B = -M
    B.lo[d, d] = _dn(1.0 - M.hi[d, d])
    B.hi[d, d] = _up(1.0 - M.lo[d, d])
    return Interval(0.0, op_norm(B, p.nu, F, F))


def _column_sums_upper(w_upper: np.ndarray, C: IntervalArray) -> np.ndarray:
    """Upper bound of ``sum_s w_s |C_sq|`` for every column ``q``."""
    return matvec_upper_nonneg(w_upper, C.mag())


def _chunks(n: int, rows: int, budget: int = 1_500_000):
    step = max(1, budget // max(rows, 1))
    for start in range(0, n, step):
        yield slice(start, min(n, start + step))


def _divide_by_weight(s: np.ndarray, q: np.ndarray, p: Params) -> np.ndarray:
    wq = _weights(q[:, 0], q[:, 1], p).lo
    return _up(2.0 * s / wq)


def _z1_case_inner(xi, table, A: TailOperator, p: Params, chunk_budget: int) -> float:
    """``q`` in ``F_m``: only tail rows ``s`` in ``F_2m minus F_m`` see a nonzero column."""
    ix = IndexSets(p.m)
    Q = ix.F()
    S = ix.ring(1)
    inv = _inv_mu_checked(S[:, 0], S[:, 1], p)
    ws = _up(inv.hi * _weights(S[:, 0], S[:, 1], p).hi)
    best = 0.0
    for sl in _chunks(len(Q), len(S), chunk_budget):
        q = Q[sl]
        C = coupling(xi, S[:, 0:1], S[:, 1:2], q[None, :, 0], q[None, :, 1], table=table)
        col = _column_sums_upper(ws, C)
        best = max(best, float(_divide_by_weight(col, q, p).max()))
    return best


def _z1_case_ring(xi, table, A: TailOperator, p: Params, chunk_budget: int) -> float:
    """``q`` in ``F_2m minus F_m``: block part through ``A^(m)`` plus tail rows ``F_3m minus F_m``."""
    ix = IndexSets(p.m)
    Q = ix.ring(1)
    Fm = ix.F()
    S = np.concatenate([ix.ring(1), ix.ring(2)])
    inv = _inv_mu_checked(S[:, 0], S[:, 1], p)
    ws = _up(inv.hi * _weights(S[:, 0], S[:, 1], p).hi)
    wF = _weights(Fm[:, 0], Fm[:, 1], p).hi
    best = 0.0
    for sl in _chunks(len(Q), len(S), chunk_budget):
        q = Q[sl]
        CF = coupling(xi, Fm[:, 0:1], Fm[:, 1:2], q[None, :, 0], q[None, :, 1], table=table)
        P = mat_mul_verified(A.block, CF)
        col = matvec_upper_nonneg(wF, P.mag())
        CT = coupling(xi, S[:, 0:1], S[:, 1:2], q[None, :, 0], q[None, :, 1], table=table)
        col = _up(col + _column_sums_upper(ws, CT))
        best = max(best, float(_divide_by_weight(col, q, p).max()))
    return best


def _calB_pieces(p: Params):
    """``R_2`` as two rectangles ``(q1 range, q2 range)``."""
    m1, m2 = p.m
    return [((2 * m1, 3 * m1), (1, 3 * m2)), ((0, 2 * m1), (2 * m2, 3 * m2))]


def _z1_far(x: SymCoeffs, p: Params) -> float:
    """``max_{q in R_2}`` of the far-column bound ``calB(q)``, computed by scattering over ``p``."""
    m1, m2 = p.m
    c = full_lattice(_as_interval_x(x))
    P1, P2 = np.meshgrid(np.arange(-(m1 - 1), m1), np.arange(-(m2 - 1), m2), indexing="ij")
    h = _up(c.mag() * _weights(P1, P2, p).hi)
    best = 0.0
    for (a1, b1), (a2, b2) in _calB_pieces(p):
        # inverse mu on every s = p + q reachable from this piece
        s1 = np.arange(a1 - (m1 - 1), b1 + m1 - 1)
        s2 = np.arange(a2 - (m2 - 1), b2 + m2 - 1)
        G1, G2 = np.meshgrid(s1, s2, indexing="ij")
        G = _inv_mu_checked(G1, G2, p).hi
        acc = np.zeros((b1 - a1, b2 - a2))
        q1 = np.arange(a1, b1)
        for i, j in np.argwhere(h > 0):
            p1, p2 = int(P1[i, j]), int(P2[i, j])
            o1 = a1 + p1 - s1[0]
            o2 = a2 + p2 - s2[0]
            term = _up(h[i, j] * G[o1 : o1 + acc.shape[0], o2 : o2 + acc.shape[1]])
            if p1 < 0:
                # the line s1 = 0 is reached from two sign choices of q
                dbl = q1 == -p1
                if dbl.any():
                    term = term.copy()
                    term[dbl, :] = _up(2.0 * term[dbl, :])
            acc = _up(acc + term)
        best = max(best, float(acc.max()))
    return float(_up(2.0 * best))


def curly_B(x: SymCoeffs, p: Params, q: tuple[int, int]) -> float:
    """Float value of the far-column bound at a single ``q`` (reference implementation).

    ``2 sum_p w(p, q) |c_p| nu^|p| / mu_{p+q}`` over ``p`` in the signed
    support of ``c(xbar)`` including the origin; ``w = 0`` when
    ``p2 + q2 = 0``, ``w = 2`` when ``q1 > 0`` and ``p1 = -q1``, else 1.
    """
    m1, m2 = p.m
    c = full_lattice(x if not x.is_interval else SymCoeffs(float(x.c00.mid) if isinstance(x.c00, Interval) else x.c00, x.data.mid))
    a = (p.L / (2 * math.pi)) ** 2
    b = 4 * math.pi**2 * p.lam
    total = 0.0
    for i in range(2 * m1 - 1):
        for j in range(2 * m2 - 1):
            p1, p2 = i - (m1 - 1), j - (m2 - 1)
            v = c[i, j]
            if v == 0.0 or p2 + q[1] == 0:
                continue
            s1, s2 = p1 + q[0], p2 + q[1]
            mu = a * s1 * s1 / (s2 * s2) + b * s2 * s2 - 1.0
            w = 2.0 if (q[0] > 0 and p1 == -q[0]) else 1.0
            total += w * abs(v) * p.nu ** (abs(p1) + abs(p2)) / mu
    return 2.0 * total


def bound_Z1(x: SymCoeffs, A: TailOperator, p: Params, chunk_budget: int = 1_500_000, parts: dict | None = None) -> Interval:
    """Upper bound of ``||A Gamma||``: max of the three column families."""
    xi = _as_interval_x(x)
    m1, m2 = p.m
    table = _lookup_table(xi, (4 * m1, 4 * m2))
    b1 = _z1_case_inner(xi, table, A, p, chunk_budget)
    b2 = _z1_case_ring(xi, table, A, p, chunk_budget)
    b3 = _z1_far(xi, p)
    if parts is not None:
        parts.update(B1=b1, B2=b2, B3=b3)
    return Interval(0.0, max(b1, b2, b3))


def bound_Z2(A: TailOperator, p: Params) -> Interval:
    """``32 max(||A^(m)||, max_{R_1} 1/mu)``."""
    F = IndexSets(p.m).F()
    nA = op_norm(A.block, p.nu, F, F)
    tail = ring1_inv_mu_max(p).hi
    return Interval(0.0, float(_up(32.0 * max(nA, tail))))


# ---------------------------------------------------------------------------
# Radii polynomial
# ---------------------------------------------------------------------------


@dataclass
class BoundSet:
    Y: Interval
    Z0: Interval
    Z1: Interval
    Z2: Interval

    def as_dict(self) -> dict:
        return {"Y": self.Y, "Z0": self.Z0, "Z1": self.Z1, "Z2": self.Z2}


@dataclass
class RadiusResult:
    r_min: Interval
    r_max: Interval | None
    r_star: float


def eval_radii_polynomial(b: BoundSet, r: float) -> Interval:
    """Enclosure of ``p(r) = Y + (Z0 + Z1 - 1) r + Z2 r^2`` using the upper endpoints."""
    ri = Interval.point(r)
    lin = Interval.point(b.Z0.hi) + Interval.point(b.Z1.hi) - 1.0
    return Interval.point(b.Y.hi) + lin * ri + Interval.point(b.Z2.hi) * ri * ri


def radii_polynomial(b: BoundSet, delta: float = R_STAR_DELTA, max_bisect: int = 200) -> RadiusResult:
    """Find a validated ``r_star`` with ``p(r_star) < 0``.

    Raises NoNegativeRadius if ``Z0 + Z1 >= 1`` or the discriminant is not
    provably positive.
    """
    y = Interval.point(b.Y.hi)
    z2 = Interval.point(b.Z2.hi)
    lin = Interval.point(b.Z0.hi) + Interval.point(b.Z1.hi) - 1.0
    if not lin.hi < 0:
        raise NoNegativeRadius(f"Z0 + Z1 = {lin.hi + 1.0:.6g} is not below 1")
    neg = -lin
    if z2.hi == 0.0:
        r_min = y / neg
        r_max = None
        vertex = math.inf
    else:
        disc = lin * lin - 4.0 * z2 * y
        if not disc.lo > 0:
            raise NoNegativeRadius("discriminant of the radii polynomial is not provably positive")
        root = disc.sqrt()
        # stable forms: no cancellation for tiny Y
        r_min = (2.0 * y) / (neg + root)
        r_max = (neg + root) / (2.0 * z2)
        vertex = (neg / (2.0 * z2)).mid
    # a subnormal r_min has no room for the relative margin; start at the smallest normal
    r = max(r_min.hi * (1.0 + delta), _TINY)
    if r_max is not None and r >= r_max.lo:
        r = 0.5 * (r_min.hi + min(vertex, r_max.lo))
    for _ in range(max_bisect):
        if eval_radii_polynomial(b, r).hi < 0:
            return RadiusResult(r_min, r_max, float(r))
        if not math.isfinite(vertex) or r >= vertex:
            break
        r = 0.5 * (r + vertex)
    raise NoNegativeRadius("no radius with provably negative p(r) found")


def error_bounds(r_star: float) -> tuple[float, float]:
    """C0 and L2 error bounds ``4 r`` (upper)."""
    v = float(_up(4.0 * r_star)) if r_star > 0 else 0.0
    return v, v


# ---------------------------------------------------------------------------
# Pipeline and certificate files
# ---------------------------------------------------------------------------


@dataclass
class Certificate:
    params: Params
    solution_sha256: str | None
    bounds: BoundSet
    radius: RadiusResult
    c0_error: float
    l2_error: float
    wall_time: float
    config: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    @property
    def r_star(self) -> float:
        return self.radius.r_star


def prove(x: SymCoeffs, p: Params, solution_sha256: str | None = None, config: dict | None = None, log=None) -> Certificate:
    """Run the full validation; raises PreconditionFailed, MuSignError or NoNegativeRadius."""
    t0 = time.perf_counter()
    timings = {}

    def lap(name, t):
        timings[name] = round(time.perf_counter() - t, 3)
        if log is not None:
            log(f"{name}: {timings[name]:.2f}s")

    if tuple(x.m) != tuple(p.m):
        raise ValueError(f"solution truncation {x.m} does not match params {p.m}")
    if not check_cond_m(p):
        raise PreconditionFailed(f"truncation condition fails for m={p.m}, lambda={p.lam}, L={p.L}")
    t = time.perf_counter()
    A, Adag = build_operators(x, p)
    lap("operators", t)
    xi = x.to_interval()
    t = time.perf_counter()
    Y = bound_Y(xi, A, p)
    lap("Y", t)
    t = time.perf_counter()
    Z0 = bound_Z0(A, Adag, p)
    lap("Z0", t)
    if not verify_A_injective(A, Z0, p):
        raise PreconditionFailed(f"injectivity check failed (Z0 <= {Z0.hi:.3e})")
    t = time.perf_counter()
    parts = {}
    Z1 = bound_Z1(xi, A, p, parts=parts)
    lap("Z1", t)
    t = time.perf_counter()
    Z2 = bound_Z2(A, p)
    lap("Z2", t)
    bounds = BoundSet(Y, Z0, Z1, Z2)
    rad = radii_polynomial(bounds)
    c0, l2 = error_bounds(rad.r_star)
    return Certificate(
        params=p,
        solution_sha256=solution_sha256,
        bounds=bounds,
        radius=rad,
        c0_error=c0,
        l2_error=l2,
        wall_time=round(time.perf_counter() - t0, 3),
        config=dict(config or {}),
        timings=timings,
        details={"Z1_parts": parts},
    )


def _dec(v: float, upward: bool) -> str:
    """Decimal string that is an outward rounding of ``v``."""
    if math.isinf(v) or v == 0.0:
        return repr(v)
    s = repr(v)
    exact = Fraction(v)
    if upward and Fraction(s) < exact:
        s = repr(float(np.nextafter(v, np.inf)))
    elif not upward and Fraction(s) > exact:
        s = repr(float(np.nextafter(v, -np.inf)))
    return s


def _ival_doc(i: Interval | None):
    if i is None:
        return None
    return [_dec(i.lo, False), _dec(i.hi, True)]


def certificate_doc(cert: Certificate) -> dict:
    p = cert.params
    return {
        "format": CERT_FORMAT,
        "params": {"lambda": p.lam, "L": p.L, "nu": p.nu, "m1": p.m[0], "m2": p.m[1]},
        "solution_sha256": cert.solution_sha256,
        "bounds": {k: _ival_doc(v) for k, v in cert.bounds.as_dict().items()},
        "r_min": _ival_doc(cert.radius.r_min),
        "r_max": _ival_doc(cert.radius.r_max),
        "r_star": _dec(cert.r_star, True),
        "c0_error": _dec(cert.c0_error, True),
        "l2_error": _dec(cert.l2_error, True),
        "checks": {"cond_m": True, "A_injective": True, "p_r_star_negative": True},
        "wall_time": cert.wall_time,
        "timings": cert.timings,
        "details": cert.details,
        "config": cert.config,
    }


def write_certificate(path: str | Path, cert: Certificate) -> None:
    Path(path).write_text(json.dumps(certificate_doc(cert), indent=1, sort_keys=False) + "\n")


def read_certificate(path: str | Path) -> dict:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != CERT_FORMAT:
        raise ValueError(f"not a certificate file: format={doc.get('format')!r}")
    return doc


def verify_certificate(doc: dict, solution_path: str | Path | None = None, recompute: bool = False) -> list[str]:
    """Re-check a certificate; returns a list of problems (empty means valid).

    The radii polynomial is evaluated at ``r_star`` in exact rational
    arithmetic from the recorded decimal upper endpoints. With ``recompute``
    the bounds are rebuilt from the solution file and must not exceed the
    recorded ones.
    """
    problems = []
    b = {k: Fraction(v[1]) for k, v in doc["bounds"].items()}
    r = Fraction(doc["r_star"])
    if r <= 0:
        problems.append("r_star is not positive")
    val = b["Y"] + (b["Z0"] + b["Z1"] - 1) * r + b["Z2"] * r * r
    if not val < 0:
        problems.append(f"p(r_star) = {float(val):.3e} is not negative")
    for key in ("c0_error", "l2_error"):
        if Fraction(doc[key]) < 4 * r:
            problems.append(f"{key} is smaller than 4 r_star")
    pr = doc["params"]
    p = Params(lam=pr["lambda"], L=pr["L"], nu=pr["nu"], m=(pr["m1"], pr["m2"]))
    if not check_cond_m(p):
        problems.append("truncation condition fails")
    if solution_path is not None:
        digest = solution_digest(solution_path)
        if digest != doc.get("solution_sha256"):
            problems.append("solution file hash does not match")
        if recompute and not problems:
            from .space import read_solution

            x, ps = read_solution(solution_path)
            if ps.m != p.m:
                x = x.resized(p.m)
            cert = prove(x, p)
            for k, v in cert.bounds.as_dict().items():
                if Fraction(_dec(v.hi, True)) > b[k]:
                    problems.append(f"recomputed {k} exceeds recorded value")
    return problems
