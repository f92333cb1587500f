"""The zero-finding map ``f(x) = 0`` for even/even periodic orbits.

For ``k`` in ``Z2+``::

    f_k(x) = mu_k x_k - (c(x) * c(x))_k
    mu_k   = (L^2 / 4 pi^2) k1^2 / k2^2 + 4 pi^2 lam k2^2 - 1

with ``c(x) = c00 + sym(x)``. Every routine works on float data and, for
certification, on interval data.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .interval import DomainError, Interval, IntervalArray, pi_interval
from .space import Params, SymCoeffs, conv_full, conv_square, conv_triple, full_lattice

__all__ = [
    "lambda_enclosure",
    "L_enclosure",
    "mu",
    "mu_grid",
    "residual",
    "coupling",
    "jacobian_entry",
    "jacobian_block",
    "energy",
    "energy_lines",
    "energy_gradient",
]

_TWO_PI = 2.0 * math.pi


def _decimal_hull(v: float) -> Interval:
    """Hull of a float and the real number written by its shortest repr."""
    return Interval.point(v).hull(Interval.from_decimal(Fraction(repr(v))))


def lambda_enclosure(p: Params) -> Interval:
    """Enclosure of lambda covering both the float and its decimal reading."""
    return _decimal_hull(p.lam)


def L_enclosure(p: Params) -> Interval:
    """Enclosure of L. The binary64 value nearest 2 pi is read as 2 pi."""
    enc = _decimal_hull(p.L)
    if p.L == _TWO_PI:
        enc = enc.hull(2 * pi_interval())
    return enc


def _mu_consts(p: Params, interval: bool):
    if interval:
        pi = pi_interval()
        four_pi2 = 4 * pi * pi
        a = L_enclosure(p).pow_int(2) / four_pi2
        b = four_pi2 * lambda_enclosure(p)
        return a, b
    a = (p.L / _TWO_PI) ** 2
    b = 4.0 * math.pi**2 * p.lam
    return a, b


def mu(k: tuple[int, int], p: Params, interval: bool = False):
    """Linear symbol ``mu_k``; raises DomainError for ``k2 = 0``."""
    k1, k2 = int(k[0]), int(k[1])
    if k2 == 0:
        raise DomainError("mu_k is undefined for k2 = 0")
    a, b = _mu_consts(p, interval)
    if interval:
        return a * Interval.point(k1 * k1) / Interval.point(k2 * k2) + b * Interval.point(k2 * k2) - 1.0
    return a * (k1 * k1) / (k2 * k2) + b * (k2 * k2) - 1.0


def mu_grid(shape: tuple[int, int], p: Params, interval: bool = False, k1_start: int = 0, k2_start: int = 0):
    """``mu_k`` on a rectangular block of indices.

    Entries with ``k2 = 0`` are set to +inf for floats and [0, 0] for
    intervals; callers only read ``k2 != 0``.
    """
    k1, k2 = np.meshgrid(
        np.arange(k1_start, k1_start + shape[0], dtype=float),
        np.arange(k2_start, k2_start + shape[1], dtype=float),
        indexing="ij",
    )
    return mu_at(k1, k2, p, interval)


def mu_at(k1: np.ndarray, k2: np.ndarray, p: Params, interval: bool = False):
    """``mu`` at arbitrary (broadcast) index arrays; ``k2 = 0`` handled as in mu_grid."""
    k1 = np.asarray(k1, dtype=float)
    k2 = np.asarray(k2, dtype=float)
    k1, k2 = np.broadcast_arrays(k1, k2)
    zero = k2 == 0
    k2s = np.where(zero, 1.0, k2)
    a, b = _mu_consts(p, interval)
    if interval:
        ratio = IntervalArray.point(k1 * k1) / IntervalArray.point(k2s * k2s)
        out = ratio * a + IntervalArray.point(k2s * k2s) * b - 1.0
        out.lo[zero] = 0.0
        out.hi[zero] = 0.0
        return out
    out = a * (k1 * k1) / (k2s * k2s) + b * (k2s * k2s) - 1.0
    return np.where(zero, np.inf, out)


def residual(x: SymCoeffs, p: Params):
    """``f_k(x)`` for ``k`` in ``F_{2m-1}`` as a ``(2m1-1, 2m2-1)`` array.

    Column ``k2 = 0`` is zero (no equation there). Outside ``F_{2m-1}`` the
    residual vanishes identically and is never formed.
    """
    cc = conv_square(x)
    shape = cc.shape
    interval = x.is_interval
    mus = mu_grid(shape, p, interval=interval)
    m1, m2 = x.m
    if interval:
        xpad = IntervalArray.zeros(shape)
        xpad[:m1, :m2] = x.data
        f = xpad * mus - cc
        f[:, 0] = 0.0
        return f
    xpad = np.zeros(shape)
    xpad[:m1, :m2] = x.data
    mus = np.where(np.isinf(mus), 0.0, mus)
    f = mus * xpad - cc
    f[:, 0] = 0.0
    return f


def _lookup_table(x: SymCoeffs, reach: tuple[int, int]):
    """Centred table of ``c(x)`` padded with zeros to index range ``|k_i| <= reach_i``."""
    c = full_lattice(x)
    m1, m2 = x.m
    r1, r2 = max(reach[0], m1 - 1), max(reach[1], m2 - 1)
    shape = (2 * r1 + 1, 2 * r2 + 1)
    s1 = slice(r1 - (m1 - 1), r1 + m1)
    s2 = slice(r2 - (m2 - 1), r2 + m2)
    if isinstance(c, IntervalArray):
        t = IntervalArray.zeros(shape)
        t[s1, s2] = c
    else:
        t = np.zeros(shape)
        t[s1, s2] = c
    return t, (r1, r2)


def _gather(table, center, i1, i2):
    i1 = np.asarray(i1)
    i2 = np.asarray(i2)
    ok = (np.abs(i1) <= center[0]) & (np.abs(i2) <= center[1])
    ncol = 2 * center[1] + 1
    # out-of-range indices read a zero sentinel appended after the table
    sentinel = (2 * center[0] + 1) * ncol
    flat = np.where(ok, (i1 + center[0]) * ncol + (i2 + center[1]), sentinel)
    if isinstance(table, IntervalArray):
        lo = np.append(table.lo.ravel(), 0.0)
        hi = np.append(table.hi.ravel(), 0.0)
        return IntervalArray(np.take(lo, flat), np.take(hi, flat), check=False)
    return np.take(np.append(np.asarray(table).ravel(), 0.0), flat)


def coupling(x: SymCoeffs, k1, k2, j1, j2, table=None):
    """``C_{k,j}(x)`` at broadcast index arrays (``j`` in ``Z2+``).

    ``C = c_{k-j} + c_{k+j}`` plus, when ``j1 > 0``,
    ``c_{k-(j1,-j2)} + c_{k+(j1,-j2)}``, read from ``c(x)`` so the origin
    carries ``c00``.
    """
    k1, k2, j1, j2 = (np.asarray(v, dtype=int) for v in (k1, k2, j1, j2))
    if table is None:
        reach = (
            int(np.max(np.abs(k1)) + np.max(np.abs(j1))),
            int(np.max(np.abs(k2)) + np.max(np.abs(j2))),
        )
        table, center = _lookup_table(x, reach)
    else:
        table, center = table
    out = _gather(table, center, k1 - j1, k2 - j2) + _gather(table, center, k1 + j1, k2 + j2)
    extra = _gather(table, center, k1 - j1, k2 + j2) + _gather(table, center, k1 + j1, k2 - j2)
    mask = np.broadcast_to(j1 > 0, np.broadcast_shapes(k1.shape, j1.shape, k2.shape, j2.shape))
    if isinstance(out, IntervalArray):
        extra.lo = np.where(mask, extra.lo, 0.0)
        extra.hi = np.where(mask, extra.hi, 0.0)
    else:
        extra = np.where(mask, extra, 0.0)
    return out + extra


def jacobian_entry(x: SymCoeffs, p: Params, k: tuple[int, int], j: tuple[int, int]):
    """``d f_k / d x_j = mu_k delta_{kj} - 2 C_{k,j}(x)``."""
    c = coupling(x, k[0], k[1], j[0], j[1])
    c = c[()] if not isinstance(c, IntervalArray) else c[()]
    val = -2.0 * c
    if tuple(k) == tuple(j):
        val = val + mu(k, p, interval=x.is_interval)
    return val if not isinstance(val, np.ndarray) else float(val)


def jacobian_block(x: SymCoeffs, p: Params):
    """Dense Jacobian of ``f`` restricted to ``F_m x F_m`` (flat lexicographic order)."""
    m1, m2 = x.m
    k1 = np.arange(m1).reshape(m1, 1, 1, 1)
    k2 = np.arange(1, m2).reshape(1, m2 - 1, 1, 1)
    j1 = np.arange(m1).reshape(1, 1, m1, 1)
    j2 = np.arange(1, m2).reshape(1, 1, 1, m2 - 1)
    table = _lookup_table(x, (2 * (m1 - 1), 2 * (m2 - 1)))
    C = coupling(x, k1, k2, j1, j2, table=table)
    n = m1 * (m2 - 1)
    interval = x.is_interval
    mus = mu_grid((m1, m2 - 1), p, interval=interval, k2_start=1)
    if interval:
        J = C.reshape(n, n) * -2.0
        d = np.arange(n)
        diag = J[d, d] + mus.reshape(n)
        J.lo[d, d] = diag.lo
        J.hi[d, d] = diag.hi
        return J
    J = -2.0 * C.reshape(n, n)
    J[np.diag_indices(n)] += mus.reshape(n)
    return J


def energy(x: SymCoeffs, p: Params):
    """Conserved energy of the orbit evaluated through lattice convolutions.

    ``E = sum_{k2 = 0} [2 lam pi^2 (alpha*alpha)_k + (c*c)_k / 2 + (c*c*c)_k / 3]``
    with ``alpha_k = k2 c_k``, summed over all signed ``k1``.
    """
    c = full_lattice(x)
    m1, m2 = x.m
    k2 = np.arange(-(m2 - 1), m2, dtype=float)[None, :]
    interval = x.is_interval
    if interval:
        alpha = c * IntervalArray.point(np.broadcast_to(k2, c.shape))
    else:
        alpha = c * k2
    aa = conv_full(alpha, alpha, out_shape=(2 * m1 - 1, 1))[:, 0]
    cc = conv_square(x)[:, 0]
    ccc = conv_triple(x)
    if interval:
        pi = pi_interval()
        coef = 2 * pi * pi * lambda_enclosure(p)
        line = lambda v: v[0] + v[1:].sum() * 2.0 if len(v) > 1 else v[0]
        third = Interval(1.0, 1.0) / 3.0
        return coef * line(aa) + line(cc) * 0.5 + line(ccc) * third
    line = lambda v: float(v[0] + 2.0 * np.sum(v[1:]))
    return 2.0 * p.lam * math.pi**2 * line(aa) + 0.5 * line(cc) + line(ccc) / 3.0


def _line_sums(x: SymCoeffs) -> np.ndarray:
    """``U_n = sum_{k1 in Z} c_{(k1, n)}`` for ``n = -(m2-1) .. m2-1``."""
    d = np.asarray(x.data, dtype=float)
    half = d[0, :] + 2.0 * d[1:, :].sum(axis=0)
    half[0] = float(x.c00)
    return np.concatenate([half[:0:-1], half])


def energy_lines(x: SymCoeffs, p: Params) -> float:
    """Energy from the y-profile at ``t = 0`` (float only).

    ``E = sum_n (1/2 - 2 lam pi^2 n^2) U_n^2 + (1/3) sum_n U_n (U*U)_{-n}``.
    """
    U = _line_sums(x)
    n = np.arange(-(len(U) // 2), len(U) // 2 + 1, dtype=float)
    quad = np.sum((0.5 - 2.0 * p.lam * math.pi**2 * n * n) * U * U)
    UU = np.convolve(U, U)[len(U) // 2 : len(U) // 2 + len(U)]
    return float(quad + np.sum(U * UU[::-1]) / 3.0)


def energy_gradient(x: SymCoeffs, p: Params) -> tuple[float, np.ndarray]:
    """``(dE/dc00, dE/dx)`` with ``dE/dx`` flattened over ``F_m``."""
    U = _line_sums(x)
    h = len(U) // 2
    n = np.arange(-h, h + 1, dtype=float)
    UU = np.convolve(U, U)[h : h + len(U)]
    g = (1.0 - 4.0 * p.lam * math.pi**2 * n * n) * U + UU
    m1, m2 = x.m
    mult = np.where(np.arange(m1) == 0, 1.0, 2.0)[:, None]
    grad = 2.0 * mult * g[h + 1 : h + m2][None, :]
    return float(g[h]), np.broadcast_to(grad, (m1, m2 - 1)).ravel().copy()
