"""Symmetry-reduced Fourier sequence space.

Coefficients live on the quarter lattice ``Z2+ = {k1 >= 0, k2 > 0}``. The
even/even symmetry ``c[+-k1, +-k2] = c[k1, k2]`` is never stored; it is
recovered by :func:`full_lattice`, which unfolds a quarter array into the
signed lattice with the mean mode ``c00`` at the origin and zeros on the
line ``k2 = 0``.

Storage is dense: a :class:`SymCoeffs` of truncation ``m = (m1, m2)`` holds
an ``(m1, m2)`` array indexed ``[k1, k2]`` whose column ``k2 = 0`` is kept
at zero. Arrays are either float ``ndarray`` or :class:`IntervalArray`; all
routines here accept both.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .interval import Interval, IntervalArray, matvec_upper_nonneg, pow_int_array, sum_upper

__all__ = [
    "Params",
    "IndexSets",
    "SymCoeffs",
    "full_lattice",
    "sym_value",
    "norm_nu",
    "norm_nu_full",
    "conv_square",
    "conv_full",
    "conv_triple",
    "weights",
    "op_norm",
    "read_solution",
    "write_solution",
    "solution_digest",
    "evaluate_field",
]


@dataclass(frozen=True)
class Params:
    """Problem and proof parameters: dispersion ``lam``, frequency ``L``, decay ``nu``, truncation ``m``."""

    lam: float
    L: float
    nu: float
    m: tuple[int, int]

    def __post_init__(self) -> None:
        m = tuple(int(v) for v in self.m)
        if len(m) != 2 or min(m) < 1:
            raise ValueError(f"truncation m must be two positive integers, got {self.m!r}")
        object.__setattr__(self, "m", m)
        for name in ("lam", "L", "nu"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if not self.L > 0:
            raise ValueError("L must be positive")
        if not self.nu > 1:
            raise ValueError("nu must exceed 1")

    def with_(self, **changes) -> Params:
        vals = dict(lam=self.lam, L=self.L, nu=self.nu, m=self.m)
        vals.update(changes)
        return Params(**vals)


@dataclass(frozen=True)
class IndexSets:
    """Finite index sets attached to a truncation ``m``.

    ``F(n)`` is the quarter-lattice box ``{k1 < n*m1, 0 < k2 < n*m2}`` and
    ``ring(n) = F(n+1) minus F(n)``. Flat ordering is lexicographic in
    ``(k1, k2)``.
    """

    m: tuple[int, int]

    def F(self, n: int = 1) -> np.ndarray:
        m1, m2 = self.m
        k1, k2 = np.meshgrid(np.arange(n * m1), np.arange(1, n * m2), indexing="ij")
        return np.stack([k1.ravel(), k2.ravel()], axis=1)

    def in_F(self, k: np.ndarray, n: int = 1) -> np.ndarray:
        k = np.asarray(k)
        return (k[..., 0] < n * self.m[0]) & (k[..., 1] < n * self.m[1]) & (k[..., 1] > 0) & (k[..., 0] >= 0)

    def ring(self, n: int) -> np.ndarray:
        """Indices of ``F((n+1) m) minus F(n m)``."""
        k = self.F(n + 1)
        return k[~self.in_F(k, n)] if n > 0 else k

    def F_pm(self) -> np.ndarray:
        """Signed box ``{|k1| < m1, 0 < |k2| < m2}``."""
        m1, m2 = self.m
        k1, k2 = np.meshgrid(np.arange(-m1 + 1, m1), np.arange(-m2 + 1, m2), indexing="ij")
        k = np.stack([k1.ravel(), k2.ravel()], axis=1)
        return k[k[:, 1] != 0]

    @property
    def size(self) -> int:
        return self.m[0] * (self.m[1] - 1)

    def flat(self, k1, k2):
        """Position of ``(k1, k2)`` in the flat ordering of ``F_m``."""
        return np.asarray(k1) * (self.m[1] - 1) + (np.asarray(k2) - 1)

    def keys(self) -> Iterator[tuple[int, int]]:
        m1, m2 = self.m
        for k1 in range(m1):
            for k2 in range(1, m2):
                yield (k1, k2)


def _is_interval(a) -> bool:
    return isinstance(a, (IntervalArray, Interval))


@dataclass
class SymCoeffs:
    """A candidate orbit: mean mode ``c00`` plus quarter-lattice data on ``F_m``."""

    c00: float | Interval
    data: np.ndarray | IntervalArray
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not _is_interval(self.data):
            self.data = np.array(self.data, dtype=float)
            if self.data.ndim != 2:
                raise ValueError("coefficient data must be 2-d")
            self.data[:, 0] = 0.0
        else:
            self.data[:, 0] = 0.0
        if self.m[1] < 2:
            raise ValueError("m2 must be at least 2")

    @classmethod
    def zeros(cls, m: tuple[int, int], c00: float = 0.0) -> SymCoeffs:
        return cls(float(c00), np.zeros(m))

    @classmethod
    def from_dict(cls, m: tuple[int, int], entries: dict, c00: float = 0.0) -> SymCoeffs:
        x = cls.zeros(m, c00)
        for (k1, k2), v in entries.items():
            if not (0 <= k1 < m[0] and 0 < k2 < m[1]):
                raise IndexError(f"index {(k1, k2)} outside F_m for m={m}")
            x.data[k1, k2] = v
        return x

    @property
    def m(self) -> tuple[int, int]:
        return tuple(self.data.shape)

    @property
    def is_interval(self) -> bool:
        return _is_interval(self.data)

    def vector(self) -> np.ndarray:
        """Flat vector over ``F_m`` (float kind only)."""
        return self.data[:, 1:].ravel().copy()

    @classmethod
    def from_vector(cls, m: tuple[int, int], vec: np.ndarray, c00: float) -> SymCoeffs:
        data = np.zeros(m)
        data[:, 1:] = np.asarray(vec, dtype=float).reshape(m[0], m[1] - 1)
        return cls(float(c00), data)

    def resized(self, m: tuple[int, int]) -> SymCoeffs:
        """Zero-pad or truncate to a new ``m``."""
        if self.is_interval:
            raise TypeError("resize float coefficients only")
        out = np.zeros(m)
        a, b = min(m[0], self.m[0]), min(m[1], self.m[1])
        out[:a, :b] = self.data[:a, :b]
        return SymCoeffs(self.c00, out, dict(self.meta))

    def to_interval(self) -> SymCoeffs:
        if self.is_interval:
            return self
        return SymCoeffs(Interval.point(self.c00), IntervalArray.point(self.data), dict(self.meta))

    def copy(self) -> SymCoeffs:
        return SymCoeffs(self.c00, self.data.copy(), dict(self.meta))


def full_lattice(x: SymCoeffs, include_c00: bool = True):
    """Signed-lattice array of ``c(x) = c00 + sym(x)``.

    Shape ``(2 m1 - 1, 2 m2 - 1)``; entry ``[m1-1+k1, m2-1+k2]`` is the value
    at ``(k1, k2)``.
    """
    q = x.data
    if x.is_interval:
        lo = _unfold(q.lo)
        hi = _unfold(q.hi)
        m1, m2 = x.m
        c = Interval.coerce(x.c00) if include_c00 else Interval(0.0, 0.0)
        lo[m1 - 1, m2 - 1] = c.lo
        hi[m1 - 1, m2 - 1] = c.hi
        return IntervalArray(lo, hi, check=False)
    out = _unfold(np.asarray(q, dtype=float))
    out[x.m[0] - 1, x.m[1] - 1] = float(x.c00) if include_c00 else 0.0
    return out


def _unfold(q: np.ndarray) -> np.ndarray:
    q = q.copy()
    q[:, 0] = 0.0
    top = np.concatenate([q[:0:-1, :], q], axis=0)
    return np.concatenate([top[:, :0:-1], top], axis=1)


def sym_value(x: SymCoeffs, k1: int, k2: int, include_c00: bool = False):
    """Value of ``sym(x)`` (or ``c(x)`` with ``include_c00``) at a signed index."""
    if k2 == 0:
        if k1 == 0 and include_c00:
            return x.c00
        return 0.0
    a, b = abs(k1), abs(k2)
    if a >= x.m[0] or b >= x.m[1]:
        return 0.0
    return x.data[a, b]


def weights(shape: tuple[int, int], nu: float, k2_start: int = 0, interval: bool = False):
    """``nu**(k1 + k2)`` over a quarter-lattice block starting at ``k2 = k2_start``."""
    k1, k2 = np.meshgrid(np.arange(shape[0]), np.arange(k2_start, k2_start + shape[1]), indexing="ij")
    if interval:
        return pow_int_array(Interval.coerce(nu), k1 + k2)
    return float(nu) ** (k1 + k2).astype(float)


def norm_nu(x: SymCoeffs, nu: float):
    """Weighted l1 norm over ``Z2+`` (``c00`` excluded).

    Returns a float for float data and an :class:`Interval` enclosure for
    interval data.
    """
    if x.is_interval:
        w = weights(x.m, nu, interval=True)
        mag = abs(x.data) * w
        return mag.sum()
    w = weights(x.m, nu)
    return float(np.sum(np.abs(x.data) * w))


def norm_nu_full(arr: np.ndarray, nu: float, center: tuple[int, int]) -> float:
    """Weighted l1 norm of a signed-lattice array, summed over all of ``Z^2``."""
    i, j = np.indices(arr.shape)
    k = np.abs(i - center[0]) + np.abs(j - center[1])
    return float(np.sum(np.abs(arr) * float(nu) ** k))


def _zeros_like_kind(a, shape):
    if isinstance(a, IntervalArray):
        return IntervalArray.zeros(shape)
    return np.zeros(shape)


def conv_full(a, b, out_shape: tuple[int, int] | None = None, out_offset=(0, 0)):
    """Direct-summation convolution of two centred signed-lattice arrays.

    ``a`` has shape ``(2 p1 + 1, 2 p2 + 1)`` centred at ``(p1, p2)``, same for
    ``b``. The result is returned on the block of indices
    ``k = out_offset + [0, out_shape)``; by default the nonnegative quadrant
    of the full support. Sources that are exactly zero are skipped.
    """
    pa = ((a.shape[0] - 1) // 2, (a.shape[1] - 1) // 2)
    pb = ((b.shape[0] - 1) // 2, (b.shape[1] - 1) // 2)
    if out_shape is None:
        out_shape = (pa[0] + pb[0] + 1, pa[1] + pb[1] + 1)
    o1, o2 = out_offset
    out = _zeros_like_kind(a if isinstance(a, IntervalArray) else b, out_shape)
    if isinstance(a, IntervalArray):
        nz = np.argwhere((a.lo != 0) | (a.hi != 0))
    else:
        nz = np.argwhere(np.asarray(a) != 0)
    for i, j in nz:
        j1, j2 = i - pa[0], j - pa[1]
        v = a[i, j]
        # output k with k - j inside b's support and inside the requested block
        lo1 = max(o1, j1 - pb[0])
        hi1 = min(o1 + out_shape[0] - 1, j1 + pb[0])
        lo2 = max(o2, j2 - pb[1])
        hi2 = min(o2 + out_shape[1] - 1, j2 + pb[1])
        if lo1 > hi1 or lo2 > hi2:
            continue
        src = b[lo1 - j1 + pb[0] : hi1 - j1 + pb[0] + 1, lo2 - j2 + pb[1] : hi2 - j2 + pb[1] + 1]
        blk = (slice(lo1 - o1, hi1 - o1 + 1), slice(lo2 - o2, hi2 - o2 + 1))
        if isinstance(out, IntervalArray):
            out[blk] = out[blk] + src * v
        else:
            out[blk] += v * src
    return out


def conv_square(x: SymCoeffs):
    """``(c(x) * c(x))_k`` for ``0 <= k1 <= 2 m1 - 2``, ``0 <= k2 <= 2 m2 - 2``.

    The returned quarter array includes the ``k2 = 0`` column and the origin.
    By symmetry of ``c(x)`` these entries determine the full convolution.
    """
    c = full_lattice(x)
    return conv_full(c, c)


def conv_triple(x: SymCoeffs):
    """``(c*c*c)_{(k1, 0)}`` for ``k1 = 0 .. 3 (m1 - 1)``."""
    c = full_lattice(x)
    m1, m2 = x.m
    cc_quarter = conv_full(c, c)
    cc = _unfold_with_axis(cc_quarter)
    n1 = 3 * (m1 - 1) + 1
    out = conv_full(cc, c, out_shape=(n1, 1), out_offset=(0, 0))
    return out[:, 0]


def _unfold_with_axis(q):
    """Unfold a symmetric quarter array that includes its ``k2 = 0`` column."""
    if isinstance(q, IntervalArray):
        return IntervalArray(_unfold_keep(q.lo), _unfold_keep(q.hi), check=False)
    return _unfold_keep(q)


def _unfold_keep(q: np.ndarray) -> np.ndarray:
    top = np.concatenate([q[:0:-1, :], q], axis=0)
    return np.concatenate([top[:, :0:-1], top], axis=1)


def op_norm(block, nu: float, rows: np.ndarray, cols: np.ndarray, tail_values: Sequence[float] = ()) -> float:
    """Weighted operator norm ``sup_j nu^-|j| sum_k |L_kj| nu^|k|``.

    ``block`` is the matrix on ``rows x cols`` (index arrays of shape
    ``(n, 2)``). ``tail_values`` are magnitudes of the diagonal entries
    outside the block, already reduced by the caller to a finite set. For an
    :class:`IntervalArray` block the result is a rigorous upper bound.
    """
    rows = np.asarray(rows)
    cols = np.asarray(cols)
    if isinstance(block, IntervalArray):
        nu_i = Interval.coerce(nu)
        wk = pow_int_array(nu_i, rows.sum(axis=1)).hi
        wj = pow_int_array(nu_i, cols.sum(axis=1)).lo
        colsum = matvec_upper_nonneg(wk, block.mag())
        q = np.nextafter(colsum / wj, np.inf)
        best = float(q.max()) if q.size else 0.0
    else:
        wk = float(nu) ** rows.sum(axis=1).astype(float)
        wj = float(nu) ** cols.sum(axis=1).astype(float)
        colsum = wk @ np.abs(np.asarray(block, dtype=float))
        best = float(np.max(colsum / wj)) if colsum.size else 0.0
    for t in tail_values:
        best = max(best, float(t))
    return best


def evaluate_field(x: SymCoeffs, p: Params, t: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``u(t, y)`` on the tensor grid ``t x y`` from the real cosine expansion.

    Each quarter-lattice mode stands for its symmetric copies, so a mode
    with ``k1 > 0`` contributes ``4 x_k cos(L k1 t) cos(2 pi k2 y)`` and a
    mode with ``k1 = 0`` contributes ``2 x_k cos(2 pi k2 y)``.
    """
    if x.is_interval:
        raise TypeError("evaluate float coefficients")
    m1, m2 = x.m
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    mult = np.where(np.arange(m1) == 0, 2.0, 4.0)[:, None]
    coef = mult * np.asarray(x.data, dtype=float)
    coef[:, 0] = 0.0
    ct = np.cos(p.L * np.outer(t, np.arange(m1)))
    cy = np.cos(2.0 * math.pi * np.outer(np.arange(m2), y))
    return float(x.c00) + ct @ coef @ cy


# ---------------------------------------------------------------------------
# Solution files
# ---------------------------------------------------------------------------

SOLUTION_FORMAT = "boussinesq-solution/1"


def write_solution(path: str | Path, x: SymCoeffs, p: Params, extra: dict | None = None) -> None:
    """Write a solution file (JSON, shortest round-trip floats, lexicographic order)."""
    if x.is_interval:
        raise TypeError("solution files hold float coefficients")
    if tuple(x.m) != tuple(p.m):
        raise ValueError(f"coefficient shape {x.m} does not match params m={p.m}")
    coeffs = [[int(k1), int(k2), float(x.data[k1, k2])] for k1 in range(x.m[0]) for k2 in range(1, x.m[1]) if x.data[k1, k2] != 0.0]
    doc = {
        "format": SOLUTION_FORMAT,
        "lambda": p.lam,
        "L": p.L,
        "nu": p.nu,
        "m1": p.m[0],
        "m2": p.m[1],
        "c00": float(x.c00),
        "coefficients": coeffs,
    }
    if extra:
        doc["extra"] = extra
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def read_solution(path: str | Path) -> tuple[SymCoeffs, Params]:
    doc = json.loads(Path(path).read_text())
    return solution_from_doc(doc)


def solution_from_doc(doc: dict) -> tuple[SymCoeffs, Params]:
    required = {"lambda", "L", "nu", "m1", "m2", "c00", "coefficients"}
    missing = required - set(doc)
    if missing:
        raise ValueError(f"solution file missing fields: {sorted(missing)}")
    p = Params(lam=doc["lambda"], L=doc["L"], nu=doc["nu"], m=(doc["m1"], doc["m2"]))
    x = SymCoeffs.zeros(p.m, float(doc["c00"]))
    for k1, k2, v in doc["coefficients"]:
        if not (0 <= k1 < p.m[0] and 0 < k2 < p.m[1]):
            raise ValueError(f"coefficient index {(k1, k2)} outside F_m")
        x.data[int(k1), int(k2)] = float(v)
    x.meta = dict(doc.get("extra", {}))
    return x, p


def solution_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
