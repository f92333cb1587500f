"""Interval arithmetic with software outward rounding.

Two layers live here:

* :class:`Interval` -- a scalar enclosure ``[lo, hi]``. Results are first
  computed in round-to-nearest; an error-free transformation (TwoSum,
  Dekker's TwoProduct) then decides whether the true result lies above or
  below, and the endpoint is stepped one ulp outward only when needed.
* :class:`IntervalArray` -- numpy-backed arrays of enclosures used by the
  certification code. Every arithmetic result is stepped one ulp outward
  unconditionally, which is cheaper than the exactness test.

No FPU rounding mode is ever touched, so everything is thread-safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import numpy as np

__all__ = [
    "DomainError",
    "ShapeError",
    "Interval",
    "MidRad",
    "IntervalArray",
    "pi_interval",
    "mat_mul_verified",
    "gamma",
    "sum_upper",
    "matvec_upper_nonneg",
    "prod_upper_nonneg",
]

_INF = math.inf
_UNIT = 2.0**-53
_ETA = 2.0**-1074
_SPLITTER = 134217729.0  # 2**27 + 1
# Dekker's split is exact only away from overflow and underflow.
_SPLIT_MAX = 2.0**995
_PROD_MIN = 2.0**-960


class DomainError(ArithmeticError):
    """Operation undefined on (part of) the input enclosure."""


class ShapeError(ValueError):
    """Incompatible shapes in an interval matrix operation."""


def _down(x: float) -> float:
    return math.nextafter(x, -_INF)


def _up(x: float) -> float:
    return math.nextafter(x, _INF)


def _two_sum(a: float, b: float) -> tuple[float, float]:
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _split(a: float) -> tuple[float, float]:
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def _two_prod(a: float, b: float) -> tuple[float, float] | None:
    """Return ``(p, e)`` with ``p + e == a*b`` exactly, or None if unsafe."""
    p = a * b
    if not math.isfinite(p) or abs(a) > _SPLIT_MAX or abs(b) > _SPLIT_MAX:
        return None
    if abs(p) < _PROD_MIN and a != 0.0 and b != 0.0:
        # product near or below the subnormal range (possibly flushed to 0)
        return None
    ah, al = _split(a)
    bh, bl = _split(b)
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, e


def _add_dn(a: float, b: float) -> float:
    s = a + b
    if not math.isfinite(s):
        # overflow of finite operands: largest finite value is still a lower bound
        return s if math.isinf(a) or math.isinf(b) else _down(s)
    _, e = _two_sum(a, b)
    return _down(s) if e < 0 else s


def _add_up(a: float, b: float) -> float:
    s = a + b
    if not math.isfinite(s):
        return s if math.isinf(a) or math.isinf(b) else _up(s)
    _, e = _two_sum(a, b)
    return _up(s) if e > 0 else s


def _mul_dn(a: float, b: float) -> float:
    if a == 0.0 or b == 0.0:
        return 0.0
    t = _two_prod(a, b)
    if t is None:
        return _down(a * b)
    p, e = t
    return _down(p) if e < 0 else p


def _mul_up(a: float, b: float) -> float:
    if a == 0.0 or b == 0.0:
        return 0.0
    t = _two_prod(a, b)
    if t is None:
        return _up(a * b)
    p, e = t
    return _up(p) if e > 0 else p


def _div_dir(a: float, b: float, upward: bool) -> float:
    if a == 0.0:
        return 0.0
    q = a / b
    t = _two_prod(q, b)
    if t is None or not math.isfinite(q):
        return _up(q) if upward else _down(q)
    p, e = t
    r = (a - p) - e  # sign of a - q*b
    above = r != 0 and (r > 0) == (b > 0)  # exact quotient exceeds q
    below = r != 0 and not above
    if upward:
        return _up(q) if above else q
    return _down(q) if below else q


def _sqrt_dir(a: float, upward: bool) -> float:
    s = math.sqrt(a)
    if s == 0.0 or not math.isfinite(s):
        return s
    t = _two_prod(s, s)
    if t is None:
        return _up(s) if upward else _down(s)
    p, e = t
    r = (a - p) - e
    if upward:
        return _up(s) if r > 0 else s
    return _down(s) if r < 0 else s


Number = Union[int, float]


@dataclass(frozen=True, slots=True)
class Interval:
    """Closed interval ``[lo, hi]`` of binary64 endpoints."""

    lo: float
    hi: float

    def __post_init__(self) -> None:
        lo, hi = float(self.lo), float(self.hi)
        if math.isnan(lo) or math.isnan(hi):
            raise DomainError("NaN endpoint")
        if lo > hi:
            raise DomainError(f"empty interval [{lo!r}, {hi!r}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    # -- construction -------------------------------------------------------
    @classmethod
    def point(cls, x: float) -> Interval:
        return cls(x, x)

    @classmethod
    def from_decimal(cls, text: str | int | Fraction) -> Interval:
        """Tightest enclosure of the real number written in decimal ``text``."""
        exact = Fraction(text) if not isinstance(text, Fraction) else text
        f = float(exact)
        ef = Fraction(f)
        if ef == exact:
            return cls(f, f)
        if ef < exact:
            return cls(f, _up(f))
        return cls(_down(f), f)

    @staticmethod
    def coerce(x: Interval | Number) -> Interval:
        if isinstance(x, Interval):
            return x
        if isinstance(x, (int, np.integer)) and abs(int(x)) > 2**53:
            return Interval.from_decimal(int(x))
        return Interval(float(x), float(x))

    # -- queries ------------------------------------------------------------
    @property
    def mid(self) -> float:
        return 0.5 * self.lo + 0.5 * self.hi

    @property
    def width(self) -> float:
        return _up(self.hi - self.lo) if self.hi != self.lo else 0.0

    @property
    def mag(self) -> float:
        return max(abs(self.lo), abs(self.hi))

    @property
    def mig(self) -> float:
        if self.lo <= 0.0 <= self.hi:
            return 0.0
        return min(abs(self.lo), abs(self.hi))

    def contains(self, x: Interval | float | Fraction) -> bool:
        if isinstance(x, Interval):
            return self.lo <= x.lo and x.hi <= self.hi
        if isinstance(x, Fraction):
            return Fraction(self.lo) <= x <= Fraction(self.hi)
        return self.lo <= x <= self.hi

    def __contains__(self, x) -> bool:
        return self.contains(x)

    def hull(self, other: Interval | float) -> Interval:
        o = Interval.coerce(other)
        return Interval(min(self.lo, o.lo), max(self.hi, o.hi))

    def is_positive(self) -> bool:
        return self.lo > 0.0

    def is_negative(self) -> bool:
        return self.hi < 0.0

    # -- arithmetic ---------------------------------------------------------
    def __neg__(self) -> Interval:
        return Interval(-self.hi, -self.lo)

    def __pos__(self) -> Interval:
        return self

    def __add__(self, other) -> Interval:
        if isinstance(other, IntervalArray):
            return NotImplemented
        o = Interval.coerce(other)
        return Interval(_add_dn(self.lo, o.lo), _add_up(self.hi, o.hi))

    __radd__ = __add__

    def __sub__(self, other) -> Interval:
        if isinstance(other, IntervalArray):
            return NotImplemented
        o = Interval.coerce(other)
        return Interval(_add_dn(self.lo, -o.hi), _add_up(self.hi, -o.lo))

    def __rsub__(self, other) -> Interval:
        return Interval.coerce(other) - self

    def __mul__(self, other) -> Interval:
        if isinstance(other, IntervalArray):
            return NotImplemented
        o = Interval.coerce(other)
        a, b, c, d = self.lo, self.hi, o.lo, o.hi
        lo = min(_mul_dn(a, c), _mul_dn(a, d), _mul_dn(b, c), _mul_dn(b, d))
        hi = max(_mul_up(a, c), _mul_up(a, d), _mul_up(b, c), _mul_up(b, d))
        return Interval(lo, hi)

    __rmul__ = __mul__

    def __truediv__(self, other) -> Interval:
        if isinstance(other, IntervalArray):
            return NotImplemented
        o = Interval.coerce(other)
        if o.lo <= 0.0 <= o.hi:
            raise DomainError(f"division by interval containing zero: {o}")
        a, b, c, d = self.lo, self.hi, o.lo, o.hi
        cands_lo = [_div_dir(x, y, False) for x in (a, b) for y in (c, d)]
        cands_hi = [_div_dir(x, y, True) for x in (a, b) for y in (c, d)]
        return Interval(min(cands_lo), max(cands_hi))

    def __rtruediv__(self, other) -> Interval:
        return Interval.coerce(other) / self

    def __abs__(self) -> Interval:
        if self.lo >= 0.0:
            return self
        if self.hi <= 0.0:
            return -self
        return Interval(0.0, max(-self.lo, self.hi))

    def sqrt(self) -> Interval:
        if self.lo < 0.0:
            raise DomainError(f"sqrt of interval with negative part: {self}")
        return Interval(_sqrt_dir(self.lo, False), _sqrt_dir(self.hi, True))

    def pow_int(self, n: int) -> Interval:
        n = int(n)
        if n < 0:
            return 1.0 / self.pow_int(-n)
        if n == 0:
            return Interval(1.0, 1.0)
        if n % 2 == 0:
            return _pow_nonneg(abs(self), n)
        lo_mag = _pow_nonneg(Interval.point(abs(self.lo)), n)
        hi_mag = _pow_nonneg(Interval.point(abs(self.hi)), n)
        lo = -lo_mag.hi if self.lo < 0 else lo_mag.lo
        hi = -hi_mag.lo if self.hi < 0 else hi_mag.hi
        return Interval(lo, hi)

    def __pow__(self, n: int) -> Interval:
        if not isinstance(n, (int, np.integer)):
            raise DomainError("only integer powers are supported")
        return self.pow_int(int(n))

    def __repr__(self) -> str:
        return f"Interval({self.lo!r}, {self.hi!r})"


def _pow_nonneg(a: Interval, n: int) -> Interval:
    result = Interval(1.0, 1.0)
    base = a
    while n:
        if n & 1:
            result = result * base
        n >>= 1
        if n:
            base = base * base
    return result


# binary64(pi) = 3.141592653589793 lies below pi by about 1.2e-16.
_PI_LO = math.pi
_PI_HI = math.nextafter(math.pi, math.inf)


def pi_interval() -> Interval:
    """Enclosure of pi one ulp wide."""
    return Interval(_PI_LO, _PI_HI)


@dataclass(frozen=True, slots=True)
class MidRad:
    """Midpoint-radius enclosure ``mid +- rad``."""

    mid: float
    rad: float

    def __post_init__(self) -> None:
        if math.isnan(self.mid) or math.isnan(self.rad) or self.rad < 0:
            raise DomainError("invalid midpoint-radius pair")

    @classmethod
    def from_interval(cls, a: Interval) -> MidRad:
        m = a.mid
        r = max(_add_up(m, -a.lo), _add_up(a.hi, -m))
        return cls(m, r)

    def to_interval(self) -> Interval:
        return Interval(_add_dn(self.mid, -self.rad), _add_up(self.mid, self.rad))


# ---------------------------------------------------------------------------
# Array layer
# ---------------------------------------------------------------------------

def _dn(x: np.ndarray) -> np.ndarray:
    return np.nextafter(x, -np.inf)


def _upa(x: np.ndarray) -> np.ndarray:
    return np.nextafter(x, np.inf)


def gamma(n: int) -> float:
    """Upper bound of ``n*u / (1 - n*u)``, the a-priori dot-product constant."""
    nu = n * _UNIT
    if nu >= 0.5:
        raise ValueError("dimension too large for a-priori rounding bound")
    return _up(_up(nu) / _down(1.0 - nu))


def sum_upper(v: np.ndarray, axis=None) -> np.ndarray | float:
    """Rigorous upper bound of the exact sum of a nonnegative float array."""
    v = np.asarray(v, dtype=float)
    n = v.size if axis is None else v.shape[axis]
    s = np.sum(v, axis=axis)
    g = gamma(max(n, 2))
    return _upa(_upa(s * (1.0 + 2.0 * g)) + n * _ETA)


# Entries below this are dropped before BLAS calls: subnormal operands make
# matrix products orders of magnitude slower. The dropped part is bounded
# separately, and products of kept entries stay normal.
_FLUSH = 2.0**-500


def _flush(a: np.ndarray) -> np.ndarray:
    return np.where(np.abs(a) < _FLUSH, 0.0, a)


def _dropped_max(a: np.ndarray) -> float:
    """Largest magnitude removed by ``_flush`` (0 if none)."""
    small = np.abs(a)
    small = small[small < _FLUSH]
    return float(small.max()) if small.size else 0.0


def _flush_terms(rows_f, cols_f, tx: float, ty: float, n: int):
    """Bound of ``Xs Yf + Xf Ys + Xs Ys`` from the dropped maxima ``tx``, ``ty``."""
    corr = 0.0
    if ty:
        corr = _upa(rows_f * ty)
    if tx:
        corr = _upa(corr + _upa(_upa(cols_f + n * ty) * tx))
    return corr


def prod_upper_nonneg(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Upper bound of ``X @ Y`` for nonnegative ``X`` (matrix or vector) and ``Y``.

    Entries below the flush threshold are removed before the BLAS product.
    With ``tx``, ``ty`` the largest removed entries,
    ``X Y <= Xf Yf + ty rowsum(Xf) + tx (colsum(Yf) + n ty)``.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    n = Y.shape[0]
    Xf = _flush(X)
    Yf = _flush(Y)
    g = gamma(max(n, 2))
    s = _upa(_upa((Xf @ Yf) * (1.0 + 2.0 * g)) + n * _ETA)
    tx, ty = _dropped_max(X), _dropped_max(Y)
    if not (tx or ty):
        return s
    rows = sum_upper(Xf, axis=-1)
    rows = rows[..., None] if np.ndim(rows) else rows
    cols = sum_upper(Yf, axis=0)
    return _upa(s + _flush_terms(rows, cols, tx, ty, n))


def matvec_upper_nonneg(w: np.ndarray, M: np.ndarray) -> np.ndarray:
    """Upper bound of ``w @ M`` for nonnegative ``w`` and ``M``."""
    return prod_upper_nonneg(w, M)


def _as_endpoints(x) -> tuple[np.ndarray | float, np.ndarray | float]:
    if isinstance(x, IntervalArray):
        return x.lo, x.hi
    if isinstance(x, Interval):
        return x.lo, x.hi
    a = np.asarray(x, dtype=float)
    return a, a


class IntervalArray:
    """Array of intervals stored as two float64 arrays ``lo`` and ``hi``."""

    __array_priority__ = 100.0
    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi=None, check: bool = True) -> None:
        lo = np.array(lo, dtype=float)
        hi = lo.copy() if hi is None else np.array(hi, dtype=float)
        if lo.shape != hi.shape:
            raise ShapeError(f"endpoint shapes differ: {lo.shape} vs {hi.shape}")
        if check:
            if np.isnan(lo).any() or np.isnan(hi).any():
                raise DomainError("NaN endpoint")
            if (lo > hi).any():
                raise DomainError("empty interval in array")
        self.lo = lo
        self.hi = hi

    @classmethod
    def zeros(cls, shape) -> IntervalArray:
        return cls(np.zeros(shape), np.zeros(shape), check=False)

    @classmethod
    def point(cls, a) -> IntervalArray:
        a = np.array(a, dtype=float)
        return cls(a, a.copy())

    @classmethod
    def from_intervals(cls, items) -> IntervalArray:
        arr = np.asarray(items, dtype=object)
        lo = np.vectorize(lambda iv: Interval.coerce(iv).lo, otypes=[float])(arr)
        hi = np.vectorize(lambda iv: Interval.coerce(iv).hi, otypes=[float])(arr)
        return cls(lo, hi)

    @staticmethod
    def coerce(x) -> IntervalArray:
        if isinstance(x, IntervalArray):
            return x
        lo, hi = _as_endpoints(x)
        return IntervalArray(lo, hi)

    # -- container protocol --------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return self.lo.shape

    @property
    def size(self) -> int:
        return self.lo.size

    @property
    def ndim(self) -> int:
        return self.lo.ndim

    def __len__(self) -> int:
        return len(self.lo)

    def __getitem__(self, idx):
        lo, hi = self.lo[idx], self.hi[idx]
        if np.ndim(lo) == 0:
            return Interval(float(lo), float(hi))
        return IntervalArray(lo, hi, check=False)

    def __setitem__(self, idx, value) -> None:
        lo, hi = _as_endpoints(value)
        self.lo[idx] = lo
        self.hi[idx] = hi

    def copy(self) -> IntervalArray:
        return IntervalArray(self.lo.copy(), self.hi.copy(), check=False)

    def reshape(self, *shape) -> IntervalArray:
        return IntervalArray(self.lo.reshape(*shape), self.hi.reshape(*shape), check=False)

    @property
    def T(self) -> IntervalArray:
        return IntervalArray(self.lo.T, self.hi.T, check=False)

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    # -- queries -------------------------------------------------------------
    @property
    def mid(self) -> np.ndarray:
        return 0.5 * self.lo + 0.5 * self.hi

    def mag(self) -> np.ndarray:
        return np.maximum(np.abs(self.lo), np.abs(self.hi))

    def mig(self) -> np.ndarray:
        straddle = (self.lo <= 0) & (self.hi >= 0)
        return np.where(straddle, 0.0, np.minimum(np.abs(self.lo), np.abs(self.hi)))

    def width(self) -> np.ndarray:
        return _upa(self.hi - self.lo)

    def contains(self, x) -> np.ndarray:
        lo, hi = _as_endpoints(x)
        return (self.lo <= lo) & (hi <= self.hi)

    def to_midrad(self) -> tuple[np.ndarray, np.ndarray]:
        m = self.mid
        r = np.maximum(_upa(m - self.lo), _upa(self.hi - m))
        r = np.where(self.lo == self.hi, 0.0, r)
        m = np.where(self.lo == self.hi, self.lo, m)
        return m, r

    @classmethod
    def from_midrad(cls, m: np.ndarray, r: np.ndarray) -> IntervalArray:
        return cls(_dn(m - r), _upa(m + r), check=False)

    # -- arithmetic ----------------------------------------------------------
    def __neg__(self) -> IntervalArray:
        return IntervalArray(-self.hi, -self.lo, check=False)

    def __add__(self, other) -> IntervalArray:
        lo, hi = _as_endpoints(other)
        return IntervalArray(_dn(self.lo + lo), _upa(self.hi + hi), check=False)

    __radd__ = __add__

    def __sub__(self, other) -> IntervalArray:
        lo, hi = _as_endpoints(other)
        return IntervalArray(_dn(self.lo - hi), _upa(self.hi - lo), check=False)

    def __rsub__(self, other) -> IntervalArray:
        return IntervalArray.coerce(other) - self

    def __mul__(self, other) -> IntervalArray:
        lo, hi = _as_endpoints(other)
        p1 = self.lo * lo
        p2 = self.lo * hi
        p3 = self.hi * lo
        p4 = self.hi * hi
        rlo = np.minimum(np.minimum(p1, p2), np.minimum(p3, p4))
        rhi = np.maximum(np.maximum(p1, p2), np.maximum(p3, p4))
        return IntervalArray(_dn(rlo), _upa(rhi), check=False)

    __rmul__ = __mul__

    def __truediv__(self, other) -> IntervalArray:
        lo, hi = _as_endpoints(other)
        if np.any((np.asarray(lo) <= 0) & (np.asarray(hi) >= 0)):
            raise DomainError("division by interval containing zero")
        q1 = self.lo / lo
        q2 = self.lo / hi
        q3 = self.hi / lo
        q4 = self.hi / hi
        rlo = np.minimum(np.minimum(q1, q2), np.minimum(q3, q4))
        rhi = np.maximum(np.maximum(q1, q2), np.maximum(q3, q4))
        return IntervalArray(_dn(rlo), _upa(rhi), check=False)

    def __rtruediv__(self, other) -> IntervalArray:
        return IntervalArray.coerce(other) / self

    def __abs__(self) -> IntervalArray:
        return IntervalArray(self.mig(), self.mag(), check=False)

    def square(self) -> IntervalArray:
        return IntervalArray(self.mig() ** 2, self.mag() ** 2, check=False)._outward()

    def _outward(self) -> IntervalArray:
        return IntervalArray(_dn(self.lo), _upa(self.hi), check=False)

    def sum(self, axis=None) -> IntervalArray | Interval:
        """Enclosure of the exact sum (a-priori error bound on both endpoints)."""
        n = self.size if axis is None else self.shape[axis]
        g = gamma(max(n, 2))
        slo = np.sum(self.lo, axis=axis)
        shi = np.sum(self.hi, axis=axis)
        elo = _upa(g * np.sum(np.abs(self.lo), axis=axis)) + n * _ETA
        ehi = _upa(g * np.sum(np.abs(self.hi), axis=axis)) + n * _ETA
        out = IntervalArray(_dn(slo - _upa(elo)), _upa(shi + _upa(ehi)), check=False)
        if np.ndim(out.lo) == 0:
            return Interval(float(out.lo), float(out.hi))
        return out

    def max_upper(self) -> float:
        return float(np.max(self.hi))

    def __matmul__(self, other) -> IntervalArray:
        return mat_mul_verified(self, other)

    def __rmatmul__(self, other) -> IntervalArray:
        return mat_mul_verified(other, self)

    def __repr__(self) -> str:
        return f"IntervalArray(shape={self.shape}, lo={self.lo!r}, hi={self.hi!r})"


def pow_int_array(base: Interval, exponents: np.ndarray) -> IntervalArray:
    """Enclosures of ``base**e`` for each nonnegative integer in ``exponents``."""
    exponents = np.asarray(exponents, dtype=int)
    top = int(exponents.max()) if exponents.size else 0
    table_lo = np.empty(top + 1)
    table_hi = np.empty(top + 1)
    for e in range(top + 1):
        v = base.pow_int(e)
        table_lo[e], table_hi[e] = v.lo, v.hi
    return IntervalArray(table_lo[exponents], table_hi[exponents], check=False)


def mat_mul_verified(A, B, block: int = 4096) -> IntervalArray:
    """Enclosure of the product of two interval matrices.

    Midpoint-radius evaluation: with ``A = mA +- rA`` and ``B = mB +- rB``
    the exact product lies in ``mA mB +- (|mA| rB + rA (|mB| + rB))``.
    The midpoint product is a floating-point matmul, whose rounding error is
    bounded a priori by ``gamma_n |mA| |mB|`` regardless of summation order.
    Columns of ``B`` are processed in blocks to bound memory use.
    """
    A = IntervalArray.coerce(A)
    B = IntervalArray.coerce(B)
    if A.ndim != 2 or B.ndim != 2:
        raise ShapeError("mat_mul_verified expects 2-d operands")
    if A.shape[1] != B.shape[0]:
        raise ShapeError(f"inner dimensions differ: {A.shape} x {B.shape}")
    n = A.shape[1]
    g = gamma(max(n, 2))
    mA, rA = A.to_midrad()
    Af = _flush(mA)
    absA = np.abs(mA)
    tA = _dropped_max(mA)
    rowA = sum_upper(np.abs(Af), axis=1)[:, None]
    a_is_point = not rA.any()
    out_lo = np.empty((A.shape[0], B.shape[1]))
    out_hi = np.empty_like(out_lo)
    for start in range(0, B.shape[1], block):
        sl = slice(start, start + block)
        mB, rB = B[:, sl].to_midrad()
        absB = np.abs(mB)
        Bf = _flush(mB)
        C = Af @ Bf
        # midpoint error from flushed entries (same splitting as prod_upper_nonneg)
        E = _flush_terms(rowA, sum_upper(np.abs(Bf), axis=0)[None, :], tA, _dropped_max(mB), n)
        # radius: |mA| (rB + gamma |mB|) covers input radii and rounding of C
        rhs = _upa(rB + _upa(g * absB))
        R = prod_upper_nonneg(absA, rhs)
        if not a_is_point:
            R = _upa(R + prod_upper_nonneg(rA, _upa(absB + rB)))
        R = _upa(_upa(R + E) + 3 * n * _ETA)
        out_lo[:, sl] = _dn(C - R)
        out_hi[:, sl] = _upa(C + R)
    return IntervalArray(out_lo, out_hi, check=False)
