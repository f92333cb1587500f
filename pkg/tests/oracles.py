"""Independent brute-force references used by the test suite.

Everything here works on plain dicts over the signed lattice and uses
exact rationals or mpmath, so it shares no code path with the package.
"""

from __future__ import annotations

from fractions import Fraction

import mpmath
import numpy as np


def random_coeffs(rng, m, scale=1.0, decay=0.5, c00=None):
    """Random quarter-lattice data with geometric decay; returns (c00, array)."""
    m1, m2 = m
    k1, k2 = np.indices((m1, m2))
    data = scale * rng.uniform(-1.0, 1.0, size=(m1, m2)) * decay ** (k1 + k2)
    data[:, 0] = 0.0
    if c00 is None:
        c00 = float(rng.uniform(-1.0, 1.0))
    return c00, data


def signed_dict(c00, data, exact=False, include_c00=True):
    """``c(x)`` on the signed lattice as ``{(k1, k2): value}`` (zeros omitted)."""
    conv = Fraction if exact else float
    out = {}
    m1, m2 = np.shape(data)
    for a in range(m1):
        for b in range(1, m2):
            v = float(data[a][b])
            if v == 0.0:
                continue
            for s1 in ((1,) if a == 0 else (1, -1)):
                for s2 in (1, -1):
                    out[(s1 * a, s2 * b)] = conv(v)
    if include_c00 and c00 != 0:
        out[(0, 0)] = conv(c00)
    return out


def conv_dict(a: dict, b: dict) -> dict:
    out = {}
    for ka, va in a.items():
        for kb, vb in b.items():
            k = (ka[0] + kb[0], ka[1] + kb[1])
            out[k] = out.get(k, 0) + va * vb
    return out


def norm_dict(d: dict, nu) -> object:
    return sum(abs(v) * nu ** (abs(k[0]) + abs(k[1])) for k, v in d.items())


def quarter_norm(d: dict, nu):
    return sum(abs(v) * nu ** (k[0] + k[1]) for k, v in d.items() if k[0] >= 0 and k[1] > 0)


def mp_mu(k1, k2, lam, L):
    """``mu_k`` at the working mpmath precision, with ``lam`` and ``L`` read exactly."""
    lam = mpmath.mpf(lam)
    k1, k2 = int(k1), int(k2)
    L = mpmath.mpf(L)
    return (L / (2 * mpmath.pi)) ** 2 * mpmath.mpf(k1 * k1) / (k2 * k2) + 4 * mpmath.pi**2 * lam * k2 * k2 - 1


def brute_bounds(c00, data, lam, L, nu, m, A_block, factor=8, dps=40):
    """Truncated exact versions of the four validation quantities.

    The lattice is cut at ``F_{factor * m}``. Returns a dict with
    ``Y = ||A f||``, ``Z0 = ||I - A^(m) Df_m||``, ``Z1 = max column norm of
    A Gamma`` and ``Z2 = 32 ||A||`` (tail sup taken over the truncated lattice).
    """
    with mpmath.workdps(dps):
        m1, m2 = m
        N1, N2 = factor * m1, factor * m2
        nu = mpmath.mpf(nu)
        c = {k: mpmath.mpf(v) for k, v in signed_dict(c00, data).items()}
        Fm = [(a, b) for a in range(m1) for b in range(1, m2)]
        idx = {k: i for i, k in enumerate(Fm)}
        A = [[mpmath.mpf(float(A_block[i][j])) for j in range(len(Fm))] for i in range(len(Fm))]
        w = lambda k: nu ** (abs(k[0]) + abs(k[1]))
        mu = {}

        def mu_of(k):
            if k not in mu:
                mu[k] = mp_mu(k[0], k[1], lam, L)
            return mu[k]

        def xval(k):
            if 0 <= k[0] < m1 and 0 < k[1] < m2:
                return mpmath.mpf(float(data[k[0]][k[1]]))
            return mpmath.mpf(0)

        cc = conv_dict(c, c)

        def f(k):
            return mu_of(k) * xval(k) - cc.get(k, 0)

        def C(k, q):
            g = lambda a, b: c.get((a, b), 0)
            v = g(k[0] - q[0], k[1] - q[1]) + g(k[0] + q[0], k[1] + q[1])
            if q[0] > 0:
                v += g(k[0] - q[0], k[1] + q[1]) + g(k[0] + q[0], k[1] - q[1])
            return v

        # Y: f vanishes outside F_{2m-1}
        fF = [f(k) for k in Fm]
        Y = sum(abs(sum(A[i][j] * fF[j] for j in range(len(Fm)))) * w(k) for i, k in enumerate(Fm))
        for a in range(2 * m1 - 1):
            for b in range(1, 2 * m2 - 1):
                if (a, b) not in idx:
                    Y += abs(f((a, b)) / mu_of((a, b))) * w((a, b))

        # Z0 on the finite block
        J = [[(mu_of(k) if k == j else 0) - 2 * C(k, j) for j in Fm] for k in Fm]
        Z0 = mpmath.mpf(0)
        for jj, j in enumerate(Fm):
            col = 0
            for ii, k in enumerate(Fm):
                v = (1 if ii == jj else 0) - sum(A[ii][t] * J[t][jj] for t in range(len(Fm)))
                col += abs(v) * w(k)
            Z0 = max(Z0, col / w(j))

        # Z1: Gamma = Df - A-dagger, zero on F_m x F_m, -2C elsewhere
        Z1 = mpmath.mpf(0)
        for q1 in range(N1):
            for q2 in range(1, N2):
                q = (q1, q2)
                rows = set()
                for p in c:
                    for s in ((1, 1), (1, -1)) if q1 > 0 else ((1, 1),):
                        for sign in (1, -1):
                            k = (p[0] + sign * q1 * s[0], p[1] + sign * q2 * s[1])
                            k = (abs(k[0]), abs(k[1]))
                            if k[1] > 0 and k[0] < N1 and k[1] < N2:
                                rows.add(k)
                q_in = q in idx
                gamma = {k: -2 * C(k, q) for k in rows if not (q_in and k in idx)}
                col = mpmath.mpf(0)
                block = [sum(A[i][idx[k]] * g for k, g in gamma.items() if k in idx) for i in range(len(Fm))]
                for i, k in enumerate(Fm):
                    col += abs(block[i]) * w(k)
                for k, g in gamma.items():
                    if k not in idx:
                        col += abs(g / mu_of(k)) * w(k)
                Z1 = max(Z1, col / w(q))

        # Z2 = 32 ||A|| with the diagonal tail over the truncated lattice
        nA = max(sum(abs(A[i][j]) * w(Fm[i]) for i in range(len(Fm))) / w(Fm[j]) for j in range(len(Fm)))
        tail = max(1 / mu_of((a, b)) for a in range(N1) for b in range(1, N2) if (a, b) not in idx)
        Z2 = 32 * max(nA, tail)
        return {"Y": Y, "Z0": Z0, "Z1": Z1, "Z2": Z2}
