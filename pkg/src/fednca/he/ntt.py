"""Negacyclic polynomial arithmetic mod q.

Rings of degree >= 512 use an iterative radix-2 number-theoretic transform
(numba-compiled butterflies, batched over polynomials); smaller test rings
fall back to exact big-integer schoolbook multiplication. Products of two
residues can exceed 64 bits for ~50-bit moduli, so modular multiplication
uses a float64 reciprocal to estimate the quotient and then corrects it —
the estimate is off by at most one for moduli below 2^52.
"""

import threading
from typing import Dict, Tuple

import numpy as np
import numba

# skip the TBB probe (old system TBB triggers a spurious warning) and let
# numba fall through to OpenMP or the builtin workqueue
numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
from numba import njit, prange, uint64, float64

from .params import NTT_MIN_DEGREE

_U63 = np.uint64(1) << np.uint64(63)


def mulmod_vec(a, b, q: int) -> np.ndarray:
    """(a * b) mod q elementwise for uint64 arrays/scalars, q < 2^52."""
    a = np.asarray(a, np.uint64)
    b = np.asarray(b, np.uint64)
    qu = np.uint64(q)
    qf = np.float64(q)
    qh = np.floor(a.astype(np.float64) * b.astype(np.float64) / qf).astype(np.uint64)
    with np.errstate(over="ignore"):  # wraparound mod 2^64 is intended
        r = a * b - qh * qu  # true value in (-2q, 2q)
        r = np.where(r >= _U63, r + qu, r)
        r = np.where(r >= _U63, r + qu, r)
    r = np.where(r >= qu, r - qu, r)
    r = np.where(r >= qu, r - qu, r)
    return r


def addmod_vec(a, b, q: int) -> np.ndarray:
    r = np.asarray(a, np.uint64) + np.asarray(b, np.uint64)
    qu = np.uint64(q)
    return np.where(r >= qu, r - qu, r)


def submod_vec(a, b, q: int) -> np.ndarray:
    qu = np.uint64(q)
    r = np.asarray(a, np.uint64) + qu - np.asarray(b, np.uint64)
    return np.where(r >= qu, r - qu, r)


@njit(uint64(uint64, uint64, float64, uint64), cache=True, inline="always")
def _mulmod(a, w, wf, q):
    # Shoup-style quotient estimate: wf = w/q in float64, error <= 1
    qh = uint64(float64(a) * wf)
    r = a * w - qh * q
    if r >= uint64(1 << 63):
        r += q
    if r >= q:
        r -= q
    return r


@njit(cache=True, parallel=True)
def _fwd_ntt_batch(data, psis, psis_f, q):
    """In-place forward transform, natural order in, bit-reversed out."""
    rows, n = data.shape
    for row in prange(rows):
        a = data[row]
        t = n
        m = 1
        while m < n:
            t >>= 1
            for i in range(m):
                j1 = 2 * i * t
                s = psis[m + i]
                sf = psis_f[m + i]
                for j in range(j1, j1 + t):
                    u = a[j]
                    v = _mulmod(a[j + t], s, sf, q)
                    r = u + v
                    if r >= q:
                        r -= q
                    a[j] = r
                    r2 = u + q - v
                    if r2 >= q:
                        r2 -= q
                    a[j + t] = r2
            m <<= 1


@njit(cache=True, parallel=True)
def _inv_ntt_batch(data, ipsis, ipsis_f, n_inv, n_inv_f, q):
    """In-place inverse transform, bit-reversed in, natural order out."""
    rows, n = data.shape
    for row in prange(rows):
        a = data[row]
        t = 1
        m = n
        while m > 1:
            j1 = 0
            h = m >> 1
            for i in range(h):
                s = ipsis[h + i]
                sf = ipsis_f[h + i]
                for j in range(j1, j1 + t):
                    u = a[j]
                    v = a[j + t]
                    r = u + v
                    if r >= q:
                        r -= q
                    a[j] = r
                    a[j + t] = _mulmod(u + q - v if u < v else u - v, s, sf, q)
                j1 += 2 * t
            t <<= 1
            m >>= 1
        for j in range(n):
            a[j] = _mulmod(a[j], n_inv, n_inv_f, q)


@njit(cache=True, parallel=True)
def _pointwise_batch(a, b, bf, q, out):
    """out = a * b mod q for a (rows, n) against b (n,) with bf = b/q."""
    rows, n = a.shape
    for row in prange(rows):
        for j in range(n):
            out[row, j] = _mulmod(a[row, j], b[j], bf[j], q)


def _bit_reverse(x: int, bits: int) -> int:
    out = 0
    for _ in range(bits):
        out = (out << 1) | (x & 1)
        x >>= 1
    return out


def _find_psi(q: int, n: int) -> int:
    """Deterministic primitive 2n-th root of unity mod q."""
    exp = (q - 1) // (2 * n)
    for x in range(2, 10_000):
        psi = pow(x, exp, q)
        if pow(psi, n, q) == q - 1:
            return psi
    raise RuntimeError(f"no 2*{n}-th root of unity found mod {q}")


class NttPlan:
    """Precomputed twiddle tables for one (modulus, degree) pair."""

    def __init__(self, q: int, n: int):
        self.q = q
        self.n = n
        bits = n.bit_length() - 1
        psi = _find_psi(q, n)
        ipsi = pow(psi, q - 2, q)
        self.psis = np.array(
            [pow(psi, _bit_reverse(i, bits), q) for i in range(n)], np.uint64
        )
        self.ipsis = np.array(
            [pow(ipsi, _bit_reverse(i, bits), q) for i in range(n)], np.uint64
        )
        self.psis_f = self.psis.astype(np.float64) / q
        self.ipsis_f = self.ipsis.astype(np.float64) / q
        self.n_inv = np.uint64(pow(n, q - 2, q))
        self.n_inv_f = np.float64(int(self.n_inv)) / q
        self.qu = np.uint64(q)

    def forward(self, data: np.ndarray):
        _fwd_ntt_batch(data, self.psis, self.psis_f, self.qu)

    def inverse(self, data: np.ndarray):
        _inv_ntt_batch(data, self.ipsis, self.ipsis_f, self.n_inv, self.n_inv_f, self.qu)

    def pointwise(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        out = np.empty_like(a)
        _pointwise_batch(a, b, b.astype(np.float64) / self.q, self.qu, out)
        return out

    def to_eval(self, poly: np.ndarray) -> np.ndarray:
        """NTT-domain copy of a single coefficient-domain polynomial."""
        data = poly[None].astype(np.uint64).copy()
        self.forward(data)
        return data[0]


_plans: Dict[Tuple[int, int], NttPlan] = {}
_plans_lock = threading.Lock()


def get_plan(q: int, n: int) -> NttPlan:
    key = (q, n)
    plan = _plans.get(key)
    if plan is None:
        with _plans_lock:
            plan = _plans.get(key)
            if plan is None:
                plan = NttPlan(q, n)
                _plans[key] = plan
    return plan


def negacyclic_mul_schoolbook(a, b, q: int) -> np.ndarray:
    """Exact big-integer product in Z_q[x]/(x^n + 1); test-scale rings only."""
    n = len(a)
    av = [int(x) for x in a]
    bv = [int(x) for x in b]
    out = [0] * n
    for i in range(n):
        ai = av[i]
        if ai == 0:
            continue
        for j in range(n):
            k = i + j
            p = ai * bv[j]
            if k < n:
                out[k] += p
            else:
                out[k - n] -= p
    return np.array([x % q for x in out], np.uint64)


def negacyclic_mul(a: np.ndarray, b: np.ndarray, q: int) -> np.ndarray:
    """Product of two coefficient-domain polynomials mod (x^n + 1, q)."""
    n = len(a)
    if n < NTT_MIN_DEGREE:
        return negacyclic_mul_schoolbook(a, b, q)
    plan = get_plan(q, n)
    da = a[None].astype(np.uint64).copy()
    db = b[None].astype(np.uint64).copy()
    plan.forward(da)
    plan.forward(db)
    prod = plan.pointwise(da, db[0])
    plan.inverse(prod)
    return prod[0]
