"""Finite-field arithmetic over GF(p^m) with vectorized numpy kernels.

Elements of GF(p^m) are represented as integers in ``[0, q)``; the base-p
digits of an element (little-endian) are the coefficients of its polynomial
representative, so addition is digitwise mod p and multiplication is
polynomial multiplication modulo a fixed reduction polynomial.

The reduction polynomial is chosen deterministically: among all monic degree-m
polynomials ``x^m + c_{m-1} x^{m-1} + ... + c_0`` over GF(p), the one whose
lower-coefficient vector ``(c_0, ..., c_{m-1})`` encodes the smallest base-p
integer ``sum_i c_i p^i`` and is irreducible.  Irreducibility is verified by
exhaustive trial division by every monic polynomial of degree 1..m//2.
Examples: GF(4) uses x^2+x+1, GF(8) uses x^3+x+1, GF(9) uses x^2+1,
GF(16) uses x^4+x+1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

_MAX_EXT_DEGREE = 8
_MAX_TABLE_Q = 1 << 16
# exhaustive trial division is only honest if we can afford to enumerate all
# candidate divisors; beyond this the field order is rejected outright
_MAX_TRIAL_DIVISORS = 2_000_000


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p % 2 == 0:
        return p == 2
    d = 3
    while d * d <= p:
        if p % d == 0:
            return False
        d += 2
    return True


def _poly_mod(num: list[int], den: list[int], p: int) -> list[int]:
    """Remainder of num / den over GF(p)[x]; polys are little-endian lists."""
    num = list(num)
    dn = len(den) - 1
    inv_lead = pow(den[-1], -1, p)
    for i in range(len(num) - 1, dn - 1, -1):
        c = num[i] % p
        if c == 0:
            continue
        f = (c * inv_lead) % p
        for j, dj in enumerate(den):
            num[i - dn + j] = (num[i - dn + j] - f * dj) % p
    r = num[:dn]
    while len(r) > 1 and r[-1] == 0:
        r.pop()
    return r


def _poly_is_zero(poly: list[int]) -> bool:
    return all(c == 0 for c in poly)


def _digits(n: int, p: int, width: int) -> list[int]:
    out = []
    for _ in range(width):
        out.append(n % p)
        n //= p
    return out


def _find_reduction_poly(p: int, m: int) -> tuple[int, ...]:
    if m == 1:
        return (0, 1)
    n_divisors = sum(p ** d for d in range(1, m // 2 + 1))
    if n_divisors > _MAX_TRIAL_DIVISORS:
        raise ValueError(
            f"cannot exhaustively certify irreducibility for p={p}, m={m}: "
            f"{n_divisors} trial divisors exceeds {_MAX_TRIAL_DIVISORS}"
        )
    for low in range(p ** m):
        cand = _digits(low, p, m) + [1]
        if cand[0] == 0:
            continue  # divisible by x
        reducible = False
        for d in range(1, m // 2 + 1):
            for dlow in range(p ** d):
                div = _digits(dlow, p, d) + [1]
                if _poly_is_zero(_poly_mod(cand, div, p)):
                    reducible = True
                    break
            if reducible:
                break
        if not reducible:
            return tuple(cand)
    raise RuntimeError(f"no irreducible polynomial found for p={p}, m={m}")


@dataclass
class FieldSpec:
    """A finite field GF(q) = GF(p^m) with precomputed arithmetic tables.

    Attributes
    ----------
    p, m, q:
        Characteristic, extension degree, and order q = p^m.
    reduction_poly:
        Monic reduction polynomial as little-endian coefficients (length m+1).
    """

    p: int
    m: int
    q: int
    reduction_poly: tuple[int, ...]
    _exp: np.ndarray = field(repr=False, default=None)
    _log: np.ndarray = field(repr=False, default=None)
    _digit: np.ndarray = field(repr=False, default=None)
    _mul_t: np.ndarray = field(repr=False, default=None)
    _inv_t: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        q, p, m = self.q, self.p, self.m
        digit = np.zeros((q, m), dtype=np.int64)
        r = np.arange(q)
        for i in range(m):
            digit[:, i] = r % p
            r = r // p
        self._digit = digit
        self._build_log_tables()
        if q <= 512:
            a = np.arange(q)
            self._mul_t = self._mul_general(a[:, None], a[None, :])
        inv = np.zeros(q, dtype=np.int64)
        inv[1:] = self._exp[(q - 1 - self._log[1:]) % (q - 1)]
        self._inv_t = inv

    def _mul_scalar(self, a: int, b: int) -> int:
        """Schoolbook polynomial product mod the reduction polynomial."""
        p, m = self.p, self.m
        da = _digits(a, p, m)
        db = _digits(b, p, m)
        prod = [0] * (2 * m - 1)
        for i, ai in enumerate(da):
            if ai == 0:
                continue
            for j, bj in enumerate(db):
                prod[i + j] = (prod[i + j] + ai * bj) % p
        rem = _poly_mod(prod, list(self.reduction_poly), p)
        val = 0
        for c in reversed(rem):
            val = val * p + c
        return val

    def _build_log_tables(self):
        q = self.q
        exp = np.zeros(q - 1, dtype=np.int64)
        log = np.full(q, -1, dtype=np.int64)
        for g in range(2, q):
            x = 1
            seen = 0
            exp[0] = 1
            for k in range(1, q - 1):
                x = self._mul_scalar(x, g)
                if x == 1:
                    seen = k
                    break
                exp[k] = x
            else:
                x = self._mul_scalar(x, g)
                if x == 1:
                    seen = q - 1
            if seen == q - 1:
                for k in range(q - 1):
                    log[exp[k]] = k
                self._exp = exp
                self._log = log
                return
        if q == 2:
            self._exp = np.array([1], dtype=np.int64)
            log = np.array([-1, 0], dtype=np.int64)
            self._log = log
            return
        raise RuntimeError(f"no primitive element found for q={q}")

    # -- vectorized arithmetic ------------------------------------------------

    def add(self, a, b):
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        d = (self._digit[a] + self._digit[b]) % self.p
        out = np.zeros(np.broadcast(a, b).shape, dtype=np.int64)
        for i in range(self.m - 1, -1, -1):
            out = out * self.p + d[..., i]
        return out

    def neg(self, a):
        a = np.asarray(a, dtype=np.int64)
        d = (-self._digit[a]) % self.p
        out = np.zeros(a.shape, dtype=np.int64)
        for i in range(self.m - 1, -1, -1):
            out = out * self.p + d[..., i]
        return out

    def sub(self, a, b):
        return self.add(a, self.neg(b))

    def _mul_general(self, a, b):
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        nz = (a != 0) & (b != 0)
        la = self._log[np.where(nz, a, 1)]
        lb = self._log[np.where(nz, b, 1)]
        prod = self._exp[(la + lb) % (self.q - 1)]
        return np.where(nz, prod, 0)

    def mul(self, a, b):
        if self._mul_t is not None:
            a = np.asarray(a, dtype=np.int64)
            b = np.asarray(b, dtype=np.int64)
            return self._mul_t[a, b]
        return self._mul_general(a, b)

    def inv(self, a):
        a = np.asarray(a, dtype=np.int64)
        if np.any(a == 0):
            raise ZeroDivisionError("inverse of 0 in GF(q)")
        return self._inv_t[a]

    def div(self, a, b):
        return self.mul(a, self.inv(b))


def make_field(p: int, m: int) -> FieldSpec:
    """Construct GF(p^m).

    Parameters
    ----------
    p:
        Prime characteristic.
    m:
        Extension degree, 1 <= m <= 8.
    """
    if not isinstance(p, int) or not isinstance(m, int):
        raise ValueError(f"p and m must be integers, got p={p!r}, m={m!r}")
    if not _is_prime(p):
        raise ValueError(f"p={p} is not prime")
    if not 1 <= m <= _MAX_EXT_DEGREE:
        raise ValueError(f"extension degree m={m} outside [1, {_MAX_EXT_DEGREE}]")
    q = p ** m
    if q > _MAX_TABLE_Q:
        raise ValueError(f"q={q} exceeds table limit {_MAX_TABLE_Q}")
    return FieldSpec(p=p, m=m, q=q, reduction_poly=_find_reduction_poly(p, m))


def field_from_order(q: int) -> FieldSpec:
    """Construct GF(q) from its order, factoring q = p^m."""
    if not isinstance(q, int) or q < 2:
        raise ValueError(f"field order must be an integer >= 2, got {q!r}")
    p = None
    for d in range(2, q + 1):
        if q % d == 0:
            p = d
            break
    m = 0
    r = q
    while r % p == 0 and r > 1:
        r //= p
        m += 1
    if r != 1:
        raise ValueError(f"{q} is not a prime power")
    return make_field(p, m)


@dataclass
class GfMatrix:
    """A dense matrix over a finite field, entries as integers in [0, q)."""

    field: FieldSpec
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.int64)
        if self.data.ndim != 2:
            raise ValueError(f"matrix must be 2-d, got shape {self.data.shape}")
        if np.any(self.data < 0) or np.any(self.data >= self.field.q):
            raise ValueError("matrix entries outside [0, q)")

    @property
    def shape(self):
        return self.data.shape

    def mat_vec(self, v: Sequence[int]) -> np.ndarray:
        """Matrix-vector product over the field."""
        v = np.asarray(v, dtype=np.int64)
        prods = self.field.mul(self.data, v[None, :])
        out = np.zeros(self.data.shape[0], dtype=np.int64)
        for j in range(self.data.shape[1]):
            out = self.field.add(out, prods[:, j])
        return out


def rank_and_nullspace(mat: GfMatrix) -> tuple[int, np.ndarray]:
    """Row-reduce ``mat`` and return (rank, nullspace basis).

    The elimination always pivots on the first row with a nonzero entry in the
    current column (scanning top to bottom), which makes the reduced form, and
    hence the returned basis, deterministic.

    Returns
    -------
    rank:
        Rank of the matrix over GF(q).
    basis:
        Array of shape (cols - rank, cols); rows form a basis of the right
        nullspace, each satisfying ``mat.mat_vec(row) == 0``.
    """
    f = mat.field
    a = mat.data.copy()
    rows, cols = a.shape
    pivot_cols: list[int] = []
    r = 0
    for c in range(cols):
        if r >= rows:
            break
        nz = np.nonzero(a[r:, c])[0]
        if nz.size == 0:
            continue
        pr = r + int(nz[0])
        if pr != r:
            a[[r, pr]] = a[[pr, r]]
        a[r] = f.mul(a[r], f.inv(int(a[r, c])))
        for rr in range(rows):
            if rr != r and a[rr, c] != 0:
                a[rr] = f.sub(a[rr], f.mul(int(a[rr, c]), a[r]))
        pivot_cols.append(c)
        r += 1
    rank = len(pivot_cols)
    free_cols = [c for c in range(cols) if c not in pivot_cols]
    basis = np.zeros((len(free_cols), cols), dtype=np.int64)
    for k, fc in enumerate(free_cols):
        basis[k, fc] = 1
        for i, pc in enumerate(pivot_cols):
            basis[k, pc] = f.neg(int(a[i, fc]))
    return rank, basis
