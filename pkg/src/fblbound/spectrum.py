"""Ensemble-average codeword/codematrix spectra over GF(q)^K.

A *type* is a histogram over the composite alphabet Q = GF(q)^K, stored
as a tuple of counts indexed by the flat symbol index (user 1 most
significant).  The module computes:

  * uniform-ensemble spectra (closed form) and their exponent,
  * sparse-graph (regular bipartite, variable degree ``var_degree``,
    check degree ``check_degree``) coset-ensemble spectra, exactly at
    finite n by big-integer coefficient extraction and asymptotically
    by convex minimization,
  * the max-ratio penalty ``alpha`` used by the random-coding bounds,
  * low-weight expurgation and the four-term rate-offset decomposition,
  * the code-rate concentration bounds.

Internally everything is kept in natural log; the two exponent
functions return per-symbol q-ary units as documented.
"""

from __future__ import annotations

import itertools
import math
import warnings
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .gfq import field_from_order

# Guards, in order: direct (edge-value, socket-value) enumeration of one
# check node; coefficient-lattice size during polynomial powering; dense
# per-type table size; edge-DP work estimate for one check node.
_ENUM_GUARD = 100_000_000
_LATTICE_GUARD = 20_000_000
_TABLE_GUARD = 2_000_000
_DP_GUARD = 100_000_000


# ---------------------------------------------------------------------------
# types and small combinatorics

@dataclass(frozen=True)
class TypeVector:
    """Histogram of symbol counts over Q; counts[g] is the number of rows
    equal to the symbol with flat index g."""

    counts: tuple[int, ...]

    def __post_init__(self):
        if not self.counts:
            raise ValueError("empty type vector")
        for c in self.counts:
            if not isinstance(c, int) or c < 0:
                raise ValueError("type counts must be nonnegative integers")

    @property
    def n(self) -> int:
        return sum(self.counts)

    def weight(self) -> int:
        # number of rows differing from the all-zero symbol
        return self.n - self.counts[0]


def _counts(t) -> tuple[int, ...]:
    if isinstance(t, TypeVector):
        return t.counts
    return tuple(int(c) for c in t)


def flat_symbol_index(components, q: int) -> int:
    """Flat index of a K-tuple of field elements, user 1 most significant."""
    idx = 0
    for c in components:
        idx = idx * q + int(c)
    return idx


def symbol_components(index: int, q: int, num_users: int) -> tuple[int, ...]:
    comps = []
    for _ in range(num_users):
        comps.append(index % q)
        index //= q
    return tuple(reversed(comps))


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in _compositions(total - head, parts - 1):
            yield (head,) + rest


def _num_compositions(total: int, parts: int) -> int:
    return math.comb(total + parts - 1, parts - 1)


def type_compositions(total: int, parts: int):
    """All length-`parts` tuples of nonnegative ints summing to `total`."""
    return _compositions(total, parts)


def multinomial_exact(n: int, t) -> int:
    counts = _counts(t)
    if sum(counts) != n:
        raise ValueError(f"type sums to {sum(counts)}, expected {n}")
    out = 1
    rem = n
    for c in counts:
        out *= math.comb(rem, c)
        rem -= c
    return out


def multinomial_log(n: int, t) -> float:
    """ln of the multinomial coefficient n!/prod(t_g!).

    Exact big-integer evaluation for n <= 64, lgamma otherwise.
    """
    counts = _counts(t)
    if sum(counts) != n:
        raise ValueError(f"type sums to {sum(counts)}, expected {n}")
    if n <= 64:
        return math.log(multinomial_exact(n, counts))
    out = math.lgamma(n + 1)
    for c in counts:
        out -= math.lgamma(c + 1)
    return out


def _entropy_nats(theta: np.ndarray) -> float:
    pos = theta[theta > 0]
    return float(-(pos * np.log(pos)).sum())


def uniform_spectrum_exponent(theta, num_users: int, rate: float) -> float:
    """Normalized spectrum exponent of the uniform random ensemble, in
    q-ary units: H_q(theta) - K(1 - R)."""
    th = np.asarray(theta, dtype=float)
    if th.ndim != 1 or abs(th.sum() - 1.0) > 1e-9 or (th < -1e-12).any():
        raise ValueError("theta must be a pmf over the composite alphabet")
    q = _alphabet_base(th.size, num_users)
    h_q = _entropy_nats(th) / math.log(q)
    return h_q - num_users * (1.0 - rate)


def _alphabet_base(size: int, num_users: int) -> int:
    q = 2
    while q ** num_users < size:
        q += 1
    if q ** num_users != size:
        raise ValueError(f"alphabet size {size} is not a {num_users}-th power")
    return q


# ---------------------------------------------------------------------------
# single-check polynomial

@dataclass(frozen=True)
class CheckPolynomial:
    """Sparse socket-type enumerator of one degree-rho check node.

    coeffs[t] counts the pairs (edge labels in GF(q)*^rho, socket symbols
    in Q^rho) of socket type t whose labeled sum vanishes componentwise.
    """

    q: int
    num_users: int
    check_degree: int
    coeffs: dict[tuple[int, ...], int]

    def __post_init__(self):
        for t, c in self.coeffs.items():
            if c < 0:
                raise ValueError("negative coefficient")
            if sum(t) != self.check_degree:
                raise ValueError("socket type does not sum to the check degree")

    def total_mass(self) -> int:
        return sum(self.coeffs.values())

    def expected_total_mass(self) -> int:
        q, rho = self.q, self.check_degree
        return (q - 1) ** rho * q ** (self.num_users * (rho - 1))


def _enumerate_check_poly(q, num_users, rho):
    f = field_from_order(q)
    qk = q ** num_users
    comps = [symbol_components(g, q, num_users) for g in range(qk)]
    add = [[int(f.add(a, b)) for b in range(q)] for a in range(q)]
    mul = [[int(f.mul(a, b)) for b in range(q)] for a in range(q)]
    neg = [int(f.neg(a)) for a in range(q)]
    inv = [0] + [int(f.inv(a)) for a in range(1, q)]
    counts: Counter = Counter()
    for evec in itertools.product(range(1, q), repeat=rho):
        rows = [mul[e] for e in evec[:-1]]
        ilast = inv[evec[-1]]
        for gs in itertools.product(range(qk), repeat=rho - 1):
            last = []
            for u in range(num_users):
                s = 0
                for i, g in enumerate(gs):
                    s = add[s][rows[i][comps[g][u]]]
                last.append(mul[ilast][neg[s]])
            glast = flat_symbol_index(last, q)
            t = [0] * qk
            for g in gs:
                t[g] += 1
            t[glast] += 1
            counts[tuple(t)] += 1
    return dict(counts)


def _dp_check_poly(q, num_users, rho):
    # Exact edge-by-edge dynamic program over (running sum, partial type).
    f = field_from_order(q)
    qk = q ** num_users
    comps = [symbol_components(g, q, num_users) for g in range(qk)]
    add_flat = [
        [
            flat_symbol_index(
                [int(f.add(a, b)) for a, b in zip(comps[x], comps[y])], q
            )
            for y in range(qk)
        ]
        for x in range(qk)
    ]
    # per socket symbol: multiset of labeled values e*g, e in GF(q)*
    deltas = []
    for g in range(qk):
        c: Counter = Counter()
        for e in range(1, q):
            eg = flat_symbol_index([int(f.mul(e, comp)) for comp in comps[g]], q)
            c[eg] += 1
        deltas.append(list(c.items()))
    zero_t = tuple([0] * qk)
    state = [dict() for _ in range(qk)]
    state[0][zero_t] = 1
    for _ in range(rho):
        nxt = [dict() for _ in range(qk)]
        for s in range(qk):
            bucket = state[s]
            if not bucket:
                continue
            for t, cnt in bucket.items():
                for g in range(qk):
                    key = t[:g] + (t[g] + 1,) + t[g + 1:]
                    for eg, w in deltas[g]:
                        dst = nxt[add_flat[s][eg]]
                        dst[key] = dst.get(key, 0) + cnt * w
        state = nxt
    return {t: c for t, c in state[0].items() if c}


def _dft_check_poly(q, num_users, rho):
    f = field_from_order(q)
    p, m = f.p, f.m
    qk = q ** num_users
    mk = m * num_users
    comps = [symbol_components(g, q, num_users) for g in range(qk)]
    # base-p digit vector of a composite symbol (user 1 first)
    dig = np.zeros((qk, mk), dtype=np.int64)
    for g in range(qk):
        for u, comp in enumerate(comps[g]):
            dig[g, u * m:(u + 1) * m] = f._digit[comp]
    omega = np.exp(-2j * math.pi * np.arange(p) / p)
    # C[k, g] = sum over nonzero edge labels e of the character at <k, e*g>
    char = np.zeros((qk, qk), dtype=complex)
    for e in range(1, q):
        eg = np.array(
            [
                flat_symbol_index([int(f.mul(e, c)) for c in comps[g]], q)
                for g in range(qk)
            ]
        )
        ip = (dig @ dig[eg].T) % p
        char += omega[ip]
    coeffs = {}
    mass = 0
    for t in _compositions(rho, qk):
        b = multinomial_exact(rho, t)
        if b > (1 << 52):
            raise ValueError(
                "check degree too large for the transform route; "
                "use the dynamic-programming route"
            )
        prod = np.ones(qk, dtype=complex)
        for g, tg in enumerate(t):
            if tg:
                prod = prod * char[:, g] ** tg
        val = b * prod.sum() / qk
        nearest = round(val.real)
        scale = max(1.0, abs(nearest))
        if abs(val.real - nearest) > 1e-6 * scale or abs(val.imag) > 1e-6 * scale:
            raise ArithmeticError(
                f"transform coefficient at {t} not integral: {val}"
            )
        if nearest:
            coeffs[t] = int(nearest)
            mass += int(nearest)
    return coeffs


def check_polynomial(q: int, num_users: int, check_degree: int,
                     method: str = "auto") -> CheckPolynomial:
    """Socket-type enumerator of a single check node.

    method: "enumerate" (direct loop over edge and socket values), "dp"
    (exact dynamic program over edges), "dft" (character-sum transform),
    or "auto" to pick by size guards.  All routes produce identical
    integer coefficients; "enumerate" and "dft" stay independent so they
    can cross-check each other.
    """
    if check_degree < 1:
        raise ValueError("check degree must be at least 1")
    if num_users < 1:
        raise ValueError("need at least one user")
    qk = q ** num_users
    if method == "auto":
        if (q - 1) ** check_degree * q ** (num_users * check_degree) <= _ENUM_GUARD:
            method = "enumerate"
        else:
            dp_cost = (
                check_degree * qk * qk * (q - 1)
                * _num_compositions(check_degree, qk)
            )
            method = "dp" if dp_cost <= _DP_GUARD else "dft"
    if method == "enumerate":
        if (q - 1) ** check_degree * q ** (num_users * check_degree) > _ENUM_GUARD:
            raise ValueError(
                "direct enumeration guard exceeded; use method='dp' or 'dft'"
            )
        coeffs = _enumerate_check_poly(q, num_users, check_degree)
    elif method == "dp":
        coeffs = _dp_check_poly(q, num_users, check_degree)
    elif method == "dft":
        coeffs = _dft_check_poly(q, num_users, check_degree)
    else:
        raise ValueError(f"unknown method {method!r}")
    poly = CheckPolynomial(q, num_users, check_degree, coeffs)
    if poly.total_mass() != poly.expected_total_mass():
        raise ArithmeticError(
            f"check polynomial mass {poly.total_mass()} != "
            f"{poly.expected_total_mass()} (q={q}, K={num_users}, "
            f"rho={check_degree}, method={method})"
        )
    return poly


_check_poly_cache: dict[tuple, CheckPolynomial] = {}


def _cached_check_poly(q, num_users, rho) -> CheckPolynomial:
    key = (q, num_users, rho)
    if key not in _check_poly_cache:
        if len(_check_poly_cache) > 16:
            _check_poly_cache.clear()
        _check_poly_cache[key] = check_polynomial(q, num_users, rho)
    return _check_poly_cache[key]


# ---------------------------------------------------------------------------
# asymptotic sparse-graph exponent

def _minimize_lse_affine(log_c, tmat, target, tol, scale, floor, restarts=10):
    """Minimize lse(log_c + T u) - <target, u>; convex in u.

    Returns the best objective found, or -inf once the objective drops
    below `floor` (the target lies outside the achievable hull).  Any
    start whose gradient norm reaches tol*scale is a global minimum by
    convexity, so the search returns immediately at that point."""
    _, dim = tmat.shape
    goal = tol * scale

    def fgrad(u):
        w = log_c + tmat @ u
        wm = w.max()
        e = np.exp(w - wm)
        s = e.sum()
        return wm + math.log(s) - float(target @ u), (tmat.T @ e) / s - target

    def fval(u):
        w = log_c + tmat @ u
        wm = w.max()
        return wm + math.log(np.exp(w - wm).sum()) - float(target @ u)

    def descend(u, f, g, iters, check_goal=True):
        # backtracking gradient steps; returns (u, f, g, hit_floor)
        step = 1.0
        for _ in range(iters):
            if f < floor:
                return u, f, g, True
            gn2 = float(g @ g)
            if check_goal and math.sqrt(gn2) <= goal:
                return u, f, g, False
            while step >= 1e-18:
                un = u - step * g
                fn = fval(un)
                if fn <= f - 0.5 * step * gn2:
                    break
                step *= 0.5
            if step < 1e-18:
                return u, f, g, False
            u = un
            f, g = fgrad(u)
            step = min(step * 2.0, 1e8)
        return u, f, g, False

    def polish(u, f):
        # damped Newton; the Hessian is tiny (dim <= |Q|)
        for _ in range(60):
            w = log_c + tmat @ u
            wm = w.max()
            e = np.exp(w - wm)
            prob = e / e.sum()
            g = tmat.T @ prob - target
            if math.sqrt(float(g @ g)) <= goal:
                return u, f, g, True
            hess = tmat.T @ (prob[:, None] * tmat) - np.outer(
                tmat.T @ prob, tmat.T @ prob
            )
            hess = hess + 1e-12 * np.eye(dim)
            try:
                delta = np.linalg.solve(hess, g)
            except np.linalg.LinAlgError:
                return u, f, g, False
            damp = 1.0
            while damp >= 1e-12:
                fn = fval(u - damp * delta)
                if math.isfinite(fn) and fn <= f + 1e-15:
                    break
                damp *= 0.5
            if damp < 1e-12:
                return u, f, g, False
            u = u - damp * delta
            f = fn
        g = fgrad(u)[1]
        return u, f, g, math.sqrt(float(g @ g)) <= goal

    rng = np.random.default_rng(0)
    best = math.inf
    for start in range(restarts):
        u = np.zeros(dim) if start == 0 else rng.normal(0.0, 2.0, size=dim)
        f, g = fgrad(u)
        u, f, g, hit = descend(u, f, g, 250)
        if hit:
            return -math.inf
        u, f, g, converged = polish(u, f)
        if f < floor:
            return -math.inf
        if converged:
            return f
        # no stationary point found: either a hard line search or an
        # unreachable target; push hard along the gradient to find out
        u, f, g, hit = descend(u, f, g, 4000, check_goal=True)
        if hit or f < floor:
            return -math.inf
        u, f, g, converged = polish(u, f)
        if f < floor:
            return -math.inf
        if converged:
            return f
        best = min(best, f)
    return best


def ldpc_spectrum_exponent(theta, var_degree: int, check_degree: int,
                           q: int, num_users: int, tol: float = 1e-10) -> float:
    """Asymptotic normalized spectrum exponent of the regular sparse-graph
    coset ensemble at composition theta, in q-ary units.

    The inner infimum runs in log coordinates, restricted to the symbols
    theta actually uses (the sign-pattern constraint); convexity holds
    because the check enumerator has nonnegative coefficients.  Returns
    -inf when theta is not realizable by any codeword type.
    """
    th = np.asarray(theta, dtype=float)
    if th.ndim != 1 or abs(th.sum() - 1.0) > 1e-8 or (th < -1e-12).any():
        raise ValueError("theta must be a pmf over the composite alphabet")
    qk = th.size
    if q ** num_users != qk:
        raise ValueError(f"theta has {qk} entries, expected {q ** num_users}")
    lam, rho = var_degree, check_degree
    poly = _cached_check_poly(q, num_users, rho)
    support = np.flatnonzero(th > 1e-15)
    supp_set = set(int(g) for g in support)
    terms = [
        (t, c)
        for t, c in poly.coeffs.items()
        if all(tg == 0 or g in supp_set for g, tg in enumerate(t))
    ]
    if not terms:
        return -math.inf
    tmat = np.array([[t[g] for g in support] for t, _ in terms], dtype=float)
    log_c = np.array([math.log(c) for _, c in terms])
    target = rho * th[support]
    # with integer coefficients >= 1 the infimum, when finite, is at least
    # -ln(#terms) >= -|Q| ln(rho+1); anything far below means unreachable
    floor = -(qk * math.log(rho + 1.0) + 50.0)
    fmin = _minimize_lse_affine(log_c, tmat, target, tol, max(1.0, rho), floor)
    if fmin == -math.inf:
        return -math.inf
    h = _entropy_nats(th)
    nats = (1.0 - lam) * h - lam * math.log(q - 1) + (lam / rho) * fmin
    return nats / math.log(q)


# ---------------------------------------------------------------------------
# finite-n sparse-graph spectrum

_power_cache: dict[tuple, dict | None] = {}


def _poly_power(q, num_users, rho, num_checks):
    """coeffs of the check enumerator raised to num_checks, or None when
    the coefficient lattice would exceed the memory guard."""
    key = (q, num_users, rho, num_checks)
    if key in _power_cache:
        return _power_cache[key]
    if _num_compositions(rho * num_checks, q ** num_users) > _LATTICE_GUARD:
        # the full socket lattice cannot fit; skip the powering outright
        _power_cache[key] = None
        return None
    base = _cached_check_poly(q, num_users, rho).coeffs
    out = None
    cur = dict(base)
    ok = True
    for _ in range(num_checks - 1):
        nxt: dict = {}
        for ta, ca in cur.items():
            for tb, cb in base.items():
                tkey = tuple(a + b for a, b in zip(ta, tb))
                nxt[tkey] = nxt.get(tkey, 0) + ca * cb
            if len(nxt) > _LATTICE_GUARD:
                ok = False
                break
        if not ok:
            break
        cur = nxt
    if ok:
        out = cur
    if len(_power_cache) > 8:
        _power_cache.clear()
    _power_cache[key] = out
    return out


def ldpc_finite_spectrum(n: int, t, var_degree: int, check_degree: int,
                         q: int, num_users: int) -> float:
    """ln of the ensemble-average number of codematrices of type t for the
    regular (var_degree, check_degree) coset ensemble on n symbols.

    Exact big-integer evaluation: multinomial(n,t) times the socket-lattice
    coefficient of the powered check enumerator at var_degree*t, divided by
    the socket multinomial and (q-1)^(n*var_degree).  Falls back to
    n*ln(q)*asymptotic exponent with a warning when the lattice guard trips.
    """
    counts = _counts(t)
    if sum(counts) != n:
        raise ValueError(f"type sums to {sum(counts)}, expected {n}")
    lam, rho = var_degree, check_degree
    if (n * lam) % rho:
        raise ValueError(
            f"n*var_degree/check_degree = {n * lam}/{rho} is not an integer; "
            "the ensemble needs a whole number of check nodes"
        )
    r = (n * lam) // rho
    power = _poly_power(q, num_users, rho, r)
    if power is None:
        warnings.warn(
            "socket-lattice guard exceeded; returning the asymptotic "
            "exponent approximation",
            RuntimeWarning,
            stacklevel=2,
        )
        th = np.array(counts, dtype=float) / n
        return n * math.log(q) * ldpc_spectrum_exponent(
            th, lam, rho, q, num_users
        )
    socket_t = tuple(lam * c for c in counts)
    coeff = power.get(socket_t, 0)
    if coeff == 0:
        return -math.inf
    num = multinomial_exact(n, counts) * coeff
    den = multinomial_exact(n * lam, socket_t) * (q - 1) ** (n * lam)
    if num == den:
        return 0.0
    return math.log(num) - math.log(den)


# ---------------------------------------------------------------------------
# spectrum tables

@dataclass
class SpectrumTable:
    """Per-type table of ln(ensemble-average codematrix count).

    kind is "uniform", "ldpc", or "ldpc-expurgated"; entries with value
    -inf mean the ensemble average is exactly zero for that type.
    is_upper_bound marks tables whose entries bound the average from
    above rather than equal it.
    """

    n: int
    q: int
    num_users: int
    kind: str
    entries: dict[tuple[int, ...], float]
    var_degree: int | None = None
    check_degree: int | None = None
    log_num_messages: float | None = None
    is_upper_bound: bool = False

    def log_value(self, t) -> float:
        key = _counts(t)
        if key not in self.entries:
            raise KeyError(f"type {key} not present in this table")
        return self.entries[key]

    def types(self):
        return self.entries.keys()


def _log_mk_minus_one(num_messages, num_users: int) -> float:
    if isinstance(num_messages, int):
        total = num_messages ** num_users - 1
        if total <= 0:
            raise ValueError("need at least two messages overall")
        return math.log(total)
    lm = num_users * math.log(num_messages)
    return lm + math.log1p(-math.exp(-lm)) if lm < 700 else lm


def _all_types_guarded(n: int, qk: int):
    if _num_compositions(n, qk) > _TABLE_GUARD:
        raise ValueError(
            f"dense table over {_num_compositions(n, qk)} types exceeds the "
            f"{_TABLE_GUARD} guard; pass an explicit type list"
        )
    return _compositions(n, qk)


def uniform_spectrum_table(n: int, q: int, num_users: int,
                           num_messages) -> SpectrumTable:
    """Exact expected type counts for M^K independent uniform codewords
    (one per message tuple), all-zero row removal not applied."""
    qk = q ** num_users
    log_m = math.log(num_messages)
    base = num_users * log_m - n * num_users * math.log(q)
    entries = {
        t: base + multinomial_log(n, t) for t in _all_types_guarded(n, qk)
    }
    return SpectrumTable(
        n=n, q=q, num_users=num_users, kind="uniform", entries=entries,
        log_num_messages=log_m,
    )


def ldpc_spectrum_table(n: int, var_degree: int, check_degree: int,
                        q: int, num_users: int,
                        types=None) -> SpectrumTable:
    """Exact finite-n sparse-graph ensemble spectrum table.

    types defaults to every type of length q^K (guarded); the stored
    message count is the design value q^((n - num_checks) per user)."""
    qk = q ** num_users
    if types is None:
        types = _all_types_guarded(n, qk)
    entries = {}
    for t in types:
        key = _counts(t)
        entries[key] = ldpc_finite_spectrum(
            n, key, var_degree, check_degree, q, num_users
        )
    r = (n * var_degree) // check_degree
    return SpectrumTable(
        n=n, q=q, num_users=num_users, kind="ldpc", entries=entries,
        var_degree=var_degree, check_degree=check_degree,
        log_num_messages=(n - r) * math.log(q),
    )


def removal_scaling_heuristic(table: SpectrumTable,
                              num_messages) -> SpectrumTable:
    """Rescale a full-ensemble table so its total mass is M^K: a heuristic
    for the spectrum after duplicate-codeword removal.  The max-ratio
    penalty must be computed from the unscaled table (conservative)."""
    vals = [v for v in table.entries.values() if v > -math.inf]
    m = max(vals)
    lse = m + math.log(sum(math.exp(v - m) for v in vals))
    log_mk = table.num_users * math.log(num_messages)
    shift = log_mk - lse
    return SpectrumTable(
        n=table.n, q=table.q, num_users=table.num_users,
        kind=table.kind + "-removal-heuristic",
        entries={t: v + shift for t, v in table.entries.items()},
        var_degree=table.var_degree, check_degree=table.check_degree,
        log_num_messages=table.log_num_messages,
        is_upper_bound=False,
    )


# ---------------------------------------------------------------------------
# alpha penalty, expurgation

def alpha_log(n: int, spectrum: SpectrumTable, num_messages, num_users: int,
              exclude=()) -> tuple[float, tuple[int, ...]]:
    """ln of the max-ratio penalty and its maximizing type.

    Ratio per type: table entry over the uniform reference
    (M^K - 1) B(n,t) q^(-nK).  The all-zero type is always excluded;
    exclude may remove further types from the maximization."""
    if spectrum.n != n:
        raise ValueError(f"table was built for n={spectrum.n}, not {n}")
    if spectrum.num_users != num_users:
        raise ValueError("user count does not match the table")
    log_ref_const = _log_mk_minus_one(num_messages, num_users) \
        - n * num_users * math.log(spectrum.q)
    skip = {_counts(t) for t in exclude}
    best = None
    best_t = None
    for t, v in spectrum.entries.items():
        if v == -math.inf or t in skip or sum(t) == t[0]:
            continue
        ratio = v - (log_ref_const + multinomial_log(n, t))
        if best is None or ratio > best:
            best, best_t = ratio, t
    if best is None:
        raise ValueError("no candidate types left for the penalty maximum")
    return best, best_t


def alpha(n: int, spectrum: SpectrumTable, num_messages, num_users: int,
          exclude=()) -> float:
    log_a, _ = alpha_log(n, spectrum, num_messages, num_users, exclude)
    try:
        return math.exp(log_a)
    except OverflowError:
        return math.inf


def expurgate_spectrum(spectrum: SpectrumTable, sigma: float,
                       n: int) -> SpectrumTable:
    """Zero all types of weight in (0, sigma*n] and double the rest.

    Valid only for variable degree >= 3 (the low-weight mass argument
    needs it); the result is an upper-bound table."""
    if not 0.0 < sigma < 1.0:
        raise ValueError("sigma must lie strictly between 0 and 1")
    if spectrum.var_degree is None or spectrum.var_degree < 3:
        raise ValueError("expurgation requires variable degree >= 3")
    if spectrum.n != n:
        raise ValueError(f"table was built for n={spectrum.n}, not {n}")
    band = sigma * n
    entries = {}
    for t, v in spectrum.entries.items():
        w = sum(t) - t[0]
        if w == 0:
            entries[t] = v
        elif w <= band:
            entries[t] = -math.inf
        else:
            entries[t] = v + math.log(2.0) if v > -math.inf else v
    return SpectrumTable(
        n=spectrum.n, q=spectrum.q, num_users=spectrum.num_users,
        kind="ldpc-expurgated", entries=entries,
        var_degree=spectrum.var_degree, check_degree=spectrum.check_degree,
        log_num_messages=spectrum.log_num_messages,
        is_upper_bound=True,
    )


# ---------------------------------------------------------------------------
# rate-offset decomposition and rate concentration

def geometric_contraction(q: int, num_users: int) -> float:
    """Contraction factor of the character-sum recursion: sqrt of
    1 - (1 - cos(2 pi / p)) * 2 l (1 - l) with l the fraction of
    nonorthogonal digit vectors.  Equals 1 exactly when q is prime and
    K = 1; strictly below 1 otherwise."""
    f = field_from_order(q)
    p = f.p
    qk = q ** num_users
    lam_frac = qk * (p - 1) / (p * (qk - 1))
    tau = math.cos(2.0 * math.pi / p)
    psi2 = 1.0 - (1.0 - tau) * 2.0 * lam_frac * (1.0 - lam_frac)
    return math.sqrt(max(psi2, 0.0))


def _geometric_gap_term(theta0: float, var_degree: int, check_degree: int,
                        q: int, num_users: int) -> float:
    psi = geometric_contraction(q, num_users)
    qk = q ** num_users
    base = theta0 + psi * (1.0 - theta0)
    return (var_degree / check_degree) * math.log1p(
        (qk - 1) * base ** check_degree
    )


@dataclass(frozen=True)
class RateOffsetDecomposition:
    """The four max-terms whose sum bounds the per-symbol rate offset of
    the expurgated ensemble penalty, all in nats.

    expurgation_term: the doubling cost, exactly ln(2)/n.
    finite_spectrum_term: finite-n vs asymptotic ensemble-spectrum gap.
    geometric_term: uniform-vs-ensemble gap from the character contraction.
    stirling_term: multinomial-vs-entropy gap of the uniform reference.
    """

    n: int
    expurgation_term: float
    finite_spectrum_term: float
    geometric_term: float
    stirling_term: float
    total: float
    argmax_finite_spectrum: tuple[int, ...] | None
    argmax_geometric: float
    argmax_stirling: tuple[int, ...] | None
    design_rate: float
    num_checks: int
    units: str = "nats"


def _jsigma_types(n: int, qk: int, sigma: float, cap: int = 200_000):
    """Types with zero-symbol share at most 1 - sigma, at full lattice
    resolution when affordable, else on a strided grid refined later."""
    wmin = math.ceil(sigma * n - 1e-9)
    total = sum(
        _num_compositions(w, qk - 1) for w in range(wmin, n + 1)
    )
    if total <= cap:
        for w in range(wmin, n + 1):
            for rest in _compositions(w, qk - 1):
                yield (n - w,) + rest
        return
    stride = max(2, math.ceil((total / cap) ** (1.0 / max(qk - 1, 1))))
    for w in range(wmin, n + 1):
        for rest in _compositions(w, qk - 1):
            if all(c % stride == 0 for c in rest[:-1]):
                yield (n - w,) + rest


def rate_offset_decomposition(n: int, var_degree: int, check_degree: int,
                              sigma: float, q: int,
                              num_users: int) -> RateOffsetDecomposition:
    """Evaluate the four rate-offset max-terms over the type lattice with
    zero-share at most 1 - sigma, at the ensemble design rate.

    Maxima run over the types the ensemble actually realizes (positive
    finite spectrum).  Requires the exact socket lattice; raises when the
    lattice guard would trip."""
    if not 0.0 < sigma < 1.0:
        raise ValueError("sigma must lie strictly between 0 and 1")
    if var_degree < 3:
        raise ValueError("the decomposition requires variable degree >= 3")
    lam, rho = var_degree, check_degree
    if (n * lam) % rho:
        raise ValueError("n*var_degree/check_degree must be an integer")
    r = (n * lam) // rho
    rate = 1.0 - lam / rho
    qk = q ** num_users
    power = _poly_power(q, num_users, rho, r)
    if power is None:
        raise ValueError(
            "socket-lattice guard exceeded; the decomposition needs the "
            "exact finite spectrum at this n"
        )
    lnq = math.log(q)
    log_mk1 = math.log(q ** ((n - r) * num_users) - 1)
    lam_n = (q - 1) ** (n * lam)

    term1 = math.log(2.0) / n

    best2 = -math.inf
    best2_t = None
    best4 = -math.inf
    best4_t = None
    for t in _jsigma_types(n, qk, sigma):
        coeff = power.get(tuple(lam * c for c in t), 0)
        if coeff == 0:
            continue
        socket_t = tuple(lam * c for c in t)
        ln_fin = (
            math.log(multinomial_exact(n, t) * coeff)
            - math.log(multinomial_exact(n * lam, socket_t) * lam_n)
        )
        th = np.array(t, dtype=float) / n
        asym = ldpc_spectrum_exponent(th, lam, rho, q, num_users)
        cand2 = ln_fin / n - asym * lnq
        if cand2 > best2:
            best2, best2_t = cand2, t
        h = _entropy_nats(th)
        uniform_nats = h - num_users * (1.0 - rate) * lnq
        ref = (log_mk1 + multinomial_log(n, t) - n * num_users * lnq) / n
        cand4 = uniform_nats - ref
        if cand4 > best4:
            best4, best4_t = cand4, t

    best3 = -math.inf
    best3_theta0 = 0.0
    for t0 in range(0, math.floor((1.0 - sigma) * n + 1e-9) + 1):
        cand3 = _geometric_gap_term(t0 / n, lam, rho, q, num_users)
        if cand3 > best3:
            best3, best3_theta0 = cand3, t0 / n

    total = term1 + best2 + best3 + best4
    return RateOffsetDecomposition(
        n=n,
        expurgation_term=term1,
        finite_spectrum_term=best2,
        geometric_term=best3,
        stirling_term=best4,
        total=total,
        argmax_finite_spectrum=best2_t,
        argmax_geometric=best3_theta0,
        argmax_stirling=best4_t,
        design_rate=rate,
        num_checks=r,
    )


@dataclass(frozen=True)
class MeanGapForm:
    """E[code rate - design rate] <= coefficient * log_q(n)/n, the
    coefficient left free to be fit against sampled ranks."""

    n: int
    q: int

    def __call__(self, coefficient: float) -> float:
        return coefficient * math.log(self.n) / (math.log(self.q) * self.n)


def rate_concentration(n: int, epsilon: float,
                       q: int) -> tuple[float, MeanGapForm]:
    """Tail bound q^(-n*epsilon/2) on the actual-vs-design rate excess
    (rates in q-ary units) plus the mean-gap functional form."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    tail = math.exp(-0.5 * n * epsilon * math.log(q))
    return tail, MeanGapForm(n=n, q=q)
