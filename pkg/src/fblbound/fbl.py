"""Finite-blocklength achievability bounds for random code ensembles.

Point-to-point bounds come in three strengths: the exact ensemble average
of the maximum-likelihood error (ties counted as errors), its clamped
union-bound relaxation, and the closed-form relaxation with the
1/sqrt(n) tail prefactor.  Two-user MAC versions split the competitor
tail into single-user and joint terms.  LDPC variants reuse the relaxed
forms with a spectrum-ratio penalty supplied by the caller.  Everything
internal is in nats.

Exact evaluation enumerates joint types; the per-type competitor tail is
the tail of an n-fold product distribution built by convolving one
likelihood-ratio atom set per conditioning symbol.  When the channel and
input pmf carry exact rational entries, ratio keys are `Fraction`s and
tie comparisons are exact; otherwise keys are log-domain floats merged
and compared with a conservative tolerance.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .channel import DmcModel, InputPmf, MacModel, Quantizer, induced_input_pmf
from .infodensity import mac_info_density_tables, mac_moments, ppc_moments
from .spectrum import multinomial_log, type_compositions

LN2 = math.log(2.0)

# enumeration refuses once the joint-type lattice outgrows this
_JOINT_TYPE_GUARD = 1_000_000
# float ratio keys closer than this are treated as one atom
_KEY_MERGE_TOL = 1e-12
# float-path tie tolerance: thresholds within this of a key count as ties
_TIE_TOL = 1e-9
_MC_CHUNK = 4096
_MIN_TRIALS = 1000


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class BoundReport:
    """Uniform result record for every bound in this module.

    ``value`` is a probability for error bounds and a log-cardinality for
    rate bounds (see ``units``).  ``method`` is one of "exact-type-enum",
    "monte-carlo", or "closed-form"; Monte Carlo reports must carry
    ``ci_half_width`` and ``trials`` and nothing else may.
    """

    name: str
    value: float
    units: str
    method: str
    n: int
    num_messages: object = None
    ci_half_width: float | None = None
    trials: int | None = None
    components: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in ("exact-type-enum", "monte-carlo", "closed-form"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.method == "monte-carlo":
            if self.ci_half_width is None or self.trials is None:
                raise ValueError("monte-carlo reports need ci_half_width and trials")
        elif self.ci_half_width is not None or self.trials is not None:
            raise ValueError("only monte-carlo reports carry a CI and trial count")
        if self.units == "probability":
            v = self.value
            if not -1e-9 <= v <= 1.0 + 1e-9:
                raise ValueError(f"probability value {v} outside [0, 1]")
            object.__setattr__(self, "value", min(max(v, 0.0), 1.0))


# ---------------------------------------------------------------------------
# Gaussian tail machinery

# Acklam's rational approximation to the standard normal quantile,
# refined below by one Newton step.
_ACK_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
          1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_ACK_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
          6.680131188771972e+01, -1.328068155288572e+01)
_ACK_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
          -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_ACK_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
          3.754408661907416e+00)
_ACK_PLOW = 0.02425


def q_fun(x: float) -> float:
    """Standard normal upper tail Q(x) = P[N(0,1) > x]."""
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def _acklam_phi_inv(p: float) -> float:
    if p < _ACK_PLOW:
        r = math.sqrt(-2.0 * math.log(p))
        num = ((((_ACK_C[0] * r + _ACK_C[1]) * r + _ACK_C[2]) * r + _ACK_C[3]) * r
               + _ACK_C[4]) * r + _ACK_C[5]
        den = (((_ACK_D[0] * r + _ACK_D[1]) * r + _ACK_D[2]) * r + _ACK_D[3]) * r + 1.0
        return num / den
    if p > 1.0 - _ACK_PLOW:
        r = math.sqrt(-2.0 * math.log(1.0 - p))
        num = ((((_ACK_C[0] * r + _ACK_C[1]) * r + _ACK_C[2]) * r + _ACK_C[3]) * r
               + _ACK_C[4]) * r + _ACK_C[5]
        den = (((_ACK_D[0] * r + _ACK_D[1]) * r + _ACK_D[2]) * r + _ACK_D[3]) * r + 1.0
        return -num / den
    r = p - 0.5
    s = r * r
    num = (((((_ACK_A[0] * s + _ACK_A[1]) * s + _ACK_A[2]) * s + _ACK_A[3]) * s
            + _ACK_A[4]) * s + _ACK_A[5]) * r
    den = ((((_ACK_B[0] * s + _ACK_B[1]) * s + _ACK_B[2]) * s + _ACK_B[3]) * s
           + _ACK_B[4]) * s + 1.0
    return num / den


def q_inv(epsilon: float) -> float:
    """Inverse of ``q_fun`` on (0, 1): the x with Q(x) = epsilon.

    Rational approximation plus exactly one Newton correction, accurate to
    well below 1e-9 across [1e-12, 1 - 1e-12].
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"q_inv needs epsilon in (0, 1), got {epsilon}")
    x = -_acklam_phi_inv(epsilon)
    # Newton step on Q(x) - epsilon; Q'(x) = -phi(x)
    phi = math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    if phi > 0.0:
        x += (q_fun(x) - epsilon) / phi
    return x


@dataclass(frozen=True)
class GaussianRegion:
    """Acceptance region data for a d-dimensional Gaussian membership test:
    mean-zero covariance plus a target outage ``epsilon``."""

    covariance: np.ndarray
    epsilon: float

    def __post_init__(self):
        cov = np.asarray(self.covariance, dtype=np.float64)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
            raise ValueError(f"covariance must be square, got shape {cov.shape}")
        if not np.allclose(cov, cov.T, atol=1e-10):
            raise ValueError("covariance must be symmetric")
        scale = max(1.0, float(np.max(np.abs(cov))))
        if np.min(np.linalg.eigvalsh(cov)) < -1e-10 * scale:
            raise ValueError("covariance must be positive semidefinite")
        object.__setattr__(self, "covariance", cov)
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must be in (0, 1), got {self.epsilon}")

    @property
    def dim(self) -> int:
        return self.covariance.shape[0]


class MembershipResult(NamedTuple):
    member: bool
    prob_estimate: float
    ci_half_width: float
    indeterminate: bool


def qinv_membership(region: GaussianRegion, z, trials: int,
                    seed: int = 0) -> MembershipResult:
    """Monte Carlo test of P[Z <= z componentwise] >= 1 - epsilon for
    Z ~ N(0, covariance).

    ``member`` is True only when the lower 95% confidence edge clears the
    target; ``indeterminate`` flags a confidence interval that straddles
    it.  Sampling is chunked with one Philox substream per chunk keyed by
    (seed, chunk), so results are reproducible and order-independent.
    """
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (region.dim,):
        raise ValueError(f"z has shape {z.shape}, expected ({region.dim},)")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    w, u = np.linalg.eigh(region.covariance)
    keep = w > max(1e-18, float(w.max(initial=0.0)) * 1e-12)
    root = u[:, keep] * np.sqrt(w[keep])      # (d, r) factor, cov = root root^T
    rank = root.shape[1]
    hits = 0
    done = 0
    chunk_idx = 0
    while done < trials:
        c = min(_MC_CHUNK * 32, trials - done)
        rng = np.random.Generator(np.random.Philox(key=[seed, chunk_idx]))
        if rank == 0:
            s = np.zeros((c, region.dim))
        else:
            s = rng.standard_normal((c, rank)) @ root.T
        hits += int(np.count_nonzero(np.all(s <= z[None, :], axis=1)))
        done += c
        chunk_idx += 1
    p_hat = hits / trials
    ci = 1.96 * math.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / trials)
    target = 1.0 - region.epsilon
    member = p_hat - ci >= target
    indeterminate = (not member) and (p_hat + ci >= target)
    return MembershipResult(bool(member), p_hat, ci, bool(indeterminate))


# ---------------------------------------------------------------------------
# competitor-tail machinery


def _merge_close(items):
    # items sorted by key; collapse float keys within _KEY_MERGE_TOL
    out: list = []
    for k, p in items:
        if out and (k == out[-1][0]
                    or (math.isfinite(k) and math.isfinite(out[-1][0])
                        and k - out[-1][0] <= _KEY_MERGE_TOL)):
            out[-1][1] += p
        else:
            out.append([k, p])
    return out


class _TailSystem:
    """Tail of the competitor score over an n-fold conditioning type.

    ``atoms[cell]`` lists (key, probability) pairs for one conditioning
    symbol; the score of a sequence is the product (exact keys) or sum
    (log-domain float keys) over its letters.  ``tail(counts, thr)``
    returns P[score >= thr] under the given per-cell letter counts, with
    equality counted in (ties as errors).
    """

    def __init__(self, atoms, exact: bool):
        self.atoms = atoms
        self.exact = exact
        self._one = Fraction(1) if exact else 0.0
        self._tables: dict = {}

    def _convolve(self, dist, cell):
        out: dict = {}
        if self.exact:
            for k, p in dist.items():
                for ak, ap in self.atoms[cell]:
                    nk = k * ak
                    out[nk] = out.get(nk, 0.0) + p * ap
        else:
            for k, p in dist.items():
                for ak, ap in self.atoms[cell]:
                    nk = k + ak
                    out[nk] = out.get(nk, 0.0) + p * ap
        return out

    def table(self, counts):
        counts = tuple(counts)
        tab = self._tables.get(counts)
        if tab is not None:
            return tab
        dist = {self._one: 1.0}
        for cell, c in enumerate(counts):
            for _ in range(c):
                dist = self._convolve(dist, cell)
        items = sorted(dist.items(), key=lambda kv: kv[0])
        if not self.exact:
            items = _merge_close(items)
        keys = [k for k, _ in items]
        suffix = [0.0] * (len(keys) + 1)
        for i in range(len(keys) - 1, -1, -1):
            suffix[i] = suffix[i + 1] + items[i][1]
        tab = (keys, suffix)
        if len(self._tables) > 50_000:
            self._tables.clear()
        self._tables[counts] = tab
        return tab

    def tail(self, counts, threshold) -> float:
        keys, suffix = self.table(counts)
        thr = threshold if self.exact else threshold - _TIE_TOL
        return min(suffix[bisect_left(keys, thr)], 1.0)


class _PpcContext:
    """Supported (x, y) cells of P_X x W with per-cell log-probabilities,
    info densities, and a per-output competitor atom system."""

    def __init__(self, dmc: DmcModel, pmf: InputPmf):
        if pmf.size != dmc.input_size:
            raise ValueError(
                f"pmf over {pmf.size} symbols does not match |X|={dmc.input_size}"
            )
        self.dmc = dmc
        self.pmf = pmf
        sx, sy = dmc.input_size, dmc.output_size
        self.sy = sy
        px = pmf.probs
        py = px @ dmc.w
        self.exact = dmc.is_exact and pmf.exact is not None
        py_ex = None
        if self.exact:
            py_ex = [sum(pmf.exact[x] * dmc.w_exact[x][y] for x in range(sx))
                     for y in range(sy)]
        cells = []
        for x in range(sx):
            for y in range(sy):
                jp = px[x] * dmc.w[x, y]
                if jp <= 0.0:
                    continue
                i_val = math.log(dmc.w[x, y]) - math.log(py[y])
                key = None
                if self.exact:
                    key = dmc.w_exact[x][y] / py_ex[y]
                cells.append((x, y, math.log(jp), i_val, key))
        self.cells = cells
        atoms = []
        for y in range(sy):
            ats = []
            if py[y] > 0.0:
                for x in range(sx):
                    if px[x] <= 0.0:
                        continue
                    if self.exact:
                        k = dmc.w_exact[x][y] / py_ex[y]
                    else:
                        k = (math.log(dmc.w[x, y]) - math.log(py[y])
                             if dmc.w[x, y] > 0.0 else -math.inf)
                    ats.append((k, float(px[x])))
            atoms.append(ats)
        self.system = _TailSystem(atoms, self.exact)

    def guard(self, n: int, caller: str):
        lattice = math.comb(n + len(self.cells) - 1, len(self.cells) - 1)
        if lattice > _JOINT_TYPE_GUARD:
            raise ValueError(
                f"joint-type lattice has {lattice} points, beyond the "
                f"{_JOINT_TYPE_GUARD} enumeration guard; use {caller}"
            )

    def type_terms(self, n: int):
        """Yield (log_prob, i_total, y_counts, threshold_key) per joint type."""
        ncells = len(self.cells)
        logp_cell = [c[2] for c in self.cells]
        i_cell = [c[3] for c in self.cells]
        key_cell = [c[4] for c in self.cells]
        y_of = [c[1] for c in self.cells]
        for t in type_compositions(n, ncells):
            logp = multinomial_log(n, t)
            i_tot = 0.0
            ycounts = [0] * self.sy
            key = Fraction(1) if self.exact else None
            for idx, cnt in enumerate(t):
                if cnt == 0:
                    continue
                logp += cnt * logp_cell[idx]
                i_tot += cnt * i_cell[idx]
                ycounts[y_of[idx]] += cnt
                if self.exact:
                    key = key * key_cell[idx] ** cnt
            if not self.exact:
                key = i_tot
            yield logp, i_tot, tuple(ycounts), key

    def trial_term(self, xrow, yrow):
        """(i_total, y_counts, threshold_key) for one sampled (x^n, y^n)."""
        sy = self.sy
        counts: dict = {}
        for x, y in zip(xrow, yrow):
            counts[(x, y)] = counts.get((x, y), 0) + 1
        i_tot = 0.0
        ycounts = [0] * sy
        key = Fraction(1) if self.exact else None
        cell_by_xy = getattr(self, "_cell_by_xy", None)
        if cell_by_xy is None:
            cell_by_xy = {(c[0], c[1]): c for c in self.cells}
            self._cell_by_xy = cell_by_xy
        for (x, y), cnt in counts.items():
            c = cell_by_xy[(x, y)]
            i_tot += cnt * c[3]
            ycounts[y] += cnt
            if self.exact:
                key = key * c[4] ** cnt
        if not self.exact:
            key = i_tot
        return i_tot, tuple(ycounts), key


def _as_pmf(pmf, size: int) -> InputPmf:
    if isinstance(pmf, InputPmf):
        return pmf
    return InputPmf.from_values(pmf)


def _check_block(n: int):
    if not isinstance(n, int) or n < 1:
        raise ValueError(f"blocklength must be a positive integer, got {n}")


def _exact_error_from_tail(p_tail: float, num_messages) -> float:
    # 1 - (1 - p)^(M-1), stable for small p and large M
    if p_tail >= 1.0:
        return 1.0
    if p_tail <= 0.0:
        return 0.0
    return -math.expm1((num_messages - 1) * math.log1p(-p_tail))


# ---------------------------------------------------------------------------
# point-to-point bounds


def rcu_exact_ppc(dmc: DmcModel, input_pmf, n: int, num_messages) -> BoundReport:
    """Exact ensemble-average ML error (ties as errors) of the i.i.d. random
    code with M codewords, evaluated by joint-type enumeration.

    Equals the brute-force average over all equally-likely codebooks when
    the input pmf matches the codeword distribution.  The clamped union
    form E[min{1, (M-1) P[tie-or-better]}] is reported under
    ``components["union_bound"]``.
    """
    _check_block(n)
    if num_messages < 1:
        raise ValueError(f"need at least one message, got {num_messages}")
    pmf = _as_pmf(input_pmf, dmc.input_size)
    ctx = _PpcContext(dmc, pmf)
    ctx.guard(n, "rcu_mc_ppc")
    m = num_messages
    total = 0.0
    union = 0.0
    count = 0
    if m > 1:
        for logp, _i, ycounts, key in ctx.type_terms(n):
            p_tail = ctx.system.tail(ycounts, key)
            pj = math.exp(logp)
            total += pj * _exact_error_from_tail(p_tail, m)
            union += pj * min(1.0, (m - 1) * p_tail)
            count += 1
    return BoundReport(
        name="rcu-exact-ppc",
        value=total,
        units="probability",
        method="exact-type-enum",
        n=n,
        num_messages=m,
        components={"union_bound": min(union, 1.0), "joint_types": count},
    )


def rcu_mc_ppc(dmc: DmcModel, input_pmf, n: int, num_messages,
               trials: int, seed: int = 0) -> BoundReport:
    """Monte Carlo estimate of the same ensemble-average error as
    ``rcu_exact_ppc``: (X^n, Y^n) is sampled, the competitor tail for each
    sample is computed exactly from its joint type, and the mean carries a
    1.96 sigma / sqrt(trials) half-width.
    """
    _check_block(n)
    if num_messages < 1:
        raise ValueError(f"need at least one message, got {num_messages}")
    if trials < _MIN_TRIALS:
        raise ValueError(f"trials must be >= {_MIN_TRIALS}, got {trials}")
    pmf = _as_pmf(input_pmf, dmc.input_size)
    ctx = _PpcContext(dmc, pmf)
    m = num_messages
    cum_x = np.cumsum(pmf.probs)
    cum_w = np.cumsum(dmc.w, axis=1)
    total = 0.0
    total_sq = 0.0
    union_total = 0.0
    done = 0
    chunk_idx = 0
    while done < trials:
        c = min(_MC_CHUNK, trials - done)
        rng = np.random.Generator(np.random.Philox(key=[seed, chunk_idx]))
        ux = rng.random((c, n))
        uy = rng.random((c, n))
        xs = np.searchsorted(cum_x, ux, side="right")
        xs = np.minimum(xs, dmc.input_size - 1)
        ys = (uy[:, :, None] >= cum_w[xs][:, :, :-1]).sum(axis=2)
        for r in range(c):
            _i, ycounts, key = ctx.trial_term(xs[r], ys[r])
            p_tail = ctx.system.tail(ycounts, key)
            v = _exact_error_from_tail(p_tail, m) if m > 1 else 0.0
            total += v
            total_sq += v * v
            union_total += min(1.0, (m - 1) * p_tail) if m > 1 else 0.0
        done += c
        chunk_idx += 1
    mean = total / trials
    var = max(total_sq / trials - mean * mean, 0.0)
    if trials > 1:
        var *= trials / (trials - 1)
    ci = 1.96 * math.sqrt(var / trials)
    return BoundReport(
        name="rcu-mc-ppc",
        value=mean,
        units="probability",
        method="monte-carlo",
        n=n,
        num_messages=m,
        ci_half_width=ci,
        trials=trials,
        components={"union_bound": union_total / trials},
    )


def _relaxed_profile(ctx: _PpcContext, n: int):
    # (log_prob, i_total) pairs; no exact keys needed for the relaxed form
    return [(logp, i_tot) for logp, i_tot, _yc, _k in ctx.type_terms(n)]


def _relaxed_from_profile(profile, log_scale: float, log_pref: float) -> float:
    total = 0.0
    for logp, i_tot in profile:
        lt = log_scale + log_pref - i_tot
        total += math.exp(logp) if lt >= 0.0 else math.exp(logp + lt)
    return min(total, 1.0)


def rcu_relaxed_ppc(dmc: DmcModel, input_pmf, n: int, num_messages) -> BoundReport:
    """Relaxed random-coding bound E[min{1, M (A/sqrt(n)) e^{-I_n}}] with the
    closed-form tail prefactor A; exact type-enumeration of the outer
    expectation."""
    _check_block(n)
    if num_messages < 0:
        raise ValueError(f"message count must be >= 0, got {num_messages}")
    pmf = _as_pmf(input_pmf, dmc.input_size)
    moments = ppc_moments(dmc, pmf)
    if moments.tail_prefactor is None:
        raise ValueError(
            "relaxed bound needs positive information-density variance"
        )
    ctx = _PpcContext(dmc, pmf)
    ctx.guard(n, "rcu_mc_ppc")
    m = num_messages
    if m == 0:
        value = 0.0
    else:
        log_pref = math.log(moments.tail_prefactor) - 0.5 * math.log(n)
        profile = _relaxed_profile(ctx, n)
        value = _relaxed_from_profile(profile, math.log(m), log_pref)
    return BoundReport(
        name="rcu-relaxed-ppc",
        value=value,
        units="probability",
        method="exact-type-enum",
        n=n,
        num_messages=m,
        components={
            "tail_prefactor": moments.tail_prefactor,
            "mean_info_density": moments.mean,
        },
    )


def achievable_logM_ppc(dmc: DmcModel, input_pmf, n: int, epsilon: float,
                        units: str = "nats",
                        strict_window: bool = True) -> BoundReport:
    """Largest guaranteed-achievable log M at blocklength n and target
    error epsilon.

    Inside the validity window the proof-constant closed form
    n I + (1/2) ln n - ln A - sqrt(n V) Qinv(epsilon - (B+A)/sqrt(n))
    applies.  Below the window the default is an error naming the window;
    with ``strict_window=False`` the function instead searches for the
    largest integer M whose exact ensemble-average error stays strictly
    below epsilon, which is a valid achievability statement at every n
    (some code in the ensemble performs at least as well as the average).
    """
    _check_block(n)
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"target error must be in (0, 1), got {epsilon}")
    if units not in ("nats", "bits"):
        raise ValueError(f"units must be 'nats' or 'bits', got {units!r}")
    pmf = _as_pmf(input_pmf, dmc.input_size)
    moments = ppc_moments(dmc, pmf)
    if moments.tail_prefactor is None or moments.be_term is None:
        raise ValueError(
            "achievable log M needs positive information-density variance"
        )
    i_mean = moments.mean
    v = moments.variance
    ba = moments.be_term + moments.tail_prefactor
    if epsilon <= 0.5:
        window = (ba / epsilon) ** 2
    else:
        window = (ba / (epsilon - 0.5)) ** 2
    in_window = n > window
    components: dict = {
        "window_n_min": window,
        "mean_info_density": i_mean,
        "dispersion": v,
        "be_plus_prefactor": ba,
        "asymptotic_rate_nats": i_mean - math.sqrt(v / n) * q_inv(epsilon)
        + math.log(n) / (2.0 * n),
    }
    if in_window:
        u = epsilon - ba / math.sqrt(n)
        log_m = (n * i_mean + 0.5 * math.log(n)
                 - math.log(moments.tail_prefactor)
                 - math.sqrt(n * v) * q_inv(u))
        log_m = max(log_m, 0.0)
        m_int = max(int(math.floor(math.exp(min(log_m, 700.0)))), 1)
        components["path"] = "proof-constant"
        method = "closed-form"
    else:
        if strict_window:
            raise ValueError(
                f"n={n} is below the validity window n > {window:.6g} for "
                f"target error {epsilon}; pass strict_window=False to fall "
                f"back to the finite relaxed-bound search"
            )
        ctx = _PpcContext(dmc, pmf)
        ctx.guard(n, "rcu_mc_ppc")
        terms = [(math.exp(logp), ctx.system.tail(yc, key))
                 for logp, _i, yc, key in ctx.type_terms(n)]

        def exact_err(m: int) -> float:
            return sum(pj * _exact_error_from_tail(pt, m) for pj, pt in terms)

        # largest integer M with exact ensemble error strictly below target;
        # M = 1 errs with probability 0, so the search never comes up empty
        lo_m = 1
        hi_m = 2
        for _ in range(200):
            if exact_err(hi_m) >= epsilon:
                break
            lo_m = hi_m
            hi_m *= 2
        while hi_m - lo_m > 1:
            mid = (lo_m + hi_m) // 2
            if exact_err(mid) < epsilon:
                lo_m = mid
            else:
                hi_m = mid
        log_m = math.log(lo_m)
        m_int = lo_m
        components["exact_error_at_m"] = exact_err(lo_m)
        components["path"] = "exact-search"
        method = "exact-type-enum"
    value = log_m if units == "nats" else log_m / LN2
    components["rate_per_symbol"] = value / n
    return BoundReport(
        name="achievable-log-messages",
        value=value,
        units=units,
        method=method,
        n=n,
        num_messages=m_int,
        components=components,
    )


# ---------------------------------------------------------------------------
# two-user MAC bounds


class _MacContext:
    """Supported (x1, x2, y) cells of P1 x P2 x W with the three
    competitor atom systems (user 1 given (x2, y), user 2 given (x1, y),
    and the pair given y)."""

    def __init__(self, mac: MacModel, pmf1: InputPmf, pmf2: InputPmf):
        if mac.num_users != 2:
            raise ValueError(f"need a 2-user MAC, got {mac.num_users} users")
        s1, s2 = mac.input_sizes
        sy = mac.output_size
        if pmf1.size != s1 or pmf2.size != s2:
            raise ValueError("input pmf sizes do not match the MAC alphabets")
        self.mac = mac
        self.pmf1, self.pmf2 = pmf1, pmf2
        self.s1, self.s2, self.sy = s1, s2, sy
        w = mac.w
        p1 = pmf1.probs
        p2 = pmf2.probs
        pc1 = np.einsum("a,aby->by", p1, w)     # P(y | x2)
        pc2 = np.einsum("b,aby->ay", p2, w)     # P(y | x1)
        py = np.einsum("a,ay->y", p1, pc2)
        t1, t2, t12 = mac_info_density_tables(mac, pmf1, pmf2)
        self.exact = (mac.is_exact and pmf1.exact is not None
                      and pmf2.exact is not None)
        if self.exact:
            e1, e2 = pmf1.exact, pmf2.exact
            wex = mac.exact_prob
            pc1_ex = [[sum(e1[a] * wex((a, b), y) for a in range(s1))
                       for y in range(sy)] for b in range(s2)]
            pc2_ex = [[sum(e2[b] * wex((a, b), y) for b in range(s2))
                       for y in range(sy)] for a in range(s1)]
            py_ex = [sum(e1[a] * pc2_ex[a][y] for a in range(s1))
                     for y in range(sy)]
        cells = []
        for a in range(s1):
            for b in range(s2):
                for y in range(sy):
                    jp = p1[a] * p2[b] * w[a, b, y]
                    if jp <= 0.0:
                        continue
                    keys = (None, None, None)
                    if self.exact:
                        wf = wex((a, b), y)
                        keys = (wf / pc1_ex[b][y], wf / pc2_ex[a][y],
                                wf / py_ex[y])
                    cells.append((a, b, y, math.log(jp),
                                  (float(t1[a, b, y]), float(t2[a, b, y]),
                                   float(t12[a, b, y])), keys))
        self.cells = cells
        # conditioning-cell indexers: user1 tails key on (x2, y), user2 on
        # (x1, y), pair on y
        atoms1 = []
        for b in range(s2):
            for y in range(sy):
                ats = []
                if pc1[b, y] > 0.0:
                    for a in range(s1):
                        if p1[a] <= 0.0:
                            continue
                        if self.exact:
                            k = wex((a, b), y) / pc1_ex[b][y]
                        else:
                            k = (math.log(w[a, b, y]) - math.log(pc1[b, y])
                                 if w[a, b, y] > 0.0 else -math.inf)
                        ats.append((k, float(p1[a])))
                atoms1.append(ats)
        atoms2 = []
        for a in range(s1):
            for y in range(sy):
                ats = []
                if pc2[a, y] > 0.0:
                    for b in range(s2):
                        if p2[b] <= 0.0:
                            continue
                        if self.exact:
                            k = wex((a, b), y) / pc2_ex[a][y]
                        else:
                            k = (math.log(w[a, b, y]) - math.log(pc2[a, y])
                                 if w[a, b, y] > 0.0 else -math.inf)
                        ats.append((k, float(p2[b])))
                atoms2.append(ats)
        atoms12 = []
        for y in range(sy):
            ats = []
            if py[y] > 0.0:
                for a in range(s1):
                    for b in range(s2):
                        pp = p1[a] * p2[b]
                        if pp <= 0.0:
                            continue
                        if self.exact:
                            k = wex((a, b), y) / py_ex[y]
                        else:
                            k = (math.log(w[a, b, y]) - math.log(py[y])
                                 if w[a, b, y] > 0.0 else -math.inf)
                        ats.append((k, float(pp)))
            atoms12.append(ats)
        self.sys1 = _TailSystem(atoms1, self.exact)
        self.sys2 = _TailSystem(atoms2, self.exact)
        self.sys12 = _TailSystem(atoms12, self.exact)

    def guard(self, n: int, caller: str):
        lattice = math.comb(n + len(self.cells) - 1, len(self.cells) - 1)
        if lattice > _JOINT_TYPE_GUARD:
            raise ValueError(
                f"joint-type lattice has {lattice} points, beyond the "
                f"{_JOINT_TYPE_GUARD} enumeration guard; use {caller}"
            )

    def type_terms(self, n: int):
        """Yield (log_prob, i_vec, counts1, counts2, counts12, keys) per
        joint type; counts index the three conditioning systems."""
        sy = self.sy
        for t in type_compositions(n, len(self.cells)):
            logp = multinomial_log(n, t)
            i1 = i2 = i12 = 0.0
            c1 = [0] * (self.s2 * sy)
            c2 = [0] * (self.s1 * sy)
            cy = [0] * sy
            if self.exact:
                k1 = k2 = k12 = Fraction(1)
            for idx, cnt in enumerate(t):
                if cnt == 0:
                    continue
                a, b, y, lp, ivec, keys = self.cells[idx]
                logp += cnt * lp
                i1 += cnt * ivec[0]
                i2 += cnt * ivec[1]
                i12 += cnt * ivec[2]
                c1[b * sy + y] += cnt
                c2[a * sy + y] += cnt
                cy[y] += cnt
                if self.exact:
                    k1 = k1 * keys[0] ** cnt
                    k2 = k2 * keys[1] ** cnt
                    k12 = k12 * keys[2] ** cnt
            if not self.exact:
                k1, k2, k12 = i1, i2, i12
            yield (logp, (i1, i2, i12), tuple(c1), tuple(c2), tuple(cy),
                   (k1, k2, k12))

    def trial_term(self, x1row, x2row, yrow):
        sy = self.sy
        counts: dict = {}
        for a, b, y in zip(x1row, x2row, yrow):
            counts[(a, b, y)] = counts.get((a, b, y), 0) + 1
        cell_by = getattr(self, "_cell_by_xy", None)
        if cell_by is None:
            cell_by = {(c[0], c[1], c[2]): c for c in self.cells}
            self._cell_by_xy = cell_by
        i1 = i2 = i12 = 0.0
        c1 = [0] * (self.s2 * sy)
        c2 = [0] * (self.s1 * sy)
        cy = [0] * sy
        if self.exact:
            k1 = k2 = k12 = Fraction(1)
        for (a, b, y), cnt in counts.items():
            cell = cell_by[(a, b, y)]
            ivec, keys = cell[4], cell[5]
            i1 += cnt * ivec[0]
            i2 += cnt * ivec[1]
            i12 += cnt * ivec[2]
            c1[b * sy + y] += cnt
            c2[a * sy + y] += cnt
            cy[y] += cnt
            if self.exact:
                k1 = k1 * keys[0] ** cnt
                k2 = k2 * keys[1] ** cnt
                k12 = k12 * keys[2] ** cnt
        if not self.exact:
            k1, k2, k12 = i1, i2, i12
        return (i1, i2, i12), tuple(c1), tuple(c2), tuple(cy), (k1, k2, k12)

    def tails(self, c1, c2, cy, keys):
        return (self.sys1.tail(c1, keys[0]),
                self.sys2.tail(c2, keys[1]),
                self.sys12.tail(cy, keys[2]))


def _mac_prefactors(mac: MacModel, pmf1: InputPmf, pmf2: InputPmf):
    mm = mac_moments(mac, pmf1, pmf2)
    return mm, mm.tail_prefactors


def rcu_mac(mac: MacModel, pmf1, pmf2, n: int, m1, m2,
            mode: str = "exact", trials: int = 10_000,
            seed: int = 0) -> BoundReport:
    """Two-user MAC random-coding bound
    E[min{1, (M1-1) P1 + (M2-1) P2 + (M1-1)(M2-1) P12}] with ties counted
    as errors in each competitor tail.

    ``mode="exact"`` enumerates joint (x1, x2, y) types; ``mode="mc"``
    samples them.  The per-type relaxed sum with the three 1/sqrt(n)
    prefactors is accumulated under ``components["relaxed"]`` when all
    needed prefactors exist (terms whose message count is 1 are omitted,
    matching their identically-zero exact counterparts).
    """
    _check_block(n)
    if m1 < 1 or m2 < 1:
        raise ValueError("message counts must be >= 1")
    if mode not in ("exact", "mc"):
        raise ValueError(f"mode must be 'exact' or 'mc', got {mode!r}")
    p1 = _as_pmf(pmf1, mac.input_sizes[0])
    p2 = _as_pmf(pmf2, mac.input_sizes[1])
    ctx = _MacContext(mac, p1, p2)
    mm, prefs = _mac_prefactors(mac, p1, p2)
    active = (m1 > 1, m2 > 1, m1 > 1 and m2 > 1)
    needed = [prefs[j] for j in range(3) if active[j]]
    relax_ok = all(math.isfinite(f) for f in needed)
    half_log_n = 0.5 * math.log(n)
    log_f = [math.log(prefs[j]) - half_log_n if math.isfinite(prefs[j])
             and prefs[j] > 0 else -math.inf for j in range(3)]

    def relaxed_term(ivec):
        tot = 0.0
        if active[0]:
            tot += math.exp(min(math.log(m1) + log_f[0] - ivec[0], 0.0))
        if active[1]:
            tot += math.exp(min(math.log(m2) + log_f[1] - ivec[1], 0.0))
        if active[2]:
            tot += math.exp(min(math.log(m1) + math.log(m2) + log_f[2]
                                - ivec[2], 0.0))
        return min(tot, 1.0)

    if mode == "exact":
        ctx.guard(n, "mode='mc'")
        total = 0.0
        relaxed = 0.0
        count = 0
        for logp, ivec, c1, c2, cy, keys in ctx.type_terms(n):
            pj = math.exp(logp)
            v = 0.0
            if active[0] or active[1] or active[2]:
                p1t, p2t, p12t = ctx.tails(c1, c2, cy, keys)
                if active[0]:
                    v += (m1 - 1) * p1t
                if active[1]:
                    v += (m2 - 1) * p2t
                if active[2]:
                    v += (m1 - 1) * (m2 - 1) * p12t
            total += pj * min(1.0, v)
            if relax_ok:
                relaxed += pj * relaxed_term(ivec)
            count += 1
        components = {
            "joint_types": count,
            "relaxed": min(relaxed, 1.0) if relax_ok else float("nan"),
            "relaxed_available": relax_ok,
            "tail_prefactors": tuple(float(f) for f in prefs),
        }
        return BoundReport(
            name="rcu-mac",
            value=min(total, 1.0),
            units="probability",
            method="exact-type-enum",
            n=n,
            num_messages=(m1, m2),
            components=components,
        )

    if trials < _MIN_TRIALS:
        raise ValueError(f"trials must be >= {_MIN_TRIALS}, got {trials}")
    cum1 = np.cumsum(p1.probs)
    cum2 = np.cumsum(p2.probs)
    wflat = mac.w.reshape(-1, mac.output_size)
    cum_w = np.cumsum(wflat, axis=1)
    s2 = mac.input_sizes[1]
    total = 0.0
    total_sq = 0.0
    relaxed = 0.0
    done = 0
    chunk_idx = 0
    while done < trials:
        c = min(_MC_CHUNK, trials - done)
        rng = np.random.Generator(np.random.Philox(key=[seed, chunk_idx]))
        u1 = rng.random((c, n))
        u2 = rng.random((c, n))
        uy = rng.random((c, n))
        x1 = np.minimum(np.searchsorted(cum1, u1, side="right"),
                        mac.input_sizes[0] - 1)
        x2 = np.minimum(np.searchsorted(cum2, u2, side="right"), s2 - 1)
        flat = x1 * s2 + x2
        ys = (uy[:, :, None] >= cum_w[flat][:, :, :-1]).sum(axis=2)
        for r in range(c):
            ivec, c1, c2c, cy, keys = ctx.trial_term(x1[r], x2[r], ys[r])
            v = 0.0
            if active[0] or active[1] or active[2]:
                p1t, p2t, p12t = ctx.tails(c1, c2c, cy, keys)
                if active[0]:
                    v += (m1 - 1) * p1t
                if active[1]:
                    v += (m2 - 1) * p2t
                if active[2]:
                    v += (m1 - 1) * (m2 - 1) * p12t
            v = min(1.0, v)
            total += v
            total_sq += v * v
            if relax_ok:
                relaxed += relaxed_term(ivec)
        done += c
        chunk_idx += 1
    mean = total / trials
    var = max(total_sq / trials - mean * mean, 0.0)
    if trials > 1:
        var *= trials / (trials - 1)
    ci = 1.96 * math.sqrt(var / trials)
    return BoundReport(
        name="rcu-mac",
        value=mean,
        units="probability",
        method="monte-carlo",
        n=n,
        num_messages=(m1, m2),
        ci_half_width=ci,
        trials=trials,
        components={
            "relaxed": relaxed / trials if relax_ok else float("nan"),
            "relaxed_available": relax_ok,
            "tail_prefactors": tuple(float(f) for f in prefs),
        },
    )


@dataclass(frozen=True)
class RegionCheckResult:
    """Outcome of the Gaussian rate-region membership test.  ``margin`` is
    prob_estimate - (1 - epsilon); the O(1/n) remainder of the expansion is
    not quantified by the bound, so it is reported as zero and flagged."""

    member: bool
    margin: float
    prob_estimate: float
    ci_half_width: float
    indeterminate: bool
    z: tuple
    residual_term: float = 0.0
    residual_unquantified: bool = True


def mac_region_check(mac: MacModel, pmf1, pmf2, n: int, epsilon: float,
                     rate1: float, rate2: float, trials: int = 200_000,
                     seed: int = 0) -> RegionCheckResult:
    """Tests whether the rate pair (rate1, rate2), in nats per symbol, sits
    inside the order-(1/2 ln n)/n achievable region at blocklength n and
    error target epsilon.

    The test point is z = sqrt(n) (I + (ln n / 2n) 1 - (R1, R2, R1+R2))
    against the three-dimensional info-density Gaussian.
    """
    _check_block(n)
    p1 = _as_pmf(pmf1, mac.input_sizes[0])
    p2 = _as_pmf(pmf2, mac.input_sizes[1])
    mm = mac_moments(mac, p1, p2)
    cov = mm.cov
    if float(np.max(np.linalg.eigvalsh(cov))) <= 1e-14:
        raise ValueError(
            "dispersion covariance has rank zero; the Gaussian region "
            "test is degenerate for this channel and input pair"
        )
    shift = math.log(n) / (2.0 * n)
    rates = np.array([rate1, rate2, rate1 + rate2])
    z = math.sqrt(n) * (mm.means + shift - rates)
    res = qinv_membership(GaussianRegion(cov, epsilon), z, trials, seed)
    return RegionCheckResult(
        member=res.member,
        margin=res.prob_estimate - (1.0 - epsilon),
        prob_estimate=res.prob_estimate,
        ci_half_width=res.ci_half_width,
        indeterminate=res.indeterminate,
        z=tuple(float(v) for v in z),
    )


# ---------------------------------------------------------------------------
# LDPC ensemble variants


def _ldpc_design(n: int, var_degree: int, check_degree: int, q: int):
    if var_degree < 2 or check_degree <= var_degree:
        raise ValueError(
            f"need 2 <= var_degree < check_degree, got ({var_degree}, "
            f"{check_degree})"
        )
    if (n * var_degree) % check_degree != 0:
        raise ValueError(
            f"n R must be integral: n lambda / rho = {n * var_degree}/"
            f"{check_degree} checks is not an integer"
        )
    r = n * var_degree // check_degree
    if r >= n:
        raise ValueError(f"design has {r} checks >= n = {n}; rate is zero")
    return r, q ** (n - r)


def ldpc_rcu_ppc(dmc: DmcModel, quantizer: Quantizer, n: int,
                 var_degree: int, check_degree: int,
                 alpha: float = 1.0) -> BoundReport:
    """Relaxed random-coding bound for the quantized coset LDPC ensemble:
    the i.i.d. relaxed form with M = q^{n-r} messages and the spectrum
    ratio ``alpha`` folded into the message count.

    ``alpha`` is the worst-case ratio of the ensemble's average spectrum
    to the uniform-ensemble reference (1.0 recovers the i.i.d. bound
    exactly); compute it with the spectrum module.
    """
    _check_block(n)
    if quantizer.target_size != dmc.input_size:
        raise ValueError(
            f"quantizer maps onto {quantizer.target_size} symbols but the "
            f"channel has |X| = {dmc.input_size}"
        )
    if not alpha >= 1.0:
        raise ValueError(f"spectrum ratio alpha must be >= 1, got {alpha}")
    q = quantizer.field.q
    r, m = _ldpc_design(n, var_degree, check_degree, q)
    pmf = induced_input_pmf(quantizer)
    moments = ppc_moments(dmc, pmf)
    if moments.tail_prefactor is None:
        raise ValueError(
            "relaxed bound needs positive information-density variance"
        )
    ctx = _PpcContext(dmc, pmf)
    ctx.guard(n, "rcu_mc_ppc")
    log_m = (n - r) * math.log(q)
    log_pref = math.log(moments.tail_prefactor) - 0.5 * math.log(n)
    profile = _relaxed_profile(ctx, n)
    value = _relaxed_from_profile(profile, log_m + math.log(alpha), log_pref)
    components = {
        "alpha": alpha,
        "log_alpha": math.log(alpha),
        "log_num_messages": log_m,
        "num_checks": r,
        "design_rate_qary": 1.0 - var_degree / check_degree,
    }
    # normal-approximation rate expansion at the achieved error level
    if 0.0 < value < 1.0:
        components["rate_expansion_nats"] = (
            moments.mean
            - math.sqrt(moments.variance / n) * q_inv(value)
            + math.log(n) / (2.0 * n)
            - math.log(alpha) / n
        )
    return BoundReport(
        name="ldpc-rcu-ppc",
        value=value,
        units="probability",
        method="exact-type-enum",
        n=n,
        num_messages=m,
        components=components,
    )


def ldpc_rcu_mac(mac: MacModel, quantizers, n: int, params1, params2,
                 alpha1: float = 1.0, alpha2: float = 1.0,
                 same_coset: bool = False) -> BoundReport:
    """Two-user MAC relaxed bound for per-user quantized coset LDPC
    ensembles: E[min{1, a1 E1 + a2 E2 + a1 a2 E12}] where E_j are the
    relaxed per-user terms and a_j the spectrum penalties.

    ``params_j = (var_degree, check_degree, field_order)``;
    ``same_coset=True`` models both users drawing from one shared coset
    vector, which squares each penalty (the log-penalty vector doubles).
    """
    _check_block(n)
    quant1, quant2 = quantizers
    for j, (quant, params) in enumerate(((quant1, params1), (quant2, params2))):
        vd, cd, q = params
        if quant.field.q != q:
            raise ValueError(
                f"mismatched field specs for user {j + 1}: quantizer is over "
                f"GF({quant.field.q}) but params request GF({q})"
            )
        if quant.target_size != mac.input_sizes[j]:
            raise ValueError(
                f"user-{j + 1} quantizer maps onto {quant.target_size} "
                f"symbols but the MAC alphabet has {mac.input_sizes[j]}"
            )
    if not (alpha1 >= 1.0 and alpha2 >= 1.0):
        raise ValueError("spectrum ratios must be >= 1")
    r1, m1 = _ldpc_design(n, params1[0], params1[1], params1[2])
    r2, m2 = _ldpc_design(n, params2[0], params2[1], params2[2])
    p1 = induced_input_pmf(quant1)
    p2 = induced_input_pmf(quant2)
    ctx = _MacContext(mac, p1, p2)
    ctx.guard(n, "rcu_mac with mode='mc' on the i.i.d. ensemble")
    mm, prefs = _mac_prefactors(mac, p1, p2)
    power = 2.0 if same_coset else 1.0
    la1 = power * math.log(alpha1)
    la2 = power * math.log(alpha2)
    log_m1 = math.log(params1[2]) * (n - r1)
    log_m2 = math.log(params2[2]) * (n - r2)
    active = (m1 > 1, m2 > 1, m1 > 1 and m2 > 1)
    for j in range(3):
        if active[j] and not (math.isfinite(prefs[j]) and prefs[j] > 0):
            raise ValueError(
                "relaxed MAC bound needs positive conditional variance for "
                f"every active coordinate; coordinate {j} has none"
            )
    half_log_n = 0.5 * math.log(n)
    log_t1 = log_m1 + la1 + (math.log(prefs[0]) - half_log_n if active[0] else 0.0)
    log_t2 = log_m2 + la2 + (math.log(prefs[1]) - half_log_n if active[1] else 0.0)
    log_t12 = (log_m1 + log_m2 + la1 + la2
               + (math.log(prefs[2]) - half_log_n if active[2] else 0.0))
    total = 0.0
    for logp, ivec, _c1, _c2, _cy, _keys in ctx.type_terms(n):
        s = 0.0
        if active[0]:
            s += math.exp(min(log_t1 - ivec[0], 0.0))
        if active[1]:
            s += math.exp(min(log_t2 - ivec[1], 0.0))
        if active[2]:
            s += math.exp(min(log_t12 - ivec[2], 0.0))
        total += math.exp(logp) * min(1.0, s)
    return BoundReport(
        name="ldpc-rcu-mac",
        value=min(total, 1.0),
        units="probability",
        method="exact-type-enum",
        n=n,
        num_messages=(m1, m2),
        components={
            "log_penalty_vector": (la1, la2, la1 + la2),
            "same_coset": same_coset,
            "log_num_messages": (log_m1, log_m2),
            "num_checks": (r1, r2),
            "tail_prefactors": tuple(float(f) for f in prefs),
        },
    )


def scaling_table(eps_grid) -> list[tuple[float, float, float]]:
    """Rows (epsilon, Qinv(epsilon), sqrt(ln(1/epsilon))) contrasting the
    dispersion-style and exponent-style back-off scales."""
    rows = []
    for eps in eps_grid:
        if not 0.0 < eps <= 0.5:
            raise ValueError(f"epsilon must be in (0, 1/2], got {eps}")
        rows.append((float(eps), q_inv(eps), math.sqrt(math.log(1.0 / eps))))
    return rows
