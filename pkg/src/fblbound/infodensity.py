"""Information-density tables and moment summaries for point-to-point and
two-user multiple-access channels.

All quantities are in nats.  An information density is ln of a likelihood
ratio; output symbols the channel cannot produce under a given input get a
-inf sentinel, and such zero-probability atoms are excluded from every
moment sum.  Third-order bound constants are built from the Berry-Esseen
constant 0.5583 for sums of independent (not necessarily identical) terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import DmcModel, InputPmf, MacModel

BERRY_ESSEEN_C0 = 0.5583

LN2 = math.log(2.0)


def output_pmf(dmc: DmcModel, pmf: InputPmf) -> np.ndarray:
    if pmf.size != dmc.input_size:
        raise ValueError(
            f"pmf over {pmf.size} symbols does not match |X|={dmc.input_size}"
        )
    return pmf.probs @ dmc.w


def info_density_table(dmc: DmcModel, pmf: InputPmf) -> np.ndarray:
    """Table i(x; y) = ln(W(y|x) / P_Y(y)), shape (|X|, |Y|).

    Entries with W(y|x) = 0 are -inf; entries where P_Y(y) = 0 while
    W(y|x) > 0 (possible only off the support of the input pmf) are +inf.
    Neither kind carries forward probability mass.
    """
    py = output_pmf(dmc, pmf)
    with np.errstate(divide="ignore", invalid="ignore"):
        table = np.log(dmc.w) - np.log(py)[None, :]
    table = np.where(dmc.w == 0, -np.inf, table)
    table = np.where((dmc.w > 0) & (py[None, :] == 0), np.inf, table)
    return table


@dataclass(frozen=True)
class MomentSet:
    """Moments of the single-letter information density under P_X x W.

    ``be_term`` is the Berry-Esseen ratio C0 * third_abs_moment /
    variance^{3/2}; ``tail_prefactor`` is the constant
    2 (ln2 / sqrt(2 pi variance) + 2 be_term) multiplying 1/sqrt(n) in the
    clipped-tail-expectation estimate.  Both are None when variance is 0.
    """

    mean: float
    variance: float
    cond_var_by_output: np.ndarray
    cond_var_min: float
    third_abs_moment: float
    be_term: float | None
    tail_prefactor: float | None


def _tail_constants(variance: float, third: float):
    if variance <= 0.0:
        return None, None
    be = BERRY_ESSEEN_C0 * third / variance**1.5
    pref = 2.0 * (LN2 / math.sqrt(2.0 * math.pi * variance) + 2.0 * be)
    return be, pref


def ppc_moments(dmc: DmcModel, pmf: InputPmf) -> MomentSet:
    """Mean, variance, per-output conditional variances, and third absolute
    moment of i(X;Y), plus the derived bound constants."""
    table = info_density_table(dmc, pmf)
    joint = pmf.probs[:, None] * dmc.w
    mask = joint > 0
    vals = np.where(mask, table, 0.0)
    mean = float(np.sum(joint * vals, where=mask))
    centered = np.where(mask, table - mean, 0.0)
    variance = float(np.sum(joint * centered**2, where=mask))
    third = float(np.sum(joint * np.abs(centered) ** 3, where=mask))
    py = joint.sum(axis=0)
    ny = dmc.output_size
    cond_var = np.full(ny, np.nan)
    for y in range(ny):
        if py[y] <= 0:
            continue
        pxy = joint[:, y] / py[y]
        m = mask[:, y]
        mu = float(np.sum(pxy * vals[:, y], where=m))
        cond_var[y] = float(np.sum(pxy * (np.where(m, table[:, y] - mu, 0.0)) ** 2, where=m))
    supported = cond_var[~np.isnan(cond_var)]
    cond_min = float(np.min(supported)) if supported.size else float("nan")
    be, pref = _tail_constants(variance, third)
    return MomentSet(
        mean=mean,
        variance=max(variance, 0.0),
        cond_var_by_output=cond_var,
        cond_var_min=cond_min,
        third_abs_moment=third,
        be_term=be,
        tail_prefactor=pref,
    )


@dataclass(frozen=True)
class MacMomentSet:
    """Moments of the two-user info-density vector
    (i(X1;Y|X2), i(X2;Y|X1), i(X1,X2;Y)).

    ``means`` and ``third_abs_moments`` are length-3 arrays in that order;
    ``cov`` is the 3x3 covariance; ``cond_var_by_output`` has shape (3, |Y|)
    with the variance of each coordinate conditional on Y=y (nan off the
    output support) and ``cond_var_min`` the per-coordinate minima;
    ``tail_prefactors`` are the per-coordinate 1/sqrt(n) constants (nan when
    the matching diagonal variance vanishes).
    """

    means: np.ndarray
    cov: np.ndarray
    third_abs_moments: np.ndarray
    cond_var_by_output: np.ndarray
    cond_var_min: np.ndarray
    tail_prefactors: np.ndarray


def mac_info_density_tables(mac: MacModel, pmf1: InputPmf, pmf2: InputPmf):
    """Conditional and joint info-density tables, each shape (|X1|,|X2|,|Y|):
    i(x1; y | x2), i(x2; y | x1), and i(x1 x2; y)."""
    if mac.num_users != 2:
        raise ValueError(f"need a 2-user MAC, got {mac.num_users} users")
    n1, n2 = mac.input_sizes
    if pmf1.size != n1 or pmf2.size != n2:
        raise ValueError("input pmf sizes do not match the MAC alphabets")
    w = mac.w
    # P(y|x2) averages over X1; P(y|x1) over X2; P(y) over both
    py_g2 = np.tensordot(pmf1.probs, w, axes=(0, 0))  # (|X2|, |Y|)
    py_g1 = np.tensordot(pmf2.probs, w, axes=(0, 1))  # (|X1|, |Y|)
    py = pmf2.probs @ py_g2
    with np.errstate(divide="ignore", invalid="ignore"):
        logw = np.log(w)
        i1 = logw - np.log(py_g2)[None, :, :]
        i2 = logw - np.log(py_g1)[:, None, :]
        i12 = logw - np.log(py)[None, None, :]
    neg = w == 0
    out = []
    for tab, denom in (
        (i1, np.broadcast_to(py_g2[None, :, :], w.shape)),
        (i2, np.broadcast_to(py_g1[:, None, :], w.shape)),
        (i12, np.broadcast_to(py[None, None, :], w.shape)),
    ):
        tab = np.where(neg, -np.inf, tab)
        tab = np.where(~neg & (denom == 0), np.inf, tab)
        out.append(tab)
    return tuple(out)


def mac_moments(mac: MacModel, pmf1: InputPmf, pmf2: InputPmf) -> MacMomentSet:
    """All first/second/third moments of the info-density vector by exact
    summation over (x1, x2, y) with independent inputs."""
    tables = mac_info_density_tables(mac, pmf1, pmf2)
    joint = pmf1.probs[:, None, None] * pmf2.probs[None, :, None] * mac.w
    mask = joint > 0
    means = np.zeros(3)
    for k, tab in enumerate(tables):
        means[k] = float(np.sum(joint * np.where(mask, tab, 0.0), where=mask))
    centered = [np.where(mask, tab - means[k], 0.0) for k, tab in enumerate(tables)]
    cov = np.zeros((3, 3))
    for a in range(3):
        for b in range(a, 3):
            cov[a, b] = cov[b, a] = float(
                np.sum(joint * centered[a] * centered[b], where=mask)
            )
    thirds = np.array(
        [float(np.sum(joint * np.abs(c) ** 3, where=mask)) for c in centered]
    )
    py = joint.sum(axis=(0, 1))
    ny = mac.output_size
    cond_var = np.full((3, ny), np.nan)
    for y in range(ny):
        if py[y] <= 0:
            continue
        pxy = joint[:, :, y] / py[y]
        m = mask[:, :, y]
        for k, tab in enumerate(tables):
            mu = float(np.sum(pxy * np.where(m, tab[:, :, y], 0.0), where=m))
            dev = np.where(m, tab[:, :, y] - mu, 0.0)
            cond_var[k, y] = float(np.sum(pxy * dev**2, where=m))
    cond_min = np.array(
        [
            float(np.nanmin(cond_var[k])) if np.any(~np.isnan(cond_var[k])) else np.nan
            for k in range(3)
        ]
    )
    prefs = np.full(3, np.nan)
    for k in range(3):
        _, pref = _tail_constants(float(cov[k, k]), float(thirds[k]))
        if pref is not None:
            prefs[k] = pref
    return MacMomentSet(
        means=means,
        cov=cov,
        third_abs_moments=thirds,
        cond_var_by_output=cond_var,
        cond_var_min=cond_min,
        tail_prefactors=prefs,
    )


def dispersion_upper_bound(dmc: DmcModel, c_nats: float | None = None) -> float:
    """Channel-independent cap on the dispersion, in nats^2.

    Equals 2 ln^2(min{|X|,|Y|}) - C^2 when min{|X|,|Y|} > 2, and
    1.2 - C^2 otherwise (the binary-alphabet constant 1.2 log2^2(e) bits^2
    is exactly 1.2 nats^2).
    """
    if c_nats is None:
        from .channel import capacity

        c_nats, _ = capacity(dmc, tol=1e-10)
    m = min(dmc.input_size, dmc.output_size)
    if m > 2:
        return 2.0 * math.log(m) ** 2 - c_nats**2
    return 1.2 - c_nats**2
