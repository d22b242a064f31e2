"""NumPy implementations of the sparse-state kernels.

Same signatures as the compiled ``_ckernels`` module; used when the
extension is not built or when ``GRWFUZZY_PURE_PYTHON`` is set.
"""

import math

import numpy as np

NEG_INF = -math.inf


def log_total_mass(logm):
    """log(sum(exp(2*logm))) with max shifting."""
    logm = np.asarray(logm, dtype=np.float64)
    if logm.size == 0:
        return NEG_INF
    m = float(logm.max())
    if m == NEG_INF:
        return NEG_INF
    return 2.0 * m + math.log(float(np.exp(2.0 * (logm - m)).sum()))


def grouped_log_mass(keys, logm, n_groups):
    """Per-group log of summed squared modulus; empty groups give -inf.

    Each group is shifted by its own maximum so a group far below the
    global maximum keeps a finite value.
    """
    keys = np.asarray(keys, dtype=np.int64)
    logm = np.asarray(logm, dtype=np.float64)
    gmax = np.full(n_groups, NEG_INF)
    np.maximum.at(gmax, keys, logm)
    shift = gmax[keys]
    finite = np.isfinite(logm)
    contrib = np.zeros_like(logm)
    contrib[finite] = np.exp(2.0 * (logm[finite] - shift[finite]))
    sums = np.bincount(keys, weights=contrib, minlength=n_groups)
    out = np.full(n_groups, NEG_INF)
    ok = np.isfinite(gmax) & (sums > 0)
    out[ok] = 2.0 * gmax[ok] + np.log(sums[ok])
    return out


def _logsumexp(values):
    m = max(values)
    if m == NEG_INF:
        return NEG_INF
    return m + math.log(math.fsum(math.exp(v - m) for v in values))


def hit_update(labels, logm, n_labels, u, log_eps, corrected, log_ceiling, log1m_ceiling):
    """Apply one localization hit to the subsystem whose codes are ``labels``.

    The hit center is the first present label whose normalized cumulative
    weight exceeds ``u``. Terms with another label lose ``log_eps`` of log
    squared mass; the state is renormalized; if ``log_ceiling`` is finite the
    center label's mass is capped at exp(log_ceiling).

    Returns ``(new_logm, center, pre_dominant_log_mass, post_dominant_log_mass)``.
    """
    labels = np.asarray(labels, dtype=np.int64)
    logm = np.asarray(logm, dtype=np.float64)
    lm = grouped_log_mass(labels, logm, n_labels).tolist()
    total = _logsumexp(lm)
    if total == NEG_INF:
        raise ValueError("hit on a state with zero norm")
    frac = [math.exp(v - total) for v in lm]
    present = [i for i in range(n_labels) if lm[i] > NEG_INF]
    if corrected:
        weights = [frac[i] + math.exp(log_eps) * (1.0 - frac[i]) for i in present]
    else:
        weights = [frac[i] for i in present]
    wsum = sum(weights)
    center = present[-1]
    acc = 0.0
    for i, w in zip(present, weights):
        acc += w / wsum
        if u < acc:
            center = i
            break
    pre_dom = max(lm) - total

    shift = [0.0 if i == center else log_eps for i in range(n_labels)]
    lm2 = [v + s for v, s in zip(lm, shift)]
    total2 = _logsumexp(lm2)
    shift = [s - total2 for s in shift]
    lm2 = [v - total2 for v in lm2]

    if log_ceiling < 0.0 and lm2[center] > log_ceiling:
        others = [lm2[i] for i in range(n_labels) if i != center]
        log_rest = _logsumexp(others) if others else NEG_INF
        if log_rest > NEG_INF:
            up = log1m_ceiling - log_rest
            down = log_ceiling - lm2[center]
            for i in range(n_labels):
                d = down if i == center else up
                shift[i] += d
                lm2[i] += d

    new_logm = logm + 0.5 * np.asarray(shift)[labels]
    return new_logm, center, pre_dom, max(lm2)
