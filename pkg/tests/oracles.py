"""Plain complex-vector references used to cross-check the log-domain code.

Nothing here imports grwfuzzy; these are direct transcriptions of the
hit rule and the product expansion in ordinary floating point.
"""

import itertools
import math

import numpy as np


def dense_product(amps):
    """Kronecker product of per-marble (a_in, a_out) pairs as a dict."""
    out = {}
    for labels in itertools.product(("in", "out"), repeat=len(amps)):
        z = 1.0 + 0j
        for (a, b), lab in zip(amps, labels):
            z *= a if lab == "in" else b
        if z != 0:
            out[labels] = z
    return out


def dense_hit(vec, axis, center, eps):
    """Multiply off-center branches by sqrt(eps), renormalize."""
    out = {}
    for cfg, z in vec.items():
        out[cfg] = z if cfg[axis] == center else z * math.sqrt(eps)
    norm = math.sqrt(sum(abs(z) ** 2 for z in out.values()))
    return {cfg: z / norm for cfg, z in out.items()}


def label_probs(vec, axis):
    probs = {}
    for cfg, z in vec.items():
        probs[cfg[axis]] = probs.get(cfg[axis], 0.0) + abs(z) ** 2
    return probs


def marginals(vec, n):
    """Per-axis squared mass of 'in'."""
    return [label_probs(vec, k).get("in", 0.0) for k in range(n)]


def total_variation(p, q):
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


def gaussian_density_std(x, rho, dx):
    mu = np.sum(x * rho) * dx
    return math.sqrt(np.sum((x - mu) ** 2 * rho) * dx)
