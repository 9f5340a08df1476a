"""Alias tables for O(1) sampling from categorical distributions.

Vose's construction: each of the K slots holds a cutoff probability and an
alias index.  A draw takes two uniforms, one to pick the slot and one to
choose between the slot's own outcome and its alias.
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def build_alias(weights, prob, alias):
    """Fill ``prob``/``alias`` (length K) from non-negative ``weights``.

    Deterministic: ties and the small/large worklists are processed in
    fixed index order.  The caller allocates the output arrays so the
    builder can run inside larger jitted loops without allocating.
    """
    K = weights.shape[0]
    total = 0.0
    for i in range(K):
        total += weights[i]
    small = np.empty(K, dtype=np.int64)
    large = np.empty(K, dtype=np.int64)
    ns = 0
    nl = 0
    for i in range(K):
        prob[i] = weights[i] * K / total
        alias[i] = i
        if prob[i] < 1.0:
            small[ns] = i
            ns += 1
        else:
            large[nl] = i
            nl += 1
    while ns > 0 and nl > 0:
        ns -= 1
        nl -= 1
        s = small[ns]
        l = large[nl]
        alias[s] = l
        prob[l] = (prob[l] + prob[s]) - 1.0
        if prob[l] < 1.0:
            small[ns] = l
            ns += 1
        else:
            large[nl] = l
            nl += 1
    while nl > 0:
        nl -= 1
        prob[large[nl]] = 1.0
    while ns > 0:
        ns -= 1
        prob[small[ns]] = 1.0


def make_alias(weights):
    """Build an alias table, returning ``(prob, alias)`` arrays."""
    weights = np.asarray(weights, dtype=np.float64)
    if weights.ndim != 1 or weights.size == 0:
        raise ValueError("weights must be a non-empty 1-D array")
    if np.any(weights < 0) or not np.all(np.isfinite(weights)):
        raise ValueError("weights must be finite and non-negative")
    if weights.sum() <= 0:
        raise ValueError("weights must not all be zero")
    prob = np.empty(weights.size, dtype=np.float64)
    alias = np.empty(weights.size, dtype=np.int64)
    build_alias(weights, prob, alias)
    return prob, alias


def alias_sample(prob, alias, rng, size):
    """Draw ``size`` outcomes from an alias table using ``rng``."""
    K = prob.shape[0]
    slots = rng.integers(0, K, size=size)
    coins = rng.random(size)
    return np.where(coins < prob[slots], slots, alias[slots])


def alias_probs(prob, alias):
    """Exact outcome distribution encoded by an alias table.

    Inverts the table: outcome i receives prob[i]/K from its own slot plus
    (1 - prob[j])/K from every slot j aliased to it.  Used to validate the
    sampler against the weights it was built from.
    """
    K = prob.shape[0]
    out = prob.copy()
    np.add.at(out, alias, 1.0 - prob)
    return out / K
