"""Closed-form power-law degree machinery and walk-budget predictions.

Continuum approximation throughout: the degree distribution is the density
P(k) = (gamma - 1) * k_min^(gamma - 1) * k^(-gamma) on [k_min, inf), the
expected maximum degree of an N-node sample is k_min * N^(1/(gamma - 1)), and
the finite-band average degree integrates k * P(k) between k_min and k_max.
As N grows (2 < gamma < 3) the average degree approaches
(gamma - 1)/(gamma - 2) * k_min, which ties the degree-proportional walk
budget NWPD * N * <k> to the minimum degree.  Empirical graph accounting uses
the exact integer degree sum (N * <k> = 2|E|).
"""

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple


@dataclass(frozen=True)
class ScaleFreeParams:
    gamma: float
    k_min: float
    n_nodes: int

    def __post_init__(self):
        if self.gamma <= 1:
            raise ValueError("gamma must exceed 1 for a normalizable density")
        if self.k_min < 1:
            raise ValueError("k_min must be >= 1")
        if self.n_nodes < 1:
            raise ValueError("n_nodes must be >= 1")


def degree_pdf(k, params):
    """Power-law density at degree k; normalized over [k_min, inf)."""
    if k < params.k_min:
        raise ValueError(f"k={k} below k_min={params.k_min}")
    g = params.gamma
    return (g - 1.0) * params.k_min ** (g - 1.0) * k ** (-g)


def expected_max_degree(params):
    """Largest degree expected among n_nodes samples: k_min * N^(1/(gamma-1))."""
    return params.k_min * params.n_nodes ** (1.0 / (params.gamma - 1.0))


class AvgDegree(NamedTuple):
    value: float
    log_form: bool


def expected_avg_degree(params, k_max):
    """Average degree over the band [k_min, k_max].

    Closed form (gamma - 1) * k_min^(gamma-1) * (k_max^(2-gamma) -
    k_min^(2-gamma)) / (2 - gamma); at gamma == 2 the antiderivative is
    logarithmic and the result carries log_form=True.
    """
    g, kmin = params.gamma, params.k_min
    if k_max < kmin:
        raise ValueError("k_max must be >= k_min")
    if g == 2.0:
        return AvgDegree(kmin * math.log(k_max / kmin), True)
    value = (g - 1.0) * kmin ** (g - 1.0) * (k_max ** (2.0 - g) - kmin ** (2.0 - g)) / (2.0 - g)
    return AvgDegree(value, False)


def asymptotic_avg_degree(params):
    """Large-N limit of the average degree: (gamma-1)/(gamma-2) * k_min."""
    g = params.gamma
    if g <= 2:
        raise ValueError("asymptotic average degree requires gamma > 2")
    if not (2 < g < 3):
        warnings.warn(f"gamma={g} outside the scale-free regime (2, 3)", stacklevel=2)
    return (g - 1.0) / (g - 2.0) * params.k_min


def predicted_total_walks(walks_per_degree, g):
    """Degree-proportional walk budget NWPD * N * <k> = NWPD * sum of degrees."""
    if walks_per_degree < 1:
        raise ValueError("walks_per_degree must be >= 1")
    return int(walks_per_degree) * int(g.degrees.sum())


def scalefree_rows(gammas, k_min, n_grid):
    """Grid evaluation backing the `analyze scalefree` CSV.

    Columns: N, gamma, k_min, k_max_pred, avg_k_finite, avg_k_asymptotic,
    tnw_per_nwpd, log_form.  avg_k_asymptotic is blank for gamma <= 2 where
    the limit diverges.
    """
    rows = []
    for gamma in gammas:
        for n in n_grid:
            params = ScaleFreeParams(gamma=gamma, k_min=k_min, n_nodes=n)
            k_max = expected_max_degree(params)
            avg = expected_avg_degree(params, k_max)
            if gamma > 2:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    asym = asymptotic_avg_degree(params)
            else:
                asym = None
            rows.append({
                "N": n,
                "gamma": gamma,
                "k_min": k_min,
                "k_max_pred": k_max,
                "avg_k_finite": avg.value,
                "avg_k_asymptotic": asym,
                "tnw_per_nwpd": n * avg.value,
                "log_form": avg.log_form,
            })
    return rows
