"""Stochastic sampling of measurement-engine cycles.

One cycle: prepare the interacting ground state |0(lam)>, project it onto
the local eigenbasis (the measurement that powers the engine), record

* work   = E_n(0) - E_0(0)   (local energy gained over the bare ground)
* heat   = E_n(0) - E_0(lam) (energy injected by the measurement),

then reset. Work and heat differ by the constant Delta, so their variances
coincide; the exact outcome distribution is p_n = |<n(0)|0(lam)>|^2,
i.e. the squared ground-state amplitudes in the computational basis.

Sampling is inverse-CDF on that distribution, organized in fixed-size
blocks whose generators are spawned from one seed sequence. Each block is
reduced to an outcome histogram; every statistic is then derived from the
merged histogram, so results are bitwise independent of block execution
order and of the number of workers.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.stats

from .eigensolve import GroundSolution
from .errors import RouteMismatchError
from .model import OperatorPair

PROB_TOL = 1e-9
DEFAULT_BLOCK = 1 << 16


@dataclass(frozen=True, eq=False)
class CycleStats:
    """Merged sampling statistics for one (model, lam, seed) run.

    Variances are population-style (ddof=0): a single cycle has zero
    variance rather than an undefined one. ``se_var`` uses the fourth-moment
    formula Var(s^2) = (m4 - s^4 (n-3)/(n-1)) / n.
    """

    n_samples: int
    seed: int
    mean_work: float
    var_work: float
    mean_heat: float
    se_work: float
    se_heat: float
    se_var: float
    histogram: dict
    n_blocks: int
    block_size: int


def outcome_probabilities(ground: GroundSolution) -> np.ndarray:
    """Exact measurement-outcome distribution |<n(0)|0(lam)>|^2."""
    p = ground.vector**2
    total = float(p.sum())
    if abs(total - 1.0) > PROB_TOL:
        raise RouteMismatchError(
            f"outcome probabilities sum to {total!r}, not 1: state not normalized"
        )
    return p


def exact_outcome_distribution(ground: GroundSolution, ops: OperatorPair):
    """(probabilities, work values, heat values) per basis outcome.

    The exact mean work over this distribution equals lam*Delta' - Delta and
    the variance equals sigma^2: the sampler is mean- and variance-faithful
    by construction, which the tests pin down numerically.
    """
    p = outcome_probabilities(ground)
    e0_local = float(ops.local_energies[0])
    work_vals = ops.h_loc_diag - e0_local
    heat_vals = ops.h_loc_diag - ground.energy
    return p, work_vals, heat_vals


def outcome_moments(ground: GroundSolution, ops: OperatorPair):
    """Exact (mean_work, var_work, mean_heat) of the outcome distribution."""
    p, work_vals, heat_vals = exact_outcome_distribution(ground, ops)
    mean_w = float(p @ work_vals)
    var_w = float(p @ (work_vals - mean_w) ** 2)
    mean_q = float(p @ heat_vals)
    return mean_w, var_w, mean_q


def sample_cycle(ground: GroundSolution, ops: OperatorPair, rng: np.random.Generator):
    """Draw one cycle; returns (outcome_index, work, heat)."""
    p, work_vals, heat_vals = exact_outcome_distribution(ground, ops)
    cdf = np.cumsum(p)
    idx = int(np.searchsorted(cdf, rng.random(), side="right"))
    idx = min(idx, ops.dim - 1)
    return idx, float(work_vals[idx]), float(heat_vals[idx])


def _block_counts(cdf, dim, child_seed, size):
    rng = np.random.Generator(np.random.PCG64(child_seed))
    idx = np.searchsorted(cdf, rng.random(size), side="right")
    np.minimum(idx, dim - 1, out=idx)
    return np.bincount(idx, minlength=dim)


def run_cycles(
    ground: GroundSolution,
    ops: OperatorPair,
    n_cycles: int,
    *,
    seed: int,
    block_size: int = DEFAULT_BLOCK,
    workers: int = 1,
) -> CycleStats:
    """Sample ``n_cycles`` measurement cycles and merge the statistics.

    The seed expands into one child generator per block via SeedSequence
    spawning; block results are integer histograms, so the merged statistics
    do not depend on worker count or completion order.
    """
    if n_cycles < 1:
        raise ValueError("n_cycles must be positive")
    p, work_vals, heat_vals = exact_outcome_distribution(ground, ops)
    cdf = np.cumsum(p)
    sizes = [block_size] * (n_cycles // block_size)
    if n_cycles % block_size:
        sizes.append(n_cycles % block_size)
    children = np.random.SeedSequence(seed).spawn(len(sizes))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(
                pool.map(
                    lambda args: _block_counts(cdf, ops.dim, *args),
                    zip(children, sizes),
                )
            )
    else:
        partials = [_block_counts(cdf, ops.dim, c, s) for c, s in zip(children, sizes)]
    counts = np.sum(partials, axis=0)

    n = float(n_cycles)
    mean_w = float(counts @ work_vals) / n
    centered = work_vals - mean_w
    m2 = float(counts @ centered**2) / n
    m4 = float(counts @ centered**4) / n
    mean_q = float(counts @ heat_vals) / n
    centered_q = heat_vals - mean_q
    m2q = float(counts @ centered_q**2) / n
    if n_cycles >= 2:
        var_of_var = (m4 - m2**2 * (n - 3.0) / (n - 1.0)) / n
        se_var = float(np.sqrt(max(var_of_var, 0.0)))
    else:
        se_var = 0.0
    nz = np.nonzero(counts)[0]
    return CycleStats(
        n_samples=n_cycles,
        seed=seed,
        mean_work=mean_w,
        var_work=m2,
        mean_heat=mean_q,
        se_work=float(np.sqrt(m2 / n)),
        se_heat=float(np.sqrt(m2q / n)),
        se_var=se_var,
        histogram={int(i): int(counts[i]) for i in nz},
        n_blocks=len(sizes),
        block_size=block_size,
    )


@dataclass(frozen=True)
class Chi2Result:
    statistic: float
    dof: int
    pvalue: float
    bins: int
    impossible_outcomes: int


def outcome_chi_square(
    stats: CycleStats, p: np.ndarray, *, min_expected: float = 5.0
) -> Chi2Result:
    """Pearson goodness-of-fit of sampled outcomes against exact weights.

    Expected counts below ``min_expected`` are pooled into one bin.
    Outcomes with exactly zero probability must have zero counts; observing
    one is reported instead of being folded into the statistic.
    """
    n = stats.n_samples
    counts = np.zeros(len(p))
    for i, c in stats.histogram.items():
        counts[i] = c
    impossible = int(np.sum(counts[p == 0] > 0))
    live = p > 0
    expected = p[live] * n
    observed = counts[live]
    order = np.argsort(expected)[::-1]
    expected, observed = expected[order], observed[order]
    big = expected >= min_expected
    exp_bins = list(expected[big])
    obs_bins = list(observed[big])
    tail_exp = float(np.sum(expected[~big]))
    tail_obs = float(np.sum(observed[~big]))
    if tail_exp > 0:
        if exp_bins and tail_exp < min_expected:
            exp_bins[-1] += tail_exp
            obs_bins[-1] += tail_obs
        else:
            exp_bins.append(tail_exp)
            obs_bins.append(tail_obs)
    exp_arr = np.array(exp_bins)
    obs_arr = np.array(obs_bins)
    stat = float(np.sum((obs_arr - exp_arr) ** 2 / exp_arr))
    dof = max(len(exp_bins) - 1, 1)
    pvalue = float(scipy.stats.chi2.sf(stat, dof))
    return Chi2Result(
        statistic=stat,
        dof=dof,
        pvalue=pvalue,
        bins=len(exp_bins),
        impossible_outcomes=impossible,
    )
