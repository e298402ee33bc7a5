"""Goodness-of-fit test orchestration.

A test fits the model, builds the observed residual process for the
chosen ordering, generates ``K`` null replicates (outcome, refit,
ordering keys recomputed from the refit, standardization by the
replicate's own residual scale) and reports the Monte-Carlo p-value
``(1 + #{T^k >= T}) / (K + 1)``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd

from .exceptions import DegenerateVariance, InvalidParams, NoTraces, TooLarge
from .linreg import Dataset, degenerate_sigma, fit_ols
from .nullgen import (
    EXHAUSTIVE_MAX_N,
    NullMethod,
    PermuteResiduals,
    all_permutations,
    outcome_batch,
)
from .process import (
    FullModel,
    OrderingKey,
    ResidualProcess,
    _check_ordering,
    batch_ordering_values,
    batch_statistics,
    build_process,
    cvm_statistic,
    ks_statistic,
    ordering_values,
    zero_process,
)

__all__ = [
    "STATISTICS",
    "TestSpec",
    "GofTestResult",
    "run_test",
    "run_tests",
    "exhaustive_test",
    "envelope",
    "permutation_pvalue",
    "default_workers",
]

STATISTICS = ("ks", "cvm")

# Replicate statistics this close (relative) to the observed one are
# treated as ties; refitting reproduces T only up to rounding.
TIE_RTOL = 1e-10

# Target number of float64 elements per replicate block.
_BLOCK_ELEMENTS = 1 << 18


def default_workers() -> int:
    """Worker count from ``GOFPERM_WORKERS`` (default 1).  Affects speed only."""
    try:
        return max(1, int(os.environ.get("GOFPERM_WORKERS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class TestSpec:
    """Configuration of one goodness-of-fit test.

    ``reorder_by_original`` orders refitted replicate residuals by the
    observed-fit ordering values instead of the replicate's own.
    """

    __test__ = False  # not a pytest class

    ordering: OrderingKey = field(default_factory=FullModel)
    statistic: str = "cvm"
    method: NullMethod = field(default_factory=PermuteResiduals)
    n_perms: int = 1000
    master_seed: int = 0
    collect_traces: int = 0
    reorder_by_original: bool = False

    def __post_init__(self):
        if self.statistic not in STATISTICS:
            raise InvalidParams(f"statistic must be one of {STATISTICS}", "statistic")
        if int(self.n_perms) < 1:
            raise InvalidParams("n_perms must be >= 1", "n_perms")
        if not 0 <= int(self.collect_traces) <= int(self.n_perms):
            raise InvalidParams("collect_traces must lie in [0, n_perms]", "collect_traces")


@dataclass(frozen=True, eq=False)
class GofTestResult:
    """Outcome of a goodness-of-fit test for one statistic."""

    statistic: str
    t_observed: float
    t_replicates: np.ndarray
    p_value: float
    observed_process: ResidualProcess
    replicate_traces: tuple[ResidualProcess, ...]
    spec: TestSpec
    exhaustive: bool = False

    @property
    def n_replicates(self) -> int:
        return self.t_replicates.shape[0]


def permutation_pvalue(t_observed: float, t_replicates) -> float:
    """``(1 + #{t_replicates >= t_observed}) / (K + 1)``."""
    t = np.asarray(t_replicates, dtype=float)
    return (1 + int(np.count_nonzero(t >= t_observed))) / (t.size + 1)


def _observed(data: Dataset, ordering: OrderingKey):
    fit = fit_ols(data)
    if fit.is_degenerate():
        raise DegenerateVariance(
            "residual standard deviation is zero (exact fit); the residual process is undefined"
        )
    keys = ordering_values(fit, data, ordering)
    proc = build_process(fit.residuals, keys, fit.sigma_hat)
    return fit, keys, proc


def _replicate_block(data, fit, obs_keys, spec: TestSpec, Y: np.ndarray, n_traces: int):
    """Statistics (and optionally processes) for a block of replicate outcomes."""
    design = data.design
    coef, fitted, resid, sigma = design.fit_batch(Y)
    if spec.reorder_by_original:
        keys = obs_keys
    else:
        keys = batch_ordering_values(spec.ordering, data.X, coef, fitted)
    bad = degenerate_sigma(sigma, np.max(np.abs(Y), axis=1))
    safe = np.where(bad, 1.0, sigma)
    ks, cvm = batch_statistics(resid, keys, safe)
    ks[bad] = 0.0
    cvm[bad] = 0.0
    traces = []
    for b in range(min(n_traces, Y.shape[0])):
        kb = keys if keys.ndim == 1 else keys[b]
        traces.append(zero_process(kb) if bad[b] else build_process(resid[b], kb, sigma[b]))
    return np.column_stack([ks, cvm]), traces


def _snap(t_obs: float, t_rep: np.ndarray) -> np.ndarray:
    t_rep = t_rep.copy()
    t_rep[np.abs(t_rep - t_obs) <= TIE_RTOL * abs(t_obs)] = t_obs
    return t_rep


def run_tests(
    data: Dataset,
    spec: TestSpec,
    statistics=STATISTICS,
    workers: int | None = None,
) -> dict[str, GofTestResult]:
    """Run the test for several statistics sharing the same replicates.

    Parameters
    ----------
    data : Dataset
    spec : TestSpec
        ``spec.statistic`` is ignored in favour of ``statistics``.
    statistics : sequence of {"ks", "cvm"}
    workers : int, optional
        Threads used for replicate blocks; defaults to ``GOFPERM_WORKERS``.
        Results do not depend on it.

    Returns
    -------
    dict mapping statistic name to :class:`GofTestResult`.
    """
    _check_ordering(spec.ordering, data.p)
    fit, obs_keys, obs_proc = _observed(data, spec.ordering)
    t_obs = np.array([ks_statistic(obs_proc), cvm_statistic(obs_proc)])

    K = int(spec.n_perms)
    M = int(spec.collect_traces)
    block = max(1, min(K, _BLOCK_ELEMENTS // data.n))
    starts = list(range(1, K + 1, block))
    workers = default_workers() if workers is None else max(1, int(workers))

    def work(start: int):
        idx = np.arange(start, min(start + block, K + 1))
        Y = outcome_batch(spec.method, fit, data, spec.master_seed, idx)
        n_tr = max(0, min(M - (start - 1), idx.size))
        return _replicate_block(data, fit, obs_keys, spec, Y, n_tr)

    if workers == 1 or len(starts) == 1:
        parts = [work(s) for s in starts]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, starts))
    t_rep = np.concatenate([p[0] for p in parts], axis=0)
    traces = tuple(tr for p in parts for tr in p[1])

    out = {}
    for name in statistics:
        col = STATISTICS.index(name)
        reps = _snap(t_obs[col], t_rep[:, col])
        reps.setflags(write=False)
        out[name] = GofTestResult(
            statistic=name,
            t_observed=float(t_obs[col]),
            t_replicates=reps,
            p_value=permutation_pvalue(t_obs[col], reps),
            observed_process=obs_proc,
            replicate_traces=traces,
            spec=replace(spec, statistic=name),
        )
    return out


def run_test(data: Dataset, spec: TestSpec, workers: int | None = None) -> GofTestResult:
    """Run the goodness-of-fit test described by ``spec``.

    Raises
    ------
    DegenerateVariance
        If the observed fit is exact.
    """
    return run_tests(data, spec, (spec.statistic,), workers)[spec.statistic]


def exhaustive_test(
    data: Dataset,
    ordering: OrderingKey = FullModel(),
    statistic: str = "cvm",
    collect_traces: int = 0,
    reorder_by_original: bool = False,
) -> GofTestResult:
    """Permutation test over all ``n!`` residual permutations.

    The p-value is ``#{pi : T^pi >= T} / n!``; the identity permutation is
    part of the group, so ``p >= 1/n!``.
    """
    if data.n > EXHAUSTIVE_MAX_N:
        raise TooLarge(f"exhaustive test limited to n <= {EXHAUSTIVE_MAX_N}, got n={data.n}")
    _check_ordering(ordering, data.p)
    perms = all_permutations(data.n)
    spec = TestSpec(
        ordering=ordering,
        statistic=statistic,
        method=PermuteResiduals(),
        n_perms=perms.shape[0],
        collect_traces=collect_traces,
        reorder_by_original=reorder_by_original,
    )
    fit, obs_keys, obs_proc = _observed(data, ordering)
    col = STATISTICS.index(statistic)
    t_obs = (ks_statistic(obs_proc), cvm_statistic(obs_proc))[col]
    Y = fit.fitted + fit.residuals[perms]
    stats, traces = _replicate_block(data, fit, obs_keys, spec, Y, collect_traces)
    reps = _snap(t_obs, stats[:, col])
    reps.setflags(write=False)
    p = int(np.count_nonzero(reps >= t_obs)) / math.factorial(data.n)
    return GofTestResult(
        statistic=statistic,
        t_observed=float(t_obs),
        t_replicates=reps,
        p_value=p,
        observed_process=obs_proc,
        replicate_traces=tuple(traces),
        spec=spec,
        exhaustive=True,
    )


def envelope(result: GofTestResult) -> pd.DataFrame:
    """Long table ``replicate_id, key, cum`` of retained processes.

    ``replicate_id`` 0 is the observed process; ``1..M`` are the first
    ``M`` replicates.

    Raises
    ------
    NoTraces
        If the test retained no replicate processes.
    """
    if not result.replicate_traces:
        raise NoTraces("no replicate processes retained; set collect_traces > 0")
    procs = (result.observed_process,) + tuple(result.replicate_traces)
    ids = np.concatenate([np.full(p.m, i, dtype=np.int64) for i, p in enumerate(procs)])
    return pd.DataFrame(
        {
            "replicate_id": ids,
            "key": np.concatenate([p.keys for p in procs]),
            "cum": np.concatenate([p.cum for p in procs]),
        }
    )
