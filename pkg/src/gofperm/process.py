"""Cumulative-sum residual process and its KS / CvM functionals.

For residuals ``e`` ordered by a key ``k`` (fitted values, a covariate,
or a partial linear predictor) the process is

    W(t) = sum_i e_i * I(k_i <= t) / sqrt(n * sigma**2)

which is a right-continuous step function.  Observations with equal keys
cannot be separated by any ``t``, so they form a single jump.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np
from scipy.linalg import solve_triangular

from .exceptions import DegenerateVariance, IndexOutOfRange, InvalidDesign
from .linreg import Dataset, FitResult, OLSDesign

__all__ = [
    "FullModel",
    "Covariate",
    "Subset",
    "OrderingKey",
    "ResidualProcess",
    "ordering_values",
    "build_process",
    "zero_process",
    "ks_statistic",
    "cvm_statistic",
    "batch_statistics",
    "plugin_covariance",
    "parse_ordering",
]


@dataclass(frozen=True)
class FullModel:
    """Order residuals by the fitted values."""

    def label(self, names=None) -> str:
        return "full"


@dataclass(frozen=True)
class Covariate:
    """Order residuals by column ``index`` of the design (1-based, intercept is 0)."""

    index: int

    def label(self, names=None) -> str:
        if names is not None:
            return f"covariate:{names[self.index]}"
        return f"covariate:{self.index}"


@dataclass(frozen=True)
class Subset:
    """Order residuals by the partial linear predictor over ``indices``."""

    indices: tuple[int, ...]

    def __init__(self, indices: Iterable[int]):
        object.__setattr__(self, "indices", tuple(sorted(set(int(j) for j in indices))))

    def label(self, names=None) -> str:
        if names is not None:
            return "subset:" + ",".join(names[j] for j in self.indices)
        return "subset:" + ",".join(str(j) for j in self.indices)


OrderingKey = Union[FullModel, Covariate, Subset]


def _check_ordering(key: OrderingKey, p: int) -> None:
    if isinstance(key, FullModel):
        return
    if isinstance(key, Covariate):
        idx: tuple[int, ...] = (key.index,)
    elif isinstance(key, Subset):
        idx = key.indices
        if not idx:
            raise IndexOutOfRange("subset ordering needs at least one covariate")
    else:
        raise TypeError(f"not an ordering key: {key!r}")
    bad = [j for j in idx if not 1 <= j <= p - 1]
    if bad:
        raise IndexOutOfRange(
            f"covariate index {bad[0]} outside 1..{p - 1} (column 0 is the intercept)"
        )


def parse_ordering(target: str, names: tuple[str, ...]) -> OrderingKey:
    """Parse ``full``, ``covariate:<name>`` or ``subset:<name>,<name>``."""
    if target == "full":
        return FullModel()
    kind, _, rest = target.partition(":")
    cols = [c.strip() for c in rest.split(",") if c.strip()]
    lookup = {c: j for j, c in enumerate(names)}
    try:
        idx = [lookup[c] for c in cols]
    except KeyError as err:
        raise IndexOutOfRange(f"unknown covariate {err.args[0]!r} in target {target!r}")
    if kind == "covariate" and len(idx) == 1:
        key: OrderingKey = Covariate(idx[0])
    elif kind == "subset" and idx:
        key = Subset(idx)
    else:
        raise InvalidDesign(
            f"target must be full, covariate:<name> or subset:<names>, got {target!r}"
        )
    _check_ordering(key, len(names))
    return key


def ordering_values(fit: FitResult, data: Dataset, key: OrderingKey) -> np.ndarray:
    """Per-observation ordering values for ``key``.

    Subset keys use the coefficients of the supplied fit, so a refitted
    replicate gets its own partial predictor.
    """
    _check_ordering(key, data.p)
    if isinstance(key, FullModel):
        return np.array(fit.fitted)
    if isinstance(key, Covariate):
        return np.array(data.X[:, key.index])
    J = list(key.indices)
    return data.X[:, J] @ fit.theta_hat[J]


def batch_ordering_values(
    key: OrderingKey, X: np.ndarray, coef: np.ndarray, fitted: np.ndarray
) -> np.ndarray:
    """Ordering values for a block of refits.

    Returns shape (B, n), or shape (n,) for covariate keys which do not
    depend on the fit.
    """
    if isinstance(key, FullModel):
        return fitted
    if isinstance(key, Covariate):
        return X[:, key.index]
    J = list(key.indices)
    return coef[:, J] @ X[:, J].T


@dataclass(frozen=True, eq=False)
class ResidualProcess:
    """Step-function representation of the standardized residual process.

    Attributes
    ----------
    keys : ndarray, shape (m,)
        Strictly increasing distinct ordering values.
    cum : ndarray, shape (m,)
        Process value on ``[keys[j], keys[j+1])``.
    mult : ndarray of int, shape (m,)
        Number of observations tied at each key; sums to ``n``.
    n : int
    sigma_used : float
    """

    keys: np.ndarray
    cum: np.ndarray
    mult: np.ndarray
    n: int
    sigma_used: float

    @property
    def m(self) -> int:
        return self.keys.shape[0]

    def __call__(self, t):
        """Evaluate the process at ``t`` (zero left of the first key)."""
        t = np.asarray(t, dtype=float)
        j = np.searchsorted(self.keys, t, side="right") - 1
        out = np.where(j >= 0, self.cum[np.clip(j, 0, None)], 0.0)
        return out if out.ndim else float(out)


def build_process(residuals, keys_raw, sigma: float) -> ResidualProcess:
    """Standardized cumulative sum of ``residuals`` ordered by ``keys_raw``.

    Raises
    ------
    DegenerateVariance
        If ``sigma`` is not a finite positive number.
    """
    e = np.asarray(residuals, dtype=float)
    k = np.asarray(keys_raw, dtype=float)
    if e.ndim != 1 or e.shape != k.shape or e.size == 0:
        raise InvalidDesign("residuals and keys must be 1-d arrays of equal, nonzero length")
    if not (np.all(np.isfinite(e)) and np.all(np.isfinite(k))):
        raise InvalidDesign("residuals and keys must be finite")
    if not (np.isfinite(sigma) and sigma > 0):
        raise DegenerateVariance(f"residual scale must be positive, got {sigma!r}")
    n = e.size
    order = np.argsort(k, kind="stable")
    ks = k[order]
    cs = np.cumsum(e[order]) / np.sqrt(n * sigma * sigma)
    last = np.empty(n, dtype=bool)
    last[:-1] = ks[1:] != ks[:-1]
    last[-1] = True
    ends = np.flatnonzero(last)
    mult = np.diff(ends, prepend=-1)
    return ResidualProcess(
        keys=ks[ends], cum=cs[ends], mult=mult.astype(np.int64), n=n, sigma_used=float(sigma)
    )


def zero_process(keys_raw) -> ResidualProcess:
    """The identically-zero process on the key grid (used for exact-fit replicates)."""
    k = np.sort(np.asarray(keys_raw, dtype=float))
    uk, mult = np.unique(k, return_counts=True)
    return ResidualProcess(uk, np.zeros(uk.size), mult.astype(np.int64), k.size, 0.0)


def ks_statistic(proc: ResidualProcess) -> float:
    """``sup_t |W(t)|``, attained at a jump point."""
    return float(np.max(np.abs(proc.cum)))


def cvm_statistic(proc: ResidualProcess) -> float:
    """``integral W(t)^2 dF_n(t)`` with ``F_n`` the empirical key distribution."""
    return float(np.dot(proc.mult, proc.cum**2) / proc.n)


def _group_end_index(sorted_keys: np.ndarray) -> np.ndarray:
    """For each sorted position, the index of the last element of its tie group."""
    n = sorted_keys.shape[-1]
    idx = np.broadcast_to(np.arange(n), sorted_keys.shape)
    last = np.ones(sorted_keys.shape, dtype=bool)
    last[..., :-1] = sorted_keys[..., 1:] != sorted_keys[..., :-1]
    pos = np.where(last, idx, n)
    return np.minimum.accumulate(pos[..., ::-1], axis=-1)[..., ::-1]


def batch_statistics(residuals: np.ndarray, keys: np.ndarray, sigma: np.ndarray):
    """KS and CvM statistics for a block of processes.

    Parameters
    ----------
    residuals : ndarray, shape (B, n)
    keys : ndarray, shape (B, n) or (n,)
        A 1-d key vector is shared by all rows and sorted once.
    sigma : ndarray, shape (B,)
        Scale per row; must be positive.

    Returns
    -------
    ks, cvm : ndarray, shape (B,)
    """
    B, n = residuals.shape
    if keys.ndim == 1:
        order = np.argsort(keys, kind="stable")
        ends = _group_end_index(keys[order])
        cs = np.cumsum(residuals[:, order], axis=1)
        cs = cs[:, ends]
    else:
        order = np.argsort(keys, axis=1, kind="stable")
        ends = _group_end_index(np.take_along_axis(keys, order, axis=1))
        cs = np.cumsum(np.take_along_axis(residuals, order, axis=1), axis=1)
        cs = np.take_along_axis(cs, ends, axis=1)
    cs /= np.sqrt(n * sigma * sigma)[:, None]
    ks = np.max(np.abs(cs), axis=1)
    cvm = np.einsum("ij,ij->i", cs, cs) / n
    return ks, cvm


def plugin_covariance(
    data: Dataset,
    theta,
    t: float,
    s: float,
    ordering: OrderingKey = FullModel(),
) -> float:
    """Finite-sample covariance of the limiting Gaussian process.

    ``K(t, s) = (sum_i I(k_i <= t ^ s) - h(t) (X'X)^-1 h(s)') / n`` with
    ``h(z) = sum_i x_i' I(k_i <= z)`` and ``k_i`` the ordering value of
    observation ``i`` evaluated at coefficients ``theta``.
    """
    theta = np.asarray(theta, dtype=float)
    _check_ordering(ordering, data.p)
    X = data.X
    if isinstance(ordering, FullModel):
        k = X @ theta
    elif isinstance(ordering, Covariate):
        k = X[:, ordering.index]
    else:
        J = list(ordering.indices)
        k = X[:, J] @ theta[J]
    R = OLSDesign(X).R
    it = k <= t
    is_ = k <= s
    ht = X[it].sum(axis=0)
    hs = X[is_].sum(axis=0)
    # h(t) (X'X)^-1 h(s)' = (R^-T h(t))' (R^-T h(s))
    a = solve_triangular(R, ht, trans="T")
    b = solve_triangular(R, hs, trans="T")
    return float((np.count_nonzero(k <= min(t, s)) - a @ b) / data.n)
