"""Replicate outcomes under the null hypothesis.

Every replicate ``k`` draws its randomness from its own counter-based
stream (Philox keyed by the master seed, counter set to ``k``), so the
draws for replicate ``k`` do not depend on which other replicates were
generated, in what order, or by how many workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations
from typing import Union

import numpy as np

from .exceptions import InvalidParams, TooLarge
from .linreg import Dataset, FitResult

__all__ = [
    "PermuteResiduals",
    "PermuteRawData",
    "SWSimulation",
    "WildBootstrap",
    "ResidualBootstrap",
    "NullMethod",
    "ReplicateStream",
    "permuted_outcome",
    "raw_permuted_outcome",
    "sw_outcome",
    "wild_outcome",
    "residual_bootstrap_outcome",
    "outcome_batch",
    "all_permutations",
    "parse_method",
    "MAMMEN_LOW",
    "MAMMEN_HIGH",
    "MAMMEN_P_LOW",
]

EXHAUSTIVE_MAX_N = 8

_SQ5 = math.sqrt(5.0)
MAMMEN_LOW = -(_SQ5 - 1.0) / 2.0
MAMMEN_HIGH = (_SQ5 + 1.0) / 2.0
MAMMEN_P_LOW = (_SQ5 + 1.0) / (2.0 * _SQ5)


@dataclass(frozen=True)
class PermuteResiduals:
    """``Y^k = Yhat + e[pi]`` followed by a refit."""

    name = "perm"


@dataclass(frozen=True)
class PermuteRawData:
    """``Y^k = y[pi]``; kept for comparison studies."""

    name = "rawperm"


@dataclass(frozen=True)
class SWSimulation:
    """``Y^k = Yhat + e * Z`` with standard normal multipliers."""

    name = "sw"


@dataclass(frozen=True)
class WildBootstrap:
    """``Y^k = Yhat + e * V`` with bounded mean-0, variance-1 multipliers."""

    v_dist: str = "rademacher"
    name = "wild"

    def __post_init__(self):
        if self.v_dist not in ("rademacher", "mammen"):
            raise InvalidParams(
                f"v_dist must be 'rademacher' or 'mammen', got {self.v_dist!r}", "v_dist"
            )


@dataclass(frozen=True)
class ResidualBootstrap:
    """``Y^k = Yhat + e*`` with ``e*`` resampled from the centred residuals."""

    name = "residboot"


NullMethod = Union[
    PermuteResiduals, PermuteRawData, SWSimulation, WildBootstrap, ResidualBootstrap
]


def parse_method(name: str) -> NullMethod:
    """Map ``perm``, ``rawperm``, ``sw``, ``wild[:mammen]``, ``residboot`` to a method."""
    base, _, opt = name.partition(":")
    if base == "wild":
        return WildBootstrap(opt or "rademacher")
    table = {
        "perm": PermuteResiduals,
        "rawperm": PermuteRawData,
        "sw": SWSimulation,
        "residboot": ResidualBootstrap,
    }
    if base not in table or opt:
        raise InvalidParams(f"unknown null method {name!r}", "method")
    return table[base]()


@dataclass(frozen=True)
class ReplicateStream:
    """Random stream of replicate ``replicate_index`` under ``master_seed``."""

    master_seed: int
    replicate_index: int

    def generator(self) -> np.random.Generator:
        return np.random.Generator(
            np.random.Philox(key=_philox_key(self.master_seed), counter=[0, 0, 0, self.replicate_index])
        )


_KEY_CACHE: dict[int, np.ndarray] = {}


def _philox_key(master_seed: int) -> np.ndarray:
    key = _KEY_CACHE.get(master_seed)
    if key is None:
        key = np.random.SeedSequence(master_seed).generate_state(2, np.uint64)
        _KEY_CACHE[master_seed] = key
    return key


def _rng(stream: ReplicateStream | np.random.Generator) -> np.random.Generator:
    if isinstance(stream, np.random.Generator):
        return stream
    return stream.generator()


# ------------------------------------------------------------------ #
# Single-replicate generators.  Each accepts explicit draws so that
# callers (and tests) can force a particular permutation or multiplier.
# ------------------------------------------------------------------ #


def permuted_outcome(fit: FitResult, stream=None, *, perm=None) -> np.ndarray:
    """``Yhat + e[perm]`` with ``perm`` uniform (Fisher-Yates) unless given."""
    if perm is None:
        perm = _rng(stream).permutation(fit.n)
    return fit.fitted + fit.residuals[np.asarray(perm)]


def raw_permuted_outcome(data: Dataset, stream=None, *, perm=None) -> np.ndarray:
    """``y[perm]``."""
    if perm is None:
        perm = _rng(stream).permutation(data.n)
    return data.y[np.asarray(perm)]


def sw_outcome(fit: FitResult, stream=None, *, z=None) -> np.ndarray:
    """``Yhat + e * Z`` with ``Z`` iid standard normal unless given."""
    if z is None:
        z = _rng(stream).standard_normal(fit.n)
    return fit.fitted + fit.residuals * np.asarray(z, dtype=float)


def _wild_draw(rng: np.random.Generator, v_dist: str, size) -> np.ndarray:
    if v_dist == "rademacher":
        return 2.0 * rng.integers(0, 2, size=size) - 1.0
    return np.where(rng.random(size) < MAMMEN_P_LOW, MAMMEN_LOW, MAMMEN_HIGH)


def wild_outcome(fit: FitResult, v_dist: str = "rademacher", stream=None, *, v=None) -> np.ndarray:
    """``Yhat + e * V`` with Rademacher or Mammen two-point ``V`` unless given."""
    if v is None:
        WildBootstrap(v_dist)
        v = _wild_draw(_rng(stream), v_dist, fit.n)
    return fit.fitted + fit.residuals * np.asarray(v, dtype=float)


def residual_bootstrap_outcome(fit: FitResult, stream=None, *, idx=None) -> np.ndarray:
    """``Yhat`` plus an iid resample of the centred residuals."""
    centred = fit.residuals - fit.residuals.mean()
    if idx is None:
        idx = _rng(stream).integers(0, fit.n, size=fit.n)
    return fit.fitted + centred[np.asarray(idx)]


# ------------------------------------------------------------------ #
# Batched generation for the engine.
# ------------------------------------------------------------------ #


def outcome_batch(
    method: NullMethod,
    fit: FitResult,
    data: Dataset,
    master_seed: int,
    indices,
) -> np.ndarray:
    """Replicate outcomes for replicate indices ``indices``, shape (B, n).

    Row ``b`` equals the single-replicate generator applied to
    ``ReplicateStream(master_seed, indices[b])``.
    """
    n = fit.n
    gens = [ReplicateStream(master_seed, int(k)).generator() for k in indices]
    if isinstance(method, PermuteResiduals):
        idx = np.stack([g.permutation(n) for g in gens])
        return fit.fitted + fit.residuals[idx]
    if isinstance(method, PermuteRawData):
        idx = np.stack([g.permutation(n) for g in gens])
        return data.y[idx]
    if isinstance(method, SWSimulation):
        z = np.stack([g.standard_normal(n) for g in gens])
        return fit.fitted + fit.residuals * z
    if isinstance(method, WildBootstrap):
        v = np.stack([_wild_draw(g, method.v_dist, n) for g in gens])
        return fit.fitted + fit.residuals * v
    if isinstance(method, ResidualBootstrap):
        centred = fit.residuals - fit.residuals.mean()
        idx = np.stack([g.integers(0, n, size=n) for g in gens])
        return fit.fitted + centred[idx]
    raise TypeError(f"not a null method: {method!r}")


def all_permutations(n: int) -> np.ndarray:
    """All ``n!`` permutations of ``range(n)`` in lexicographic order (identity first)."""
    if n > EXHAUSTIVE_MAX_N:
        raise TooLarge(f"exhaustive enumeration limited to n <= {EXHAUSTIVE_MAX_N}, got n={n}")
    return np.array(list(permutations(range(n))), dtype=np.intp).reshape(-1, n)
