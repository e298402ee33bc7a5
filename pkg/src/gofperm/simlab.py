"""Data-generating scenarios and a Monte-Carlo size/power runner.

Covariates are iid uniform on [0, 1].  Each family fixes the true mean
function and error law; the returned :class:`~gofperm.linreg.Dataset`
always carries the *fitted* (possibly misspecified) main-effects design.

Families and their parameters (defaults in brackets):

==========================  ===============================================
NullNormal                  beta0 [-0.1], beta1, beta2, sigma2
NullGamma                   beta0 [-0.1], beta1, beta2, shape, scale [1]
NullHetero                  beta0 [-0.1], beta1, beta2, theta
QuadraticOmission           beta0 [-0.1], beta1, beta2 [0.25], beta3, sigma2
InteractionOmission         beta0 [-0.1], beta1, beta2 [0.25], beta3, sigma2
PartialQuadratic5           beta0 [-0.1], beta1..beta5 [0.25], beta6, sigma2
PartialInteraction5         beta0 [-0.1], beta1..beta5 [0.25], beta6, sigma2
==========================  ===============================================
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

from .engine import STATISTICS, TestSpec, default_workers, run_tests
from .exceptions import InvalidParams
from .linreg import Dataset

__all__ = ["FAMILIES", "ScenarioSpec", "MCResult", "generate", "run_study", "rep_seeds"]

_MAIN = {"beta0": -0.1}
_FIVE = {"beta0": -0.1, **{f"beta{j}": 0.25 for j in range(1, 6)}}

# family -> (number of covariates, required params, defaults)
FAMILIES: dict[str, tuple[int, tuple[str, ...], dict[str, float]]] = {
    "NullNormal": (2, ("beta1", "beta2", "sigma2"), dict(_MAIN)),
    "NullGamma": (2, ("beta1", "beta2", "shape"), {**_MAIN, "scale": 1.0}),
    "NullHetero": (2, ("beta1", "beta2", "theta"), dict(_MAIN)),
    "QuadraticOmission": (2, ("beta1", "beta3", "sigma2"), {**_MAIN, "beta2": 0.25}),
    "InteractionOmission": (2, ("beta1", "beta3", "sigma2"), {**_MAIN, "beta2": 0.25}),
    "PartialQuadratic5": (5, ("beta6", "sigma2"), dict(_FIVE)),
    "PartialInteraction5": (5, ("beta6", "sigma2"), dict(_FIVE)),
}


@dataclass(frozen=True)
class ScenarioSpec:
    family: str
    n: int
    params: Mapping[str, float] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidParams(
                f"unknown family {self.family!r}; expected one of {sorted(FAMILIES)}", "family"
            )
        k, required, defaults = FAMILIES[self.family]
        missing = [r for r in required if r not in self.params]
        if missing:
            raise InvalidParams(
                f"{self.family} requires params {missing}", f"params.{missing[0]}"
            )
        allowed = set(required) | set(defaults)
        extra = sorted(set(self.params) - allowed)
        if extra:
            raise InvalidParams(f"{self.family} does not take params {extra}", f"params.{extra[0]}")
        merged = {**defaults, **{k_: float(v) for k_, v in self.params.items()}}
        if not isinstance(self.n, (int, np.integer)) or self.n < k + 2:
            raise InvalidParams(f"n must be an integer >= {k + 2}", "n")
        for name in ("sigma2", "shape", "scale"):
            if name in merged and not merged[name] >= 0:
                raise InvalidParams(f"{name} must be nonnegative", f"params.{name}")
        if self.family == "NullGamma" and not (merged["shape"] > 0 and merged["scale"] > 0):
            raise InvalidParams("gamma shape and scale must be positive", "params.shape")
        object.__setattr__(self, "params", merged)

    @classmethod
    def from_dict(cls, d: Mapping) -> "ScenarioSpec":
        for key in ("family", "n"):
            if key not in d:
                raise InvalidParams(f"scenario is missing field {key!r}", key)
        return cls(d["family"], d["n"], dict(d.get("params", {})), int(d.get("seed", 0)))

    def to_dict(self) -> dict:
        return {"family": self.family, "n": self.n, "params": dict(self.params), "seed": self.seed}


def generate(scenario: ScenarioSpec) -> Dataset:
    """Simulate one dataset.

    Draw order is fixed (covariates, then errors) so that families
    differing only in a zero-valued term produce identical data for the
    same seed.
    """
    rng = np.random.default_rng(scenario.seed)
    p = scenario.params
    k = FAMILIES[scenario.family][0]
    n = scenario.n
    x = rng.random((n, k))
    fam = scenario.family

    if k == 2:
        mean = p["beta0"] + p["beta1"] * x[:, 0] + p["beta2"] * x[:, 1]
        if fam == "QuadraticOmission":
            mean = mean + p["beta3"] * x[:, 0] ** 2
        elif fam == "InteractionOmission":
            mean = mean + p["beta3"] * x[:, 0] * x[:, 1]
    else:
        mean = p["beta0"] + x @ np.array([p[f"beta{j}"] for j in range(1, 6)])
        if fam == "PartialQuadratic5":
            mean = mean + p["beta6"] * x[:, 0] ** 2
        else:
            mean = mean + p["beta6"] * x[:, 0] * x[:, 1]

    if fam == "NullGamma":
        a, s = p["shape"], p["scale"]
        eps = rng.gamma(a, s, size=n) - a * s
    elif fam == "NullHetero":
        eps = rng.standard_normal(n) * (1.0 + p["theta"] * x[:, 0])
    else:
        eps = rng.standard_normal(n) * math.sqrt(p["sigma2"])

    names = [f"x{j}" for j in range(1, k + 1)]
    return Dataset.from_covariates(mean + eps, x, names)


def rep_seeds(seed: int, rep: int) -> tuple[int, int]:
    """(data seed, permutation master seed) for replication ``rep``."""
    s = np.random.SeedSequence(seed, spawn_key=(rep,)).generate_state(2, np.uint64)
    return int(s[0]), int(s[1])


@dataclass(frozen=True, eq=False)
class MCResult:
    """Rejection rates of a Monte-Carlo study.

    ``rejection_rates[i, j]`` is the fraction of replications whose
    p-value for ``statistics[i]`` was ``<= alpha_levels[j]``.
    """

    scenario: ScenarioSpec
    statistics: tuple[str, ...]
    alpha_levels: np.ndarray
    rejection_rates: np.ndarray
    n_reps: int
    mc_stderr: np.ndarray
    p_values: np.ndarray
    test: TestSpec | None = None

    def rate(self, statistic: str, alpha: float) -> float:
        i = self.statistics.index(statistic)
        j = int(np.flatnonzero(np.isclose(self.alpha_levels, alpha))[0])
        return float(self.rejection_rates[i, j])

    def stderr(self, statistic: str, alpha: float) -> float:
        i = self.statistics.index(statistic)
        j = int(np.flatnonzero(np.isclose(self.alpha_levels, alpha))[0])
        return float(self.mc_stderr[i, j])

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for i, s in enumerate(self.statistics):
            for j, a in enumerate(self.alpha_levels):
                rows.append(
                    {
                        "scenario": self.scenario.family,
                        "statistic": s,
                        "alpha": float(a),
                        "rate": float(self.rejection_rates[i, j]),
                        "stderr": float(self.mc_stderr[i, j]),
                        "n_reps": self.n_reps,
                    }
                )
        return pd.DataFrame(rows)

    def to_csv(self, path) -> None:
        self.to_frame().to_csv(path, index=False, float_format="%.17g")

    def summary(self) -> dict:
        out = {
            "schema_version": 1,
            "scenario": self.scenario.to_dict(),
            "n_reps": self.n_reps,
            "alphas": [float(a) for a in self.alpha_levels],
            "rates": {
                s: [float(r) for r in self.rejection_rates[i]] for i, s in enumerate(self.statistics)
            },
            "stderr": {
                s: [float(r) for r in self.mc_stderr[i]] for i, s in enumerate(self.statistics)
            },
        }
        if self.test is not None:
            out["test"] = {
                "ordering": self.test.ordering.label(),
                "method": self.test.method.name,
                "n_perms": self.test.n_perms,
            }
        return out

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2)
            fh.write("\n")


def run_study(
    scenario: ScenarioSpec,
    test: TestSpec,
    n_reps: int,
    alphas: Sequence[float] = (0.01, 0.05, 0.1),
    statistics: Sequence[str] = STATISTICS,
    workers: int | None = None,
) -> MCResult:
    """Simulate ``n_reps`` datasets and record rejection rates.

    Replication ``r`` uses data and permutation seeds derived from
    ``(scenario.seed, r)``; ``test.master_seed`` is ignored.
    """
    if n_reps < 1:
        raise InvalidParams("n_reps must be >= 1", "n_reps")
    alphas = np.asarray(alphas, dtype=float)
    statistics = tuple(statistics)
    workers = default_workers() if workers is None else max(1, int(workers))

    def one(r: int) -> list[float]:
        data_seed, perm_seed = rep_seeds(scenario.seed, r)
        data = generate(replace(scenario, seed=data_seed))
        res = run_tests(data, replace(test, master_seed=perm_seed), statistics, workers=1)
        return [res[s].p_value for s in statistics]

    if workers == 1:
        pv = [one(r) for r in range(n_reps)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            pv = list(pool.map(one, range(n_reps)))
    pvals = np.array(pv, dtype=float).reshape(n_reps, len(statistics))
    rates = (pvals[:, :, None] <= alphas[None, None, :]).mean(axis=0)
    return MCResult(
        scenario=scenario,
        statistics=statistics,
        alpha_levels=alphas,
        rejection_rates=rates,
        n_reps=n_reps,
        mc_stderr=np.sqrt(rates * (1 - rates) / n_reps),
        p_values=pvals,
        test=test,
    )
