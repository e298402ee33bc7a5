from __future__ import annotations

import pandas as pd
import pytest

from gofperm import Dataset
from gofperm.cli import bundled_path

ACCEPTANCE_LINES: list[str] = []


def record(criterion: str, passed: bool | None, detail: str) -> None:
    """Register one acceptance line for the terminal summary (``None`` means skipped)."""
    status = "SKIP" if passed is None else ("PASS" if passed else "FAIL")
    ACCEPTANCE_LINES.append(f"[{status}] {criterion}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def steam_frame():
    return pd.read_csv(bundled_path("steam"))


@pytest.fixture(scope="session")
def steam(steam_frame):
    d = steam_frame
    return Dataset.from_covariates(d.steam, d[["days", "temperature"]], ["days", "temperature"])


@pytest.fixture(scope="session")
def steam_sq(steam_frame):
    d = steam_frame.assign(days_sq=steam_frame.days**2)
    return Dataset.from_covariates(
        d.steam, d[["days", "temperature", "days_sq"]], ["days", "temperature", "days_sq"]
    )


def random_dataset(rng, n, k=2, noise=1.0):
    x = rng.random((n, k))
    y = 0.5 + x @ rng.normal(size=k) + noise * rng.standard_normal(n)
    return Dataset.from_covariates(y, x)
