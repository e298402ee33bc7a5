"""Ordinary least squares on a fixed design matrix.

The design is factorised once with a Householder QR decomposition
(``numpy.linalg.qr``, LAPACK ``geqrf``) and the factors are reused for
every refit on a new outcome vector.  Resampling tests refit the same
design thousands of times, so :class:`OLSDesign` also offers a batched
path that projects a whole block of outcome vectors at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.linalg import solve_triangular

from .exceptions import (
    DegenerateSample,
    InvalidDesign,
    NonFinite,
    RankDeficient,
)

__all__ = [
    "Dataset",
    "FitResult",
    "OLSDesign",
    "fit_ols",
    "refit_on_outcome",
]

# Relative threshold on the smallest |R_jj| for declaring rank deficiency.
RANK_RTOL = 1e-10


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Response vector and design matrix of a linear model.

    The first column of ``X`` must be the intercept (all ones).  Rank and
    sample-size conditions are checked when the model is fitted, not here.

    Parameters
    ----------
    y : array_like, shape (n,)
        Response.
    X : array_like, shape (n, p)
        Design matrix including the intercept column.
    column_names : sequence of str, optional
        One label per column of ``X``.  Defaults to
        ``("(Intercept)", "x1", ..., "x{p-1}")``.
    """

    y: np.ndarray
    X: np.ndarray
    column_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if y.ndim != 1 or X.ndim != 2:
            raise InvalidDesign("y must be 1-d and X must be 2-d")
        if X.shape[0] != y.shape[0]:
            raise InvalidDesign(
                f"y has {y.shape[0]} rows but X has {X.shape[0]}"
            )
        if X.shape[1] < 1:
            raise InvalidDesign("X needs at least the intercept column")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(X))):
            raise NonFinite("y and X must not contain NaN or Inf")
        if not np.all(X[:, 0] == 1.0):
            raise InvalidDesign("first column of X must be the intercept (all ones)")
        names = tuple(self.column_names)
        if not names:
            names = ("(Intercept)",) + tuple(f"x{j}" for j in range(1, X.shape[1]))
        if len(names) != X.shape[1]:
            raise InvalidDesign(
                f"{len(names)} column names for {X.shape[1]} columns"
            )
        object.__setattr__(self, "y", _frozen(y))
        object.__setattr__(self, "X", _frozen(X))
        object.__setattr__(self, "column_names", names)

    @classmethod
    def from_covariates(
        cls,
        y,
        covariates,
        names: Sequence[str] | None = None,
    ) -> "Dataset":
        """Build a dataset by prepending an intercept column to ``covariates``."""
        Z = np.asarray(covariates, dtype=float)
        if Z.ndim == 1:
            Z = Z[:, None]
        X = np.column_stack([np.ones(Z.shape[0]), Z])
        if names is None:
            cols: tuple[str, ...] = ()
        else:
            cols = ("(Intercept)",) + tuple(names)
        return cls(y, X, cols)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @cached_property
    def design(self) -> "OLSDesign":
        """QR factorisation of ``X``, computed once and reused for refits."""
        return OLSDesign(self.X)

    def with_response(self, y) -> "Dataset":
        return Dataset(y, self.X, self.column_names)


@dataclass(frozen=True, eq=False)
class FitResult:
    """One least-squares fit.

    Attributes
    ----------
    theta_hat : ndarray, shape (p,)
        Coefficient estimates.
    fitted : ndarray, shape (n,)
        Fitted values ``X @ theta_hat``.
    residuals : ndarray, shape (n,)
        ``y - fitted``.
    sigma_hat : float
        ``sqrt(sum(residuals**2) / df_resid)``.
    df_resid : int
        ``n - p``.
    """

    theta_hat: np.ndarray
    fitted: np.ndarray
    residuals: np.ndarray
    sigma_hat: float
    df_resid: int

    @property
    def n(self) -> int:
        return self.fitted.shape[0]

    @property
    def y(self) -> np.ndarray:
        return self.fitted + self.residuals

    def is_degenerate(self, rtol: float = 1e-10) -> bool:
        """True when the residual scale is zero up to rounding (exact fit)."""
        return bool(degenerate_sigma(self.sigma_hat, np.max(np.abs(self.y)), rtol))


def degenerate_sigma(sigma, y_scale, rtol: float = 1e-10):
    """Elementwise test for a residual scale that is zero up to rounding.

    ``y_scale`` is the largest absolute outcome value, so the test is
    invariant to rescaling the response.
    """
    sigma = np.asarray(sigma, dtype=float)
    return ~(sigma > rtol * np.asarray(y_scale, dtype=float))


class OLSDesign:
    """Cached thin QR factorisation ``X = Q R`` of a full-rank design.

    Parameters
    ----------
    X : array_like, shape (n, p)

    Raises
    ------
    DegenerateSample
        If ``n <= p``.
    RankDeficient
        If the smallest ``|R_jj|`` is below ``1e-10 * ||X||_2``.
    """

    def __init__(self, X):
        X = np.asarray(X, dtype=float)
        if not np.all(np.isfinite(X)):
            raise NonFinite("design matrix contains NaN or Inf")
        n, p = X.shape
        if n <= p:
            raise DegenerateSample(f"need n > p, got n={n}, p={p}")
        Q, R = np.linalg.qr(X, mode="reduced")
        diag = np.abs(np.diag(R))
        scale = np.linalg.norm(R, 2)
        if scale == 0 or diag.min() < RANK_RTOL * scale:
            raise RankDeficient(
                f"design matrix is rank deficient (min |R_jj| = {diag.min():.3g}, "
                f"||X|| = {scale:.3g})"
            )
        self.X = X
        self.Q = np.ascontiguousarray(Q)
        self.R = R
        self.n = n
        self.p = p
        self.df_resid = n - p

    def coef(self, y) -> np.ndarray:
        """Least-squares coefficients for one outcome (n,) or a batch (B, n)."""
        y = np.asarray(y, dtype=float)
        qty = y @ self.Q
        return solve_triangular(self.R, qty.T, lower=False).T

    def fit(self, y) -> FitResult:
        y = np.asarray(y, dtype=float)
        if y.shape != (self.n,):
            raise InvalidDesign(f"outcome must have shape ({self.n},), got {y.shape}")
        if not np.all(np.isfinite(y)):
            raise NonFinite("outcome contains NaN or Inf")
        theta = self.coef(y)
        fitted = self.X @ theta
        resid = y - fitted
        sigma = float(np.sqrt(resid @ resid / self.df_resid))
        return FitResult(
            theta_hat=_frozen(theta),
            fitted=_frozen(fitted),
            residuals=_frozen(resid),
            sigma_hat=sigma,
            df_resid=self.df_resid,
        )

    def fit_batch(self, Y: np.ndarray):
        """Refit a block of outcomes.

        Parameters
        ----------
        Y : ndarray, shape (B, n)

        Returns
        -------
        coef : ndarray, shape (B, p)
        fitted : ndarray, shape (B, n)
        residuals : ndarray, shape (B, n)
        sigma : ndarray, shape (B,)
        """
        coef = self.coef(Y)
        fitted = coef @ self.X.T
        resid = Y - fitted
        sigma = np.sqrt(np.einsum("ij,ij->i", resid, resid) / self.df_resid)
        return coef, fitted, resid, sigma


def fit_ols(data: Dataset) -> FitResult:
    """Fit ``y ~ X`` by ordinary least squares.

    Examples
    --------
    >>> d = Dataset([1.0, 2.0, 3.0], [[1.0], [1.0], [1.0]])
    >>> round(fit_ols(d).sigma_hat, 12)
    1.0
    """
    return data.design.fit(data.y)


def refit_on_outcome(fit_context: Dataset, new_y) -> FitResult:
    """Fit the design of ``fit_context`` to a new outcome vector.

    The QR factors cached on the dataset are reused, so this is equal to
    ``fit_ols(fit_context.with_response(new_y))`` without refactorising.
    """
    return fit_context.design.fit(new_y)
