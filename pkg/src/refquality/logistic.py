"""Logistic regression fitted by iteratively reweighted least squares."""

from __future__ import annotations

import numpy as np


class SeparationError(RuntimeError):
    """The labels are perfectly separable; the MLE diverges.

    Refit with ``ridge > 0`` or drop the offending covariate.
    """


class ConvergenceError(RuntimeError):
    """IRLS did not converge; ``trace`` holds the per-iteration step sizes."""

    def __init__(self, message: str, trace: list[float]):
        super().__init__(message)
        self.trace = trace


def sigmoid(z: np.ndarray | float) -> np.ndarray | float:
    return 1.0 / (1.0 + np.exp(-np.asarray(z, dtype=float)))


def fit_logistic(
    X: np.ndarray,
    y: np.ndarray,
    *,
    tol: float = 1e-8,
    max_iter: int = 100,
    ridge: float = 0.0,
    add_intercept: bool = True,
) -> tuple[np.ndarray, int]:
    """Maximum-likelihood fit of P(y=1|x) = sigmoid(x·beta).

    Newton/IRLS steps until the largest coefficient change drops below
    ``tol``.  Returns ``(beta, iterations)`` with the intercept last when
    ``add_intercept`` is set.  Raises :class:`SeparationError` on perfectly
    separated data and :class:`ConvergenceError` when ``max_iter`` is hit.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be (n, p) with one row per label")
    if add_intercept:
        X = np.hstack([X, np.ones((X.shape[0], 1))])
    n, p = X.shape
    beta = np.zeros(p)
    trace: list[float] = []
    for iteration in range(1, max_iter + 1):
        prob = sigmoid(X @ beta)
        if np.all(np.abs(prob - y) < 1e-10):
            raise SeparationError(
                "perfect separation detected: fitted probabilities saturated; "
                "refit with ridge > 0 or prune covariates"
            )
        w = np.clip(prob * (1.0 - prob), 1e-12, None)
        hessian = (X * w[:, None]).T @ X
        if ridge > 0.0:
            hessian = hessian + ridge * np.eye(p)
        gradient = X.T @ (y - prob)
        if ridge > 0.0:
            gradient = gradient - ridge * beta
        try:
            step = np.linalg.solve(hessian, gradient)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError(
                f"singular information matrix at iteration {iteration}; "
                "covariates may be collinear — prune them or set ridge > 0",
                trace,
            ) from exc
        beta = beta + step
        change = float(np.max(np.abs(step)))
        trace.append(change)
        if not np.isfinite(change):
            raise SeparationError(
                "diverging coefficients: data are likely separable; "
                "refit with ridge > 0"
            )
        if change < tol:
            return beta, iteration
    raise ConvergenceError(
        f"no convergence after {max_iter} iterations (last steps: "
        f"{[round(t, 6) for t in trace[-5:]]})",
        trace,
    )
