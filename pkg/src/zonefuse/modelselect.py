"""Regularization-strength selection and linear diagnostics.

The penalty strength is chosen by out-of-sample prediction error: the
samples are split 90/10 at random, the denoiser is fit on the training
part over an ascending lambda grid (warm-started), each fit predicts
the held-out samples by their zone's fitted value, and the lambda with
the smallest RMSE wins (ties prefer less smoothing).  The final
surface refits at the winning lambda on all samples.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import SolverError
from .gfl import AdmmConfig, DenoiseSolution, admm_solve, build_problem
from .graph import TrailDecomposition, ZoneGraph

DEFAULT_GRID_RANGE = (0.001, 100.0)
DEFAULT_GRID_SIZE = 30


def default_lambda_grid(lo: float = DEFAULT_GRID_RANGE[0],
                        hi: float = DEFAULT_GRID_RANGE[1],
                        count: int = DEFAULT_GRID_SIZE) -> np.ndarray:
    """Logarithmically spaced lambda grid over [lo, hi]."""
    if not (0 < lo < hi) or count < 1:
        raise ValueError("need 0 < lo < hi and count >= 1")
    return np.logspace(np.log10(lo), np.log10(hi), count)


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if not (0 < self.train_fraction < 1):
            raise ValueError("train_fraction must be in (0, 1)")


@dataclass
class LambdaPath:
    """Grid sweep record: per-lambda out-of-sample RMSE and the winner."""

    grid: np.ndarray
    rmse: np.ndarray           # NaN where the fit failed
    selected: float
    selected_index: int

    def to_text(self) -> str:
        lines = ["lambda,rmse,selected"]
        for i, (lam, err) in enumerate(zip(self.grid, self.rmse)):
            err_s = "" if np.isnan(err) else f"{err:.6f}"
            lines.append(f"{lam:.6f},{err_s},{int(i == self.selected_index)}")
        return "\n".join(lines) + "\n"


def split_observations(samples: Sequence, spec: SplitSpec = SplitSpec()
                       ) -> tuple[list, list]:
    """Uniform random partition of samples into (train, test)."""
    n = len(samples)
    if n < 10:
        raise ValueError(f"need at least 10 samples to split, got {n}")
    rng = np.random.default_rng(spec.seed)
    perm = rng.permutation(n)
    n_train = int(round(spec.train_fraction * n))
    n_train = min(max(n_train, 1), n - 1)
    train_idx = np.sort(perm[:n_train])
    test_idx = np.sort(perm[n_train:])
    return ([samples[i] for i in train_idx], [samples[i] for i in test_idx])


def rmse(test_samples: Sequence[tuple[str, float]],
         fitted: Mapping[str, float], fallback: float) -> float:
    """Root mean squared prediction error over held-out samples.

    Each sample is predicted by its zone's fitted value; samples in
    zones outside the fitted map use ``fallback`` (the global training
    mean).
    """
    if len(test_samples) == 0:
        raise ValueError("empty test set")
    sq = 0.0
    for zone, value in test_samples:
        pred = fitted.get(str(zone), fallback)
        sq += (float(value) - pred) ** 2
    return float(np.sqrt(sq / len(test_samples)))


def select_lambda(graph: ZoneGraph, decomposition: TrailDecomposition,
                  samples: Sequence[tuple[str, float]],
                  grid: np.ndarray | None = None,
                  split: SplitSpec = SplitSpec(),
                  admm: AdmmConfig = AdmmConfig(),
                  ) -> tuple[LambdaPath, DenoiseSolution]:
    """Pick lambda by out-of-sample RMSE, then refit on all samples.

    Returns the sweep record and the final full-data solution at the
    selected lambda.
    """
    grid = default_lambda_grid() if grid is None else np.sort(np.asarray(grid, dtype=float))
    if grid.size == 0:
        raise ValueError("lambda grid is empty")
    train, test = split_observations(samples, split)
    problem = build_problem(graph, decomposition, train)
    fallback = float(np.mean([v for _, v in train]))

    errors = np.full(grid.size, np.nan)
    warm = None
    best: DenoiseSolution | None = None
    best_idx = -1
    for i, lam in enumerate(grid):
        try:
            sol = admm_solve(problem, float(lam), admm, warm=warm)
        except SolverError:
            continue
        warm = sol
        fitted = dict(zip(graph.nodes, sol.x))
        errors[i] = rmse(test, fitted, fallback)
        if best_idx < 0 or errors[i] < errors[best_idx]:
            best, best_idx = sol, i
    if best_idx < 0:
        raise SolverError("every lambda fit failed")

    path = LambdaPath(grid=grid, rmse=errors, selected=float(grid[best_idx]),
                      selected_index=int(best_idx))
    full_problem = build_problem(graph, decomposition, samples)
    final = admm_solve(full_problem, path.selected, admm, warm=best)
    return path, final


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r2: float
    n: int


def linear_r2(x: Sequence[float], covariate: Sequence[float]) -> LinearFit:
    """Ordinary least squares of x on one covariate.

    Pairs with a non-finite entry are dropped; at least 3 finite pairs
    are required and the covariate must vary.
    """
    x = np.asarray(x, dtype=float)
    c = np.asarray(covariate, dtype=float)
    if x.shape != c.shape:
        raise ValueError("x and covariate must have equal length")
    keep = np.isfinite(x) & np.isfinite(c)
    x, c = x[keep], c[keep]
    n = x.size
    if n < 3:
        raise ValueError("need at least 3 finite paired values")
    cvar = float(np.var(c))
    if cvar == 0:
        raise ValueError("covariate has zero variance; R^2 undefined")
    cov = float(np.mean((c - c.mean()) * (x - x.mean())))
    slope = cov / cvar
    intercept = float(x.mean() - slope * c.mean())
    resid = x - (intercept + slope * c)
    xvar = float(np.var(x))
    r2 = 0.0 if xvar == 0 else 1.0 - float(np.var(resid)) / xvar
    return LinearFit(slope=slope, intercept=intercept, r2=r2, n=int(n))
