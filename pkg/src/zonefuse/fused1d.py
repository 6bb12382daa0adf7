"""Exact solver for the weighted one-dimensional fused lasso.

Minimizes, over z in R^n,

    sum_i w_i * (y_i - z_i)^2  +  lam * sum_i |z_{i+1} - z_i|

with per-position weights w_i > 0.  The solver runs a single forward
sweep maintaining the derivative of the partially minimized objective
as a piecewise-linear function (clipping it to [-lam, +lam] at each
step), then backtracks through the recorded clip thresholds.  Runtime
and memory are linear in the chain length, and the returned point is
the exact minimizer.

This is the subproblem solved once per trail in every iteration of the
graph denoiser; see :mod:`zonefuse.gfl`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is optional
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap


# Derivative knots arise from subtraction of near-equal quantities;
# comparisons against the clip levels use this absolute slack.
_KNOT_EPS = 1e-12


@njit(cache=True)
def _dp_chain(y, w, lam, out):  # pragma: no cover - exercised via solve_chain
    n = y.shape[0]
    if n == 0:
        return
    if n == 1:
        out[0] = y[0]
        return
    if lam <= 0.0:
        for i in range(n):
            out[i] = y[i]
        return

    # Knot positions and the (slope, intercept) increments applied when
    # crossing each knot left to right.  At most 2n knots are ever live.
    x = np.empty(2 * n)
    a = np.empty(2 * n)
    b = np.empty(2 * n)
    # Clip thresholds recorded for the backward pass.
    tm = np.empty(n - 1)
    tp = np.empty(n - 1)

    # First data term: derivative 2*w0*(b - y0).
    s0 = 2.0 * w[0]
    tm[0] = y[0] - lam / s0
    tp[0] = y[0] + lam / s0
    lo_end = n - 1
    hi_end = n
    x[lo_end] = tm[0]
    x[hi_end] = tp[0]
    a[lo_end] = s0
    b[lo_end] = -s0 * y[0] + lam
    a[hi_end] = -s0
    b[hi_end] = s0 * y[0] + lam

    s = 2.0 * w[1]
    afirst = s
    bfirst = -s * y[1] - lam
    alast = -s
    blast = s * y[1] - lam

    for k in range(1, n - 1):
        # Leftmost crossing of -lam.
        alo = afirst
        blo = bfirst
        lo = lo_end
        while lo <= hi_end and alo * x[lo] + blo <= -lam + _KNOT_EPS:
            alo += a[lo]
            blo += b[lo]
            lo += 1
        tm[k] = (-lam - blo) / alo
        lo_end = lo - 1
        x[lo_end] = tm[k]

        # Rightmost crossing of +lam (right tail is stored negated).
        ahi = alast
        bhi = blast
        hi = hi_end
        while hi >= lo and -ahi * x[hi] - bhi >= lam - _KNOT_EPS:
            ahi += a[hi]
            bhi += b[hi]
            hi -= 1
        tp[k] = (lam + bhi) / (-ahi)
        hi_end = hi + 1
        x[hi_end] = tp[k]

        a[lo_end] = alo
        b[lo_end] = blo + lam
        a[hi_end] = ahi
        b[hi_end] = bhi + lam

        s = 2.0 * w[k + 1]
        afirst = s
        bfirst = -s * y[k + 1] - lam
        alast = -s
        blast = s * y[k + 1] - lam

    # Root of the final derivative gives the last coefficient.
    alo = afirst
    blo = bfirst
    lo = lo_end
    while lo <= hi_end and alo * x[lo] + blo <= 0.0:
        alo += a[lo]
        blo += b[lo]
        lo += 1
    out[n - 1] = -blo / alo

    for k in range(n - 2, -1, -1):
        if out[k + 1] > tp[k]:
            out[k] = tp[k]
        elif out[k + 1] < tm[k]:
            out[k] = tm[k]
        else:
            out[k] = out[k + 1]


@njit(cache=True)
def _dp_chains(y, w, lam, offsets, out):  # pragma: no cover
    for t in range(offsets.shape[0] - 1):
        s = offsets[t]
        e = offsets[t + 1]
        _dp_chain(y[s:e], w[s:e], lam, out[s:e])


@dataclass(frozen=True)
class ChainProblem:
    """One weighted 1-D fused-lasso instance.

    targets and weights have equal length; every weight is strictly
    positive and lam is nonnegative.
    """

    targets: np.ndarray
    weights: np.ndarray
    lam: float

    def __post_init__(self):
        t = np.asarray(self.targets, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if t.ndim != 1 or w.ndim != 1:
            raise ValueError("targets and weights must be 1-D")
        if t.shape != w.shape:
            raise ValueError("targets and weights must have equal length")
        if t.size and not np.all(w > 0):
            raise ValueError("all weights must be > 0")
        if not np.isfinite(self.lam) or self.lam < 0:
            raise ValueError("lam must be finite and >= 0")
        object.__setattr__(self, "targets", t)
        object.__setattr__(self, "weights", w)


def solve_chain(problem: ChainProblem) -> np.ndarray:
    """Return the exact minimizer of the chain problem.

    Length-0 input yields an empty array; length-1 returns the target.
    """
    y = problem.targets
    out = np.empty_like(y)
    _dp_chain(y, problem.weights, float(problem.lam), out)
    return out


def solve_chains(targets: np.ndarray, weights: np.ndarray, lam: float,
                 offsets: np.ndarray) -> np.ndarray:
    """Solve many chains stored back to back in one array.

    ``offsets`` holds the start index of each chain plus a final end
    index (len = number of chains + 1).  Used by the ADMM inner loop so
    the whole z-update is one call.
    """
    y = np.ascontiguousarray(targets, dtype=float)
    w = np.ascontiguousarray(weights, dtype=float)
    off = np.ascontiguousarray(offsets, dtype=np.int64)
    out = np.empty_like(y)
    _dp_chains(y, w, float(lam), off, out)
    return out


def chain_objective(z: np.ndarray, problem: ChainProblem) -> float:
    """Objective value of the chain problem at z."""
    z = np.asarray(z, dtype=float)
    loss = float(np.sum(problem.weights * (problem.targets - z) ** 2))
    tv = float(np.sum(np.abs(np.diff(z)))) if z.size > 1 else 0.0
    return loss + problem.lam * tv
