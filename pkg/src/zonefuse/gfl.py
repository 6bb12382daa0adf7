"""Graph-fused-lasso denoiser: trail-decomposed ADMM.

Solves

    min_x  1/2 * sum_i eta_i * (y_i - x_i)^2  +  lam * sum_(r,s) |x_r - x_s|

where y_i is the per-zone observation mean, eta_i the observation
count, and the l1 penalty runs over the graph edges.  The penalty is
rewritten over the trail decomposition; one slack variable is
introduced per trail position (a vertex visited twice gets two).  Each
ADMM iteration is then

    x  <-  (eta*y + alpha * A^T (z - u)) / (eta + alpha * |J|)   (closed form)
    z_t <-  argmin  (alpha/2) * ||ztilde_t - z_t||^2 + lam * TV(z_t)  per trail
    u  <-  u + A x - z

with ztilde = A x + u, so every z update is an exact weighted 1-D
fused lasso on one trail (:func:`zonefuse.fused1d.solve_chains`).
Termination uses the usual combined absolute/relative residual rule.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import SolverError
from .fused1d import solve_chains
from .graph import TrailDecomposition, ZoneGraph


@dataclass(frozen=True)
class AdmmConfig:
    """Solver knobs; defaults suit the zone surfaces in this package."""

    alpha: float = 1.0
    eps_abs: float = 1e-8
    eps_rel: float = 1e-6
    max_iters: int = 10_000
    adaptive: bool = True

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        if self.eps_abs <= 0 or self.eps_rel <= 0:
            raise ValueError("tolerances must be > 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass
class DenoiseProblem:
    """Per-zone aggregates plus the trail layout of the solver."""

    graph: ZoneGraph
    decomposition: TrailDecomposition
    y: np.ndarray        # per-node observation mean (0.0 where eta == 0)
    eta: np.ndarray      # per-node observation count
    slack_nodes: np.ndarray   # trail position -> node index
    offsets: np.ndarray       # chain boundaries into the slack arrays
    dropped: Counter = field(default_factory=Counter)

    @property
    def n_nodes(self) -> int:
        return self.graph.n_nodes


@dataclass
class DenoiseSolution:
    """Fitted signal plus solver diagnostics."""

    x: np.ndarray
    iterations: int
    primal_residuals: np.ndarray
    dual_residuals: np.ndarray
    objective: float
    converged: bool
    lam: float
    alpha_final: float
    z: np.ndarray
    u: np.ndarray
    objective_history: np.ndarray | None = None


def slack_layout(decomposition: TrailDecomposition) -> tuple[np.ndarray, np.ndarray]:
    """Concatenated trail positions and their chain offsets."""
    if decomposition.trails:
        slack = np.concatenate([np.asarray(t, dtype=np.int64)
                                for t in decomposition.trails])
    else:
        slack = np.empty(0, dtype=np.int64)
    lengths = [len(t) for t in decomposition.trails]
    offsets = np.zeros(len(lengths) + 1, dtype=np.int64)
    np.cumsum(lengths, out=offsets[1:])
    return slack, offsets


def build_problem(graph: ZoneGraph, decomposition: TrailDecomposition,
                  samples: Iterable[tuple[str, float]]) -> DenoiseProblem:
    """Aggregate (zone, value) samples into per-node means and counts.

    Zones not present in the graph are dropped and counted.  Graph
    zones with no samples stay in the problem with eta = 0; their
    fitted value is determined purely by the penalty.
    """
    n = graph.n_nodes
    total = np.zeros(n)
    eta = np.zeros(n)
    dropped: Counter = Counter()
    n_used = 0
    for zone, value in samples:
        i = graph.index.get(str(zone))
        if i is None:
            dropped["zone-not-in-graph"] += 1
            continue
        total[i] += float(value)
        eta[i] += 1.0
        n_used += 1
    if n_used == 0:
        raise SolverError("no samples fell inside the graph's zones")
    y = np.divide(total, eta, out=np.zeros(n), where=eta > 0)
    slack, offsets = slack_layout(decomposition)
    return DenoiseProblem(graph=graph, decomposition=decomposition, y=y,
                          eta=eta, slack_nodes=slack, offsets=offsets,
                          dropped=dropped)


def objective(problem: DenoiseProblem, x: np.ndarray, lam: float) -> float:
    """1/2 sum eta*(y-x)^2 + lam * sum over edges |x_r - x_s|."""
    x = np.asarray(x, dtype=float)
    if x.shape[0] != problem.n_nodes:
        raise ValueError("x dimension does not match the graph")
    loss = 0.5 * float(np.sum(problem.eta * (problem.y - x) ** 2))
    tv = 0.0
    for i, j in problem.graph.edges:
        tv += abs(x[i] - x[j])
    return loss + lam * tv


def _weighted_mean(problem: DenoiseProblem) -> float:
    total_eta = float(problem.eta.sum())
    if total_eta == 0:
        return 0.0
    return float(np.sum(problem.eta * problem.y) / total_eta)


def admm_solve(problem: DenoiseProblem, lam: float,
               config: AdmmConfig = AdmmConfig(),
               warm: DenoiseSolution | None = None,
               record_objective: bool = False) -> DenoiseSolution:
    """Run the trail-decomposed ADMM at one penalty strength.

    ``warm`` seeds x, z, u and the penalty parameter from a previous
    solution on the same graph (used when sweeping a lambda grid).
    """
    if lam < 0:
        raise ValueError("lam must be >= 0")
    y = problem.y
    eta = problem.eta
    n = problem.n_nodes
    slack = problem.slack_nodes
    nslack = slack.shape[0]
    fallback = _weighted_mean(problem)

    if lam == 0 or nslack == 0:
        # Loss-only minimizer: zone means; unobserved zones take the
        # weighted global mean (any value is optimal there).
        x = np.where(eta > 0, y, fallback)
        z = x[slack]
        return DenoiseSolution(
            x=x, iterations=0, primal_residuals=np.empty(0),
            dual_residuals=np.empty(0),
            objective=objective(problem, x, lam), converged=True, lam=lam,
            alpha_final=config.alpha, z=z, u=np.zeros(nslack))

    J = np.bincount(slack, minlength=n).astype(float)
    islanders = (eta == 0) & (J == 0)   # no data, no edges

    if warm is not None:
        if warm.x.shape[0] != n or warm.z.shape[0] != nslack:
            raise ValueError("warm-start solution does not match this "
                             "problem's graph and trail layout")
        x = warm.x.copy()
        z = warm.z.copy()
        u = warm.u.copy()
        alpha = warm.alpha_final
    else:
        x = np.where(eta > 0, y, fallback)
        z = x[slack]
        u = np.zeros(nslack)
        alpha = config.alpha

    w_chain = np.empty(nslack)
    sqrt_ns = np.sqrt(nslack)
    sqrt_n = np.sqrt(n)

    r_hist = np.empty(config.max_iters)
    s_hist = np.empty(config.max_iters)
    obj_hist = np.empty(config.max_iters) if record_objective else None

    converged = False
    it = 0
    for it in range(1, config.max_iters + 1):
        denom = eta + alpha * J
        num = eta * y + alpha * np.bincount(slack, weights=z - u, minlength=n)
        x = np.divide(num, denom, out=np.full(n, fallback), where=denom > 0)

        ax = x[slack]
        z_old = z
        w_chain.fill(alpha / 2.0)
        z = solve_chains(ax + u, w_chain, lam, problem.offsets)
        u = u + ax - z

        r_norm = float(np.linalg.norm(ax - z))
        s_norm = alpha * float(np.linalg.norm(
            np.bincount(slack, weights=z - z_old, minlength=n)))
        r_hist[it - 1] = r_norm
        s_hist[it - 1] = s_norm
        if obj_hist is not None:
            obj_hist[it - 1] = objective(problem, x, lam)

        if not np.isfinite(r_norm) or not np.isfinite(s_norm):
            raise SolverError(
                f"non-finite iterate at iteration {it} "
                f"(lam={lam:g}, alpha={alpha:g}, primal={r_norm:g}, "
                f"dual={s_norm:g})")

        eps_pri = sqrt_ns * config.eps_abs + config.eps_rel * max(
            float(np.linalg.norm(ax)), float(np.linalg.norm(z)))
        eps_dual = sqrt_n * config.eps_abs + config.eps_rel * alpha * float(
            np.linalg.norm(np.bincount(slack, weights=u, minlength=n)))
        if r_norm <= eps_pri and s_norm <= eps_dual:
            converged = True
            break

        if config.adaptive:
            if r_norm > 10.0 * s_norm:
                alpha *= 2.0
                u /= 2.0
            elif s_norm > 10.0 * r_norm:
                alpha /= 2.0
                u *= 2.0

    x = x.copy()
    x[islanders] = fallback
    return DenoiseSolution(
        x=x, iterations=it, primal_residuals=r_hist[:it].copy(),
        dual_residuals=s_hist[:it].copy(),
        objective=objective(problem, x, lam), converged=converged, lam=lam,
        alpha_final=alpha, z=z, u=u,
        objective_history=None if obj_hist is None else obj_hist[:it].copy())


def solver_diagnostics_text(solution: DenoiseSolution) -> str:
    """Per-iteration diagnostics as delimited text.

    Columns: iteration, primal residual, dual residual, objective (the
    objective column requires the solve to have recorded it).
    """
    lines = ["iteration,primal_residual,dual_residual,objective"]
    obj = solution.objective_history
    for i in range(solution.iterations):
        o = "" if obj is None else f"{obj[i]:.6f}"
        lines.append(f"{i + 1},{solution.primal_residuals[i]:.12g},"
                     f"{solution.dual_residuals[i]:.12g},{o}")
    return "\n".join(lines) + "\n"
