"""Iterative convexification for the uncorrelated-parameters design problem.

The sum-of-quadratic-ratios distortion is rewritten in epigraph form with
auxiliary per-step variables (u, r, s); the only nonconvex constraints are of
difference-of-convex type.  Each outer iteration linearizes their concave
parts around the current point and solves the resulting convex QCQP with the
internal barrier solver, producing a non-increasing objective sequence.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import convex_qcqp, reports
from .model import ProblemInstance, SolverView, as_view

__all__ = ["EpigraphState", "VariableLayout", "linearized_subproblem",
           "random_feasible_init", "interior_start", "run"]

# Strict inequalities s > 0 are implemented as s >= EPS_S; far below any
# attainable optimum (s >= sigma_varsigma^2 at every useful point).
EPS_S = 1e-8


@dataclass
class EpigraphState:
    """Decision vector w plus the per-step epigraph variables."""

    w: np.ndarray
    u: np.ndarray
    r: np.ndarray
    s: np.ndarray

    def copy(self) -> "EpigraphState":
        return EpigraphState(self.w.copy(), self.u.copy(),
                             self.r.copy(), self.s.copy())


@dataclass(frozen=True)
class VariableLayout:
    """Index map of the stacked QCQP variable [w; u; r; s]."""

    dim_w: int
    horizon: int

    @property
    def total(self) -> int:
        return self.dim_w + 3 * self.horizon

    def split(self, x: np.ndarray) -> EpigraphState:
        d, K = self.dim_w, self.horizon
        return EpigraphState(w=x[:d].copy(),
                             u=x[d:d + K].copy(),
                             r=x[d + K:d + 2 * K].copy(),
                             s=x[d + 2 * K:d + 3 * K].copy())

    def join(self, state: EpigraphState) -> np.ndarray:
        return np.concatenate([state.w, state.u, state.r, state.s])

    def u_index(self, k: int) -> int:
        return self.dim_w + k

    def r_index(self, k: int) -> int:
        return self.dim_w + self.horizon + k

    def s_index(self, k: int) -> int:
        return self.dim_w + 2 * self.horizon + k


def constraint_violations(view: SolverView, state: EpigraphState) -> np.ndarray:
    """Values of every original (unlinearized) constraint; feasible iff <= 0."""
    inst = view.instance
    vals = []
    for k in range(view.horizon):
        wk = view.block(state.w, k)
        s, u, r = state.s[k], state.u[k], state.r[k]
        vals.append(s * s + u * u + 2 * r - (s + u) ** 2)
        vals.append(s - wk @ inst.S[k] @ wk - inst.sigma_varsigma_sq)
        vals.append(inst.sigma_eps_sq * (wk @ inst.R[k] @ wk)
                    + inst.sigma_varsigma_sq - r)
        vals.append(EPS_S - s)
    for Qm, Em in zip(view.energy, inst.budgets):
        vals.append(state.w @ Qm @ state.w - Em)
    return np.asarray(vals)


def random_feasible_init(problem: ProblemInstance | SolverView,
                         rng: np.random.Generator) -> EpigraphState:
    """Uniform random weights scaled onto the energy boundary, with the
    epigraph variables set to their active values."""
    view = as_view(problem)
    inst = view.instance
    w = rng.uniform(0.0, 1.0, size=view.dim)
    alpha = np.inf
    for Qm, Em in zip(view.energy, inst.budgets):
        quad = w @ Qm @ w
        if quad > 0:
            alpha = min(alpha, np.sqrt(Em / quad))
    w = w * (0.0 if not np.isfinite(alpha) else alpha)
    K = view.horizon
    s = np.empty(K)
    r = np.empty(K)
    for k in range(K):
        wk = view.block(w, k)
        s[k] = wk @ inst.S[k] @ wk + inst.sigma_varsigma_sq
        r[k] = inst.sigma_eps_sq * (wk @ inst.R[k] @ wk) + inst.sigma_varsigma_sq
    return EpigraphState(w=w, u=r / s, r=r, s=s)


def linearized_subproblem(problem: ProblemInstance | SolverView,
                          hat: EpigraphState
                          ) -> tuple[convex_qcqp.QcqpProblem, VariableLayout]:
    """Convex restriction around ``hat``: concave parts replaced by their
    tangent planes, every other constraint kept verbatim."""
    view = as_view(problem)
    inst = view.instance
    layout = VariableLayout(dim_w=view.dim, horizon=view.horizon)
    n = layout.total
    K = view.horizon

    c = np.zeros(n)
    c[layout.dim_w:layout.dim_w + K] = 1.0

    cons: list[tuple[np.ndarray | None, np.ndarray, float]] = []
    for k in range(K):
        su = hat.s[k] + hat.u[k]
        wk_hat = view.block(hat.w, k)
        iu, ir, is_ = layout.u_index(k), layout.r_index(k), layout.s_index(k)

        # s^2 + u^2 + 2r minus the tangent of (s + u)^2 at hat.
        P = np.zeros((n, n))
        P[iu, iu] = 2.0
        P[is_, is_] = 2.0
        q = np.zeros(n)
        q[ir] = 2.0
        q[iu] = -2.0 * su
        q[is_] = -2.0 * su
        cons.append((P, q, su * su))

        # s minus the tangent of w^T S w + sigma_varsigma^2 at hat.
        q = np.zeros(n)
        q[is_] = 1.0
        grad = 2.0 * (inst.S[k] @ wk_hat)
        q[view.blocks[k]] -= grad
        cons.append((None, q,
                     wk_hat @ inst.S[k] @ wk_hat - inst.sigma_varsigma_sq))

        # sigma_eps^2 w^T R w + sigma_varsigma^2 <= r (convex, kept exact).
        P = np.zeros((n, n))
        blk = view.blocks[k]
        P[blk, blk] = 2.0 * inst.sigma_eps_sq * inst.R[k]
        q = np.zeros(n)
        q[ir] = -1.0
        cons.append((P, q, inst.sigma_varsigma_sq))

    for Qm, Em in zip(view.energy, inst.budgets):
        P = np.zeros((n, n))
        P[:view.dim, :view.dim] = 2.0 * Qm
        cons.append((P, np.zeros(n), -float(Em)))

    lb = np.full(n, -np.inf)
    lb[layout.dim_w + 2 * K:] = EPS_S
    return convex_qcqp.QcqpProblem(c=c, constraints=cons, lower_bounds=lb), layout


def interior_start(problem: ProblemInstance | SolverView, hat: EpigraphState,
                   eta: float = 1e-6) -> EpigraphState:
    """Strictly feasible start for the subproblem linearized at ``hat``.

    The hat point itself may sit on the constraint boundary (the random
    initializer constructs it tight), so every constraint is nudged inward:
    weights shrink by 1-eta, r gains slack, s backs off its tangent bound,
    and u is placed strictly inside the linearized epigraph disk.
    """
    view = as_view(problem)
    inst = view.instance
    w = (1.0 - eta) * hat.w
    K = view.horizon
    s = np.empty(K)
    r = np.empty(K)
    u = np.empty(K)
    for k in range(K):
        wk_hat = view.block(hat.w, k)
        wk = view.block(w, k)
        bound = (2.0 * (wk_hat @ inst.S[k] @ wk) - wk_hat @ inst.S[k] @ wk_hat
                 + inst.sigma_varsigma_sq)
        s[k] = min(hat.s[k], bound) - eta * max(1.0, abs(bound))
        if s[k] <= EPS_S:
            raise convex_qcqp.QcqpError(
                f"cannot construct interior start: s[{k}] collapsed to {s[k]:.3e}")
        r[k] = (inst.sigma_eps_sq * (wk @ inst.R[k] @ wk)
                + inst.sigma_varsigma_sq + eta * max(1.0, hat.r[k]))
        su = hat.s[k] + hat.u[k]
        disc = 2.0 * su * s[k] - s[k] * s[k] - 2.0 * r[k]
        if disc <= 0:
            raise convex_qcqp.QcqpError(
                f"cannot construct interior start: empty epigraph disk at k={k}")
        u[k] = su - np.sqrt(disc * (1.0 - eta))
    return EpigraphState(w=w, u=u, r=r, s=s)


def run(problem: ProblemInstance | SolverView,
        init: EpigraphState,
        eps_ccp: float = 1e-3,
        max_iters: int = 100,
        subproblem_tol: float = 1e-8) -> reports.SolveReport:
    """Outer loop: linearize, solve, move the linearization point.

    Stops once the epigraph objective changes by at most ``eps_ccp`` between
    consecutive iterations (or at ``max_iters``).  The reported objective and
    trajectory carry the sigma_theta^2 scaling so they equal the distortion.
    """
    view = as_view(problem)
    scale = view.instance.sigma_theta_sq
    hat = init.copy()
    trajectory = [scale * float(np.sum(hat.u))]
    rows: list[dict] = []
    status = reports.STATUS_MAX_ITERS
    total_sub_iters = 0
    t_start = time.perf_counter()
    prev = float(np.sum(hat.u))
    iterations = 0

    for it in range(1, max_iters + 1):
        it_start = time.perf_counter()
        subproblem, layout = linearized_subproblem(view, hat)
        x0 = layout.join(interior_start(view, hat))
        try:
            result = convex_qcqp.solve(subproblem, x0, tol=subproblem_tol)
        except convex_qcqp.QcqpError as exc:
            status = reports.STATUS_FAILED
            rows.append({"iteration": it, "objective": trajectory[-1],
                         "max_energy_violation": float("nan"),
                         "subproblem_iters": 0,
                         "elapsed_ms": 1e3 * (time.perf_counter() - it_start),
                         "error": str(exc)})
            break
        hat = layout.split(result.x)
        iterations = it
        total_sub_iters += result.newton_iterations
        obj = float(np.sum(hat.u))
        trajectory.append(scale * obj)
        energy_violation = max(
            0.0, max(float(hat.w @ Qm @ hat.w - Em)
                     for Qm, Em in zip(view.energy, view.instance.budgets)))
        rows.append({"iteration": it, "objective": scale * obj,
                     "max_energy_violation": energy_violation,
                     "subproblem_iters": result.newton_iterations,
                     "elapsed_ms": 1e3 * (time.perf_counter() - it_start)})
        if it >= 2 and abs(obj - prev) <= eps_ccp:
            status = reports.STATUS_OK
            break
        prev = obj

    wall_ms = 1e3 * (time.perf_counter() - t_start)
    return reports.SolveReport(
        algorithm="ccp", status=status, iterations=iterations,
        objective=trajectory[-1], objective_trajectory=trajectory,
        final_w=hat.w, plan=view.expand_plan(hat.w), wall_ms=wall_ms,
        trajectory_rows=rows,
        extras={"u": hat.u, "r": hat.r, "s": hat.s,
                "subproblem_newton_total": total_sub_iters})
