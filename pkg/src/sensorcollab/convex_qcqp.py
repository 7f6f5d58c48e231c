"""Log-barrier interior-point solver for linear objectives over convex
quadratic inequality constraints.

This is the subproblem engine behind the iterative convexification solver:
minimize c^T x subject to 0.5 x^T P_i x + q_i^T x + r_i <= 0, with every P_i
positive semidefinite.  Callers must supply a strictly feasible start; there
is no phase-I stage.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["QcqpProblem", "QcqpResult", "QcqpError", "solve"]


class QcqpError(RuntimeError):
    """Solver-level failure: infeasible start or Newton breakdown."""


@dataclass
class QcqpProblem:
    """minimize c^T x  s.t.  0.5 x^T P_i x + q_i^T x + r_i <= 0 for all i.

    ``constraints`` holds (P, q, r) triples; P may be None for affine rows.
    Optional elementwise lower bounds are folded into affine constraints at
    construction (use -inf for unbounded coordinates).
    """

    c: np.ndarray
    constraints: list[tuple[np.ndarray | None, np.ndarray, float]]
    lower_bounds: np.ndarray | None = None
    _rows: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        n = self.c.shape[0]
        rows = []
        for P, q, r in self.constraints:
            q = np.asarray(q, dtype=float)
            if q.shape != (n,):
                raise QcqpError(f"constraint vector shape {q.shape} != ({n},)")
            if P is not None:
                P = np.asarray(P, dtype=float)
                if P.shape != (n, n):
                    raise QcqpError(f"constraint matrix shape {P.shape} != ({n}, {n})")
            rows.append((P, q, float(r)))
        if self.lower_bounds is not None:
            lb = np.asarray(self.lower_bounds, dtype=float)
            if lb.shape != (n,):
                raise QcqpError(f"lower bound shape {lb.shape} != ({n},)")
            for j in np.flatnonzero(np.isfinite(lb)):
                e = np.zeros(n)
                e[j] = -1.0
                rows.append((None, e, float(lb[j])))
        self._rows = rows

    @property
    def dim(self) -> int:
        return self.c.shape[0]

    @property
    def num_constraints(self) -> int:
        return len(self._rows)

    def check_convexity(self, tol: float = 1e-10) -> None:
        """Assert every quadratic term is positive semidefinite.

        Not run during construction: the solvers build thousands of
        subproblems whose matrices are PSD by construction, and the
        eigenvalue checks would dominate their cost.  Tests call this.
        """
        for i, (P, _, _) in enumerate(self._rows):
            if P is None:
                continue
            floor = -tol * max(1.0, float(np.linalg.norm(P, 2)))
            smallest = float(np.linalg.eigvalsh(0.5 * (P + P.T)).min())
            if smallest < floor:
                raise QcqpError(
                    f"constraint {i} is not convex: min eigenvalue {smallest:.3e}")

    def constraint_values(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        vals = np.empty(len(self._rows))
        for i, (P, q, r) in enumerate(self._rows):
            v = q @ x + r
            if P is not None:
                v += 0.5 * x @ P @ x
            vals[i] = v
        return vals


@dataclass
class QcqpResult:
    x: np.ndarray
    objective: float
    status: str               # "optimal" | "max_newton"
    gap_bound: float          # m / t at exit
    newton_iterations: int


def solve(problem: QcqpProblem, x0: np.ndarray, tol: float = 1e-8,
          t0: float = 1.0, mu_barrier: float = 10.0,
          newton_tol: float = 1e-10, max_newton: int = 50) -> QcqpResult:
    """Barrier method: center for fixed t, then increase t until m/t <= tol.

    Requires a strictly feasible ``x0``.  Returns an iterate whose objective
    is within ``tol`` of the optimum (standard barrier duality-gap bound).
    """
    x = np.asarray(x0, dtype=float).copy()
    vals = problem.constraint_values(x)
    if (vals >= 0).any():
        worst = float(vals.max())
        raise QcqpError(f"start is not strictly feasible (max constraint {worst:.3e})")

    m = problem.num_constraints
    t = float(t0)
    total_newton = 0
    status = "optimal"
    while True:
        iters, converged = _center(problem, x, t, newton_tol, max_newton)
        total_newton += iters
        if not converged:
            status = "max_newton"
        if m / t <= tol:
            break
        t *= mu_barrier
    return QcqpResult(x=x, objective=float(problem.c @ x), status=status,
                      gap_bound=m / t, newton_iterations=total_newton)


def _center(problem: QcqpProblem, x: np.ndarray, t: float,
            newton_tol: float, max_newton: int) -> tuple[int, bool]:
    """Damped Newton on the barrier-augmented objective, in place."""
    n = problem.dim
    for it in range(max_newton):
        vals = problem.constraint_values(x)
        slack = -vals
        grad = t * problem.c.copy()
        hess = np.zeros((n, n))
        for (P, q, r), s in zip(problem._rows, slack):
            g_i = q if P is None else q + P @ x
            grad += g_i / s
            hess += np.outer(g_i, g_i) / (s * s)
            if P is not None:
                hess += P / s
        try:
            step = -np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            hess += (1e-12 * max(1.0, np.trace(hess) / n)) * np.eye(n)
            step = -np.linalg.solve(hess, grad)
        decrement = -grad @ step
        if decrement <= 2 * newton_tol:
            return it, True

        beta = 1.0
        phi0 = t * (problem.c @ x) - np.sum(np.log(slack))
        while beta > 1e-18:
            cand = x + beta * step
            cvals = problem.constraint_values(cand)
            if (cvals < 0).all():
                phi = t * (problem.c @ cand) - np.sum(np.log(-cvals))
                if phi <= phi0 - 0.25 * beta * decrement:
                    break
            beta *= 0.5
        else:
            raise QcqpError("line search underflow during Newton centering")
        x += beta * step
    return max_newton, False
