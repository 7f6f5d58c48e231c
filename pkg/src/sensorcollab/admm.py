"""Splitting solver for the penalized semidefinite subproblem.

The subproblem (linear objective, one big information LMI, per-step
information and lifting LMIs, energy second-order cones, and the penalized
linearized difference-of-convex rows) is rewritten with one slack variable
per constraint.  Each iteration then alternates

* an unconstrained quadratic minimization over the primal block (closed
  forms for the scalar/matrix pair coupled to the big LMI, gradient descent
  with backtracking for the rest),
* Euclidean projections of the slack targets onto their cones, and
* a dual ascent step on the equality residuals.

Layouts come from :class:`~sensorcollab.model.SolverView`, so the same code
solves the standard (per-step weights) and shared-weights problems.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import reports
from .model import ProblemInstance, SolverView, as_view

__all__ = [
    "AdmmConfig", "PenalizedSdp", "PrimalSet", "SlackSet", "DualSet",
    "ConstraintResiduals", "project_soc", "project_psd",
    "closed_form_p_V", "gradient_uqp", "phi_value",
    "x_minimize", "z_minimize", "dual_update", "solve",
]

# Eigenvalues within this of zero are treated as zero when projecting,
# avoiding sign flips from round-off.
EIG_ZERO = 1e-12


@dataclass(frozen=True)
class AdmmConfig:
    rho: float = 10.0
    eps_admm: float = 1e-3
    eps_grad: float = 1e-3
    a1: float = 0.02
    a2: float = 0.5
    max_iters: int = 5000
    max_grad_iters: int = 500
    z_trace_cap: float = 1e6
    adapt_rho: bool = False

    def __post_init__(self):
        if not (self.rho > 0 and self.eps_admm > 0 and self.eps_grad > 0):
            raise ValueError("rho and tolerances must be positive")
        if not 0 < self.a1 < 0.5:
            raise ValueError("a1 must lie in (0, 0.5)")
        if not 0 < self.a2 < 1:
            raise ValueError("a2 must lie in (0, 1)")


def _sym(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


def _psd_sqrt(q: np.ndarray) -> np.ndarray:
    """Symmetric square root; tolerates the rank deficiency of sensors that
    touch few links (Cholesky would not)."""
    vals, vecs = np.linalg.eigh(_sym(q))
    vals = np.clip(vals, 0.0, None)
    return _sym((vecs * np.sqrt(vals)) @ vecs.T)


# ---------------------------------------------------------------------------
# Problem statement
# ---------------------------------------------------------------------------

class PenalizedSdp:
    """Penalized subproblem data plus everything precomputable once.

    Minimize  tr(V) + tau * sum_j tr(Z_j)  subject to the energy cones,
    the information LMIs, the lifting LMIs, and the penalized linearized
    difference-of-convex rows around ``w_hat``.
    """

    def __init__(self, problem: ProblemInstance | SolverView,
                 w_hat: np.ndarray, tau: float):
        view = as_view(problem)
        inst = view.instance
        w_hat = np.asarray(w_hat, dtype=float)
        if w_hat.shape != (view.dim,):
            raise ValueError(f"w_hat length {w_hat.shape}, expected ({view.dim},)")
        if not np.isfinite(w_hat).all():
            raise ValueError("w_hat must be finite")
        if tau <= 0:
            raise ValueError("tau must be positive")

        self.view = view
        self.instance = inst
        self.w_hat = w_hat.copy()
        self.tau = float(tau)
        self.dim = view.dim
        self.K = view.horizon
        self.N = inst.num_sensors
        self.M = inst.num_transmitters
        self.groups = view.lift_groups
        self.J = len(self.groups)
        self.block_size = view.block_size
        self.c_ratio = inst.sigma_eps_sq / inst.sigma_varsigma_sq
        self.inv_eps = 1.0 / np.sqrt(inst.sigma_eps_sq)

        self.group_of_k = np.empty(self.K, dtype=int)
        for j, (_, ks) in enumerate(self.groups):
            for k in ks:
                self.group_of_k[k] = j
        self.w_hat_blocks = [self.w_hat[sl] for sl, _ in self.groups]
        self.w_hat_outer = [np.outer(b, b) for b in self.w_hat_blocks]
        self.eye_block = np.eye(view.block_size)

        self.q_sqrt = [_psd_sqrt(q) for q in view.energy]
        self.sum_q = _sym(sum(view.energy))
        self.c_vecs = [np.concatenate([np.zeros(self.dim), [np.sqrt(e)]])
                       for e in inst.budgets]

        self.C = inst.C
        self.h_over_eps = [self.inv_eps * inst.obs_gains[k] for k in range(self.K)]
        self.G = [inst.G[k] for k in range(self.K)]
        self.R = [inst.R[k] for k in range(self.K)]   # = G_k G_k^T

    # -- constraint-side matrix assemblies ---------------------------------

    def info_lmi(self, p: np.ndarray, V: np.ndarray) -> np.ndarray:
        """[[C - diag(p), I], [I, V]]"""
        K = self.K
        out = np.empty((2 * K, 2 * K))
        out[:K, :K] = self.C - np.diag(p)
        out[:K, K:] = np.eye(K)
        out[K:, :K] = np.eye(K)
        out[K:, K:] = V
        return out

    def step_lmi(self, k: int, p_k: float, U: np.ndarray) -> np.ndarray:
        """[[p_k, h_k^T / s_eps], [h_k / s_eps, I + c G_k^T U G_k]]"""
        N = self.N
        out = np.empty((N + 1, N + 1))
        out[0, 0] = p_k
        out[0, 1:] = self.h_over_eps[k]
        out[1:, 0] = self.h_over_eps[k]
        out[1:, 1:] = np.eye(N) + self.c_ratio * (self.G[k].T @ U @ self.G[k])
        return out

    def lift_lmi(self, j: int, U: np.ndarray, w_j: np.ndarray) -> np.ndarray:
        """[[U_j, w_j], [w_j^T, 1]]"""
        L = U.shape[0]
        out = np.empty((L + 1, L + 1))
        out[:L, :L] = U
        out[:L, L] = w_j
        out[L, :L] = w_j
        out[L, L] = 1.0
        return out

    def dc_lhs(self, j: int, Z: np.ndarray, U: np.ndarray,
               w_j: np.ndarray) -> np.ndarray:
        """Z_j - U_j + w_hat_j w_j^T + w_j w_hat_j^T - w_hat_j w_hat_j^T"""
        wh = self.w_hat_blocks[j]
        cross = np.outer(wh, w_j)
        return Z - U + cross + cross.T - np.outer(wh, wh)

    def soc_residual(self, m: int, w: np.ndarray, lam: np.ndarray) -> np.ndarray:
        top = self.q_sqrt[m] @ w
        return np.concatenate([top, [0.0]]) - lam + self.c_vecs[m]


# ---------------------------------------------------------------------------
# Variable sets
# ---------------------------------------------------------------------------

@dataclass
class PrimalSet:
    w: np.ndarray
    p: np.ndarray
    V: np.ndarray
    U: list[np.ndarray]
    Z: list[np.ndarray]

    def copy(self) -> "PrimalSet":
        return PrimalSet(self.w.copy(), self.p.copy(), self.V.copy(),
                         [u.copy() for u in self.U], [z.copy() for z in self.Z])

    def symmetrize(self) -> None:
        self.V = _sym(self.V)
        self.U = [_sym(u) for u in self.U]
        self.Z = [_sym(z) for z in self.Z]

    @staticmethod
    def cold_start(sdp: PenalizedSdp) -> "PrimalSet":
        L = sdp.block_size
        return PrimalSet(w=np.ones(sdp.dim), p=np.ones(sdp.K),
                         V=np.eye(sdp.K),
                         U=[np.eye(L) for _ in range(sdp.J)],
                         Z=[np.eye(L) for _ in range(sdp.J)])


@dataclass
class SlackSet:
    lam: list[np.ndarray]       # per m, length dim+1, second-order cone
    L1: np.ndarray              # 2K x 2K, PSD
    L2: list[np.ndarray]        # per k, (N+1) x (N+1), PSD
    L3: list[np.ndarray]        # per group, (L+1) x (L+1), PSD
    L4: list[np.ndarray]        # per group, L x L, PSD

    def copy(self) -> "SlackSet":
        return SlackSet([v.copy() for v in self.lam], self.L1.copy(),
                        [a.copy() for a in self.L2],
                        [a.copy() for a in self.L3],
                        [a.copy() for a in self.L4])

    @staticmethod
    def zeros(sdp: PenalizedSdp) -> "SlackSet":
        L, N, K = sdp.block_size, sdp.N, sdp.K
        return SlackSet(
            lam=[np.zeros(sdp.dim + 1) for _ in range(sdp.M)],
            L1=np.zeros((2 * K, 2 * K)),
            L2=[np.zeros((N + 1, N + 1)) for _ in range(K)],
            L3=[np.zeros((L + 1, L + 1)) for _ in range(sdp.J)],
            L4=[np.zeros((L, L)) for _ in range(sdp.J)])

    def distance_to(self, other: "SlackSet") -> float:
        total = sum(np.linalg.norm(a - b)
                    for a, b in zip(self.lam, other.lam))
        total += np.linalg.norm(self.L1 - other.L1)
        for mine, theirs in ((self.L2, other.L2), (self.L3, other.L3),
                             (self.L4, other.L4)):
            total += sum(np.linalg.norm(a - b) for a, b in zip(mine, theirs))
        return float(total)


class DualSet(SlackSet):
    """Multipliers mirror the slack shapes one for one."""

    @staticmethod
    def zeros(sdp: PenalizedSdp) -> "DualSet":
        z = SlackSet.zeros(sdp)
        return DualSet(z.lam, z.L1, z.L2, z.L3, z.L4)


@dataclass
class ConstraintResiduals:
    f: list[np.ndarray]
    F1: np.ndarray
    F2: list[np.ndarray]
    F3: list[np.ndarray]
    F4: list[np.ndarray]

    def total_norm(self) -> float:
        """Sum of the (Frobenius) norms of every residual block."""
        total = sum(np.linalg.norm(v) for v in self.f)
        total += np.linalg.norm(self.F1)
        for group in (self.F2, self.F3, self.F4):
            total += sum(np.linalg.norm(a) for a in group)
        return float(total)


@dataclass
class _ConstraintMatrices:
    """Left-hand sides of every equality constraint at one primal point."""

    soc: list[np.ndarray]     # per m: [Q_m^{1/2} w; 0] + c_m
    M1: np.ndarray
    M2: list[np.ndarray]
    M3: list[np.ndarray]
    M4: list[np.ndarray]


def _assemble(sdp: PenalizedSdp, primal: PrimalSet) -> _ConstraintMatrices:
    w = primal.w
    soc = []
    for m in range(sdp.M):
        top = sdp.q_sqrt[m] @ w
        soc.append(np.concatenate([top, [0.0]]) + sdp.c_vecs[m])
    M1 = sdp.info_lmi(primal.p, primal.V)
    M2 = [sdp.step_lmi(k, primal.p[k], primal.U[sdp.group_of_k[k]])
          for k in range(sdp.K)]
    M3, M4 = [], []
    for j, (sl, _) in enumerate(sdp.groups):
        w_j = w[sl]
        M3.append(sdp.lift_lmi(j, primal.U[j], w_j))
        M4.append(sdp.dc_lhs(j, primal.Z[j], primal.U[j], w_j))
    return _ConstraintMatrices(soc=soc, M1=M1, M2=M2, M3=M3, M4=M4)


def _residuals_from(mats: _ConstraintMatrices,
                    slack: SlackSet) -> ConstraintResiduals:
    return ConstraintResiduals(
        f=[t - lam for t, lam in zip(mats.soc, slack.lam)],
        F1=mats.M1 - slack.L1,
        F2=[a - b for a, b in zip(mats.M2, slack.L2)],
        F3=[a - b for a, b in zip(mats.M3, slack.L3)],
        F4=[a - b for a, b in zip(mats.M4, slack.L4)])


def constraint_residuals(sdp: PenalizedSdp, primal: PrimalSet,
                         slack: SlackSet) -> ConstraintResiduals:
    return _residuals_from(_assemble(sdp, primal), slack)


# ---------------------------------------------------------------------------
# Cone projections
# ---------------------------------------------------------------------------

def project_soc(beta: np.ndarray) -> np.ndarray:
    """Nearest point of { (v, t) : ||v|| <= t } by the three-case formula."""
    beta = np.asarray(beta, dtype=float)
    v, t = beta[:-1], beta[-1]
    nv = float(np.linalg.norm(v))
    if nv <= -t:
        return np.zeros_like(beta)
    if nv <= t:
        return beta.copy()
    coef = 0.5 * (1.0 + t / nv)
    return coef * np.concatenate([v, [nv]])


def project_psd(phi: np.ndarray) -> np.ndarray:
    """Nearest positive semidefinite matrix (eigenvalue clamping)."""
    sym = _sym(np.asarray(phi, dtype=float))
    vals, vecs = np.linalg.eigh(sym)
    vals = np.where(vals < EIG_ZERO, 0.0, vals)
    return _sym((vecs * vals) @ vecs.T)


# ---------------------------------------------------------------------------
# X-step: closed forms plus gradient descent on the quadratic
# ---------------------------------------------------------------------------

class _Shifted:
    """Slack-minus-scaled-dual targets shared by the objective and gradients."""

    def __init__(self, sdp: PenalizedSdp, slack: SlackSet, dual: DualSet,
                 rho: float):
        inv = 1.0 / rho
        self.alpha = [slack.lam[m] - sdp.c_vecs[m] - inv * dual.lam[m]
                      for m in range(sdp.M)]
        self.U1 = slack.L1 - inv * dual.L1
        self.U2 = [slack.L2[k] - inv * dual.L2[k] for k in range(sdp.K)]
        self.U3 = [slack.L3[j] - inv * dual.L3[j] for j in range(sdp.J)]
        self.U4 = [slack.L4[j] - inv * dual.L4[j] for j in range(sdp.J)]
        # gamma2[k]: scalar corner of the step-k target; gamma3[j]: the
        # weight column of the lifting target.
        self.gamma2 = np.array([self.U2[k][0, 0] for k in range(sdp.K)])
        self.gamma3 = [self.U3[j][:-1, -1] for j in range(sdp.J)]
        self.U3_11 = [_sym(self.U3[j][:-1, :-1]) for j in range(sdp.J)]
        # H0[j] = w_hat_j w_hat_j^T + U4[j]; the state-independent part of
        # both the w-gradient matrix and the T-matrix.
        self.H0 = [sdp.w_hat_outer[j] + _sym(self.U4[j])
                   for j in range(sdp.J)]
        # Per-step sandwich constants: c * G (I - U2^{22}) G^T.
        self.B = [sdp.c_ratio * (sdp.G[k] @ (np.eye(sdp.N) - self.U2[k][1:, 1:])
                                 @ sdp.G[k].T)
                  for k in range(sdp.K)]
        self.sum_qa = sum(sdp.q_sqrt[m] @ self.alpha[m][:-1]
                          for m in range(sdp.M))


def closed_form_p_V(sdp: PenalizedSdp, slack: SlackSet, dual: DualSet,
                    rho: float) -> tuple[np.ndarray, np.ndarray]:
    """Stationary points of the quadratic in p and V."""
    sh = _Shifted(sdp, slack, dual, rho)
    K = sdp.K
    p = 0.5 * (np.diag(sdp.C) + sh.gamma2 - np.diag(sh.U1[:K, :K]))
    V = _sym(sh.U1[K:, K:]) - np.eye(K) / rho
    return p, V


def phi_value(sdp: PenalizedSdp, primal: PrimalSet, slack: SlackSet,
              dual: DualSet, rho: float) -> float:
    """Objective of the unconstrained quadratic program (the smooth part of
    the augmented Lagrangian, duals completed into squares)."""
    sh = _Shifted(sdp, slack, dual, rho)
    return _phi(sdp, primal, sh, rho)


def _phi(sdp: PenalizedSdp, primal: PrimalSet, sh: _Shifted,
         rho: float) -> float:
    w, p, V = primal.w, primal.p, primal.V
    total = float(np.trace(V)) + sdp.tau * sum(float(np.trace(z))
                                               for z in primal.Z)
    quad = 0.0
    for m in range(sdp.M):
        top = sdp.q_sqrt[m] @ w - sh.alpha[m][:-1]
        quad += top @ top + sh.alpha[m][-1] ** 2
    quad += np.sum((sdp.info_lmi(p, V) - sh.U1) ** 2)
    for k in range(sdp.K):
        diff = sdp.step_lmi(k, p[k], primal.U[sdp.group_of_k[k]]) - sh.U2[k]
        quad += np.sum(diff * diff)
    for j, (sl, _) in enumerate(sdp.groups):
        w_j = w[sl]
        diff = sdp.lift_lmi(j, primal.U[j], w_j) - sh.U3[j]
        quad += np.sum(diff * diff)
        diff = sdp.dc_lhs(j, primal.Z[j], primal.U[j], w_j) - sh.U4[j]
        quad += np.sum(diff * diff)
    return total + 0.5 * rho * quad


@dataclass
class UqpGradients:
    w: np.ndarray
    p: np.ndarray
    V: np.ndarray
    U: list[np.ndarray]
    Z: list[np.ndarray]

    def squared_norm_wuz(self) -> float:
        """The descent-loop stopping functional: gradient energy over the
        variables the gradient loop actually moves."""
        total = float(self.w @ self.w)
        total += sum(float(np.sum(g * g)) for g in self.U)
        total += sum(float(np.sum(g * g)) for g in self.Z)
        return total


def gradient_uqp(sdp: PenalizedSdp, primal: PrimalSet, slack: SlackSet,
                 dual: DualSet, rho: float) -> UqpGradients:
    """All five gradient blocks of the quadratic objective."""
    sh = _Shifted(sdp, slack, dual, rho)
    return _gradients(sdp, primal, sh, rho)


def _gradients(sdp: PenalizedSdp, primal: PrimalSet, sh: _Shifted,
               rho: float) -> UqpGradients:
    w, p, V = primal.w, primal.p, primal.V
    K = sdp.K

    grad_w = rho * (sdp.sum_q @ w - sh.sum_qa)
    grad_U = []
    grad_Z = []
    for j, (sl, _) in enumerate(sdp.groups):
        w_j = w[sl]
        wh = sdp.w_hat_blocks[j]
        cross = np.outer(wh, w_j)
        T = cross + cross.T - sh.H0[j]
        diff_uz = primal.U[j] - primal.Z[j]
        # M = (cross + cross^T) - (U - Z + H0) = T - (U - Z)
        M = T - diff_uz
        grad_w[sl] += 2.0 * rho * (w_j - sh.gamma3[j]) + 2.0 * rho * (M @ wh)

        gU = rho * (2.0 * primal.U[j] - sh.U3_11[j] - primal.Z[j] - T)
        for k in sdp.groups[j][1]:
            gU = gU + rho * (sh.B[k] + sdp.c_ratio ** 2 *
                             (sdp.R[k] @ primal.U[j] @ sdp.R[k]))
        grad_U.append(gU)
        grad_Z.append(sdp.tau * sdp.eye_block + rho * (T - diff_uz))

    grad_p = rho * (2.0 * p + np.diag(sh.U1[:K, :K]) - np.diag(sdp.C)
                    - sh.gamma2)
    grad_V = np.eye(K) + rho * (V - _sym(sh.U1[K:, K:]))
    return UqpGradients(w=grad_w, p=grad_p, V=grad_V, U=grad_U, Z=grad_Z)


def _direction_curvature(sdp: PenalizedSdp, d_w: np.ndarray,
                         d_U: list[np.ndarray], d_Z: list[np.ndarray],
                         rho: float) -> float:
    """Exact d^T H d of the quadratic along the step direction."""
    quad = float(d_w @ sdp.sum_q @ d_w)
    for j, (sl, ks) in enumerate(sdp.groups):
        dw_j = d_w[sl]
        for k in ks:
            inner = sdp.G[k].T @ d_U[j] @ sdp.G[k]
            quad += sdp.c_ratio ** 2 * float(np.sum(inner * inner))
        quad += float(np.sum(d_U[j] * d_U[j])) + 2.0 * float(dw_j @ dw_j)
        wh = sdp.w_hat_blocks[j]
        cross = np.outer(wh, dw_j)
        block = d_Z[j] - d_U[j] + cross + cross.T
        quad += float(np.sum(block * block))
    return rho * quad


def x_minimize(sdp: PenalizedSdp, primal: PrimalSet, slack: SlackSet,
               dual: DualSet, config: AdmmConfig,
               rho: float | None = None) -> tuple[PrimalSet, int, bool]:
    """One primal update: closed forms for (p, V), then gradient descent
    with backtracking on (w, {U}, {Z}) until the gradient energy falls
    below ``eps_grad``.

    Returns (new primal, gradient iterations, stalled flag).  The printed
    algorithm ascends along +gradient; the line-search acceptance test only
    admits decrease, so the step here is along -gradient.  Because the
    objective is an exact quadratic, the backtracking loop is evaluated in
    closed form (the accepted step is the same power of a2 the literal loop
    would return).
    """
    rho = config.rho if rho is None else rho
    sh = _Shifted(sdp, slack, dual, rho)
    out = primal.copy()
    K = sdp.K
    out.p = 0.5 * (np.diag(sdp.C) + sh.gamma2 - np.diag(sh.U1[:K, :K]))
    out.V = _sym(sh.U1[K:, K:]) - np.eye(K) / rho

    stalled = False
    steps = 0
    # Repeat-until loop: at least one descent step is taken per call (the
    # duals move between calls, so freezing the primal would stall the outer
    # iteration), and the returned point satisfies the gradient test.
    while steps < config.max_grad_iters:
        grads = _gradients(sdp, out, sh, rho)
        c_grad = grads.squared_norm_wuz()
        if c_grad <= 1e-30 or (steps >= 1 and c_grad <= config.eps_grad):
            break
        d_w = -grads.w
        d_U = [-g for g in grads.U]
        d_Z = [-g for g in grads.Z]
        curv = _direction_curvature(sdp, d_w, d_U, d_Z, rho)
        # Armijo: phi(x + kappa d) = phi - kappa c_grad + 0.5 kappa^2 curv
        # must fall below phi - a1 kappa c_grad.
        kappa = config.a2
        if curv > 0:
            threshold = 2.0 * (1.0 - config.a1) * c_grad / curv
            while kappa >= threshold and kappa > 1e-16:
                kappa *= config.a2
        if kappa <= 1e-16:
            stalled = True
            break
        out.w = out.w + kappa * d_w
        out.U = [u + kappa * d for u, d in zip(out.U, d_U)]
        out.Z = [z + kappa * d for z, d in zip(out.Z, d_Z)]
        steps += 1
    out.symmetrize()
    return out, steps, stalled


# ---------------------------------------------------------------------------
# Z-step and dual step
# ---------------------------------------------------------------------------

def _z_minimize_from(mats: _ConstraintMatrices, dual: DualSet,
                     rho: float) -> SlackSet:
    inv = 1.0 / rho
    lam = [project_soc(t + inv * d) for t, d in zip(mats.soc, dual.lam)]
    L1 = project_psd(mats.M1 + inv * dual.L1)
    L2 = [project_psd(a + inv * d) for a, d in zip(mats.M2, dual.L2)]
    L3 = [project_psd(a + inv * d) for a, d in zip(mats.M3, dual.L3)]
    L4 = [project_psd(a + inv * d) for a, d in zip(mats.M4, dual.L4)]
    return SlackSet(lam=lam, L1=L1, L2=L2, L3=L3, L4=L4)


def z_minimize(sdp: PenalizedSdp, primal: PrimalSet, dual: DualSet,
               rho: float) -> SlackSet:
    """Project every slack target onto its cone."""
    return _z_minimize_from(_assemble(sdp, primal), dual, rho)


def dual_update(dual: DualSet, residuals: ConstraintResiduals,
                rho: float) -> DualSet:
    return DualSet(
        lam=[d + rho * r for d, r in zip(dual.lam, residuals.f)],
        L1=dual.L1 + rho * residuals.F1,
        L2=[d + rho * r for d, r in zip(dual.L2, residuals.F2)],
        L3=[d + rho * r for d, r in zip(dual.L3, residuals.F3)],
        L4=[d + rho * r for d, r in zip(dual.L4, residuals.F4)])


# ---------------------------------------------------------------------------
# Main loop
# ---------------------------------------------------------------------------

def objective_value(sdp: PenalizedSdp, primal: PrimalSet) -> float:
    return float(np.trace(primal.V)
                 + sdp.tau * sum(np.trace(z) for z in primal.Z))


def solve(sdp: PenalizedSdp, config: AdmmConfig | None = None,
          warm_primal: PrimalSet | None = None
          ) -> tuple[PrimalSet, reports.SolveReport]:
    """Alternate primal, slack, and dual updates until both the constraint
    residual and the slack progress fall below ``eps_admm``."""
    config = config or AdmmConfig()
    rho = config.rho
    primal = warm_primal.copy() if warm_primal is not None \
        else PrimalSet.cold_start(sdp)
    slack = SlackSet.zeros(sdp)
    dual = DualSet.zeros(sdp)

    rows: list[dict] = []
    objectives: list[float] = []
    status = reports.STATUS_MAX_ITERS
    iterations = 0
    t_start = time.perf_counter()

    for it in range(1, config.max_iters + 1):
        it_start = time.perf_counter()
        primal, grad_iters, stalled = x_minimize(sdp, primal, slack, dual,
                                                 config, rho=rho)
        for j, z in enumerate(primal.Z):
            tr = float(np.trace(z))
            if tr > config.z_trace_cap:
                primal.Z[j] = z * (config.z_trace_cap / tr)
        mats = _assemble(sdp, primal)
        new_slack = _z_minimize_from(mats, dual, rho)
        residuals = _residuals_from(mats, new_slack)
        dual = dual_update(dual, residuals, rho)

        primal_res = residuals.total_norm()
        slack_change = new_slack.distance_to(slack)
        slack = new_slack
        obj = objective_value(sdp, primal)
        objectives.append(obj)
        iterations = it
        rows.append({"iteration": it, "objective": obj,
                     "primal_residual": primal_res,
                     "slack_change": slack_change, "rho": rho,
                     "grad_iters": grad_iters,
                     "elapsed_ms": 1e3 * (time.perf_counter() - it_start)})
        if stalled:
            status = reports.STATUS_STALLED
            break
        if primal_res <= config.eps_admm and slack_change <= config.eps_admm:
            status = reports.STATUS_OK
            break
        if config.adapt_rho:
            if primal_res > 10.0 * slack_change:
                rho *= 2.0
            elif slack_change > 10.0 * primal_res:
                rho *= 0.5

    wall_ms = 1e3 * (time.perf_counter() - t_start)
    report = reports.SolveReport(
        algorithm="admm", status=status, iterations=iterations,
        objective=objectives[-1] if objectives else float("nan"),
        objective_trajectory=objectives, final_w=primal.w,
        plan=sdp.view.expand_plan(primal.w), wall_ms=wall_ms,
        trajectory_rows=rows,
        extras={"primal_residual": rows[-1]["primal_residual"] if rows else None,
                "slack_change": rows[-1]["slack_change"] if rows else None,
                "rho_final": rho})
    return primal, report
