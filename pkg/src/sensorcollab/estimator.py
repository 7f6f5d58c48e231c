"""Estimation-error evaluation and Monte Carlo simulation of the LMMSE chain.

All functions are pure in (instance, plan).  Three routes to the same error
covariance are provided: the general dense form, the per-step quadratic-ratio
form valid for a diagonal prior, and the rank-one-update form that exposes the
dependence on the collaboration weights; they agree to solver precision and
cross-check each other in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ProblemInstance

__all__ = [
    "CollaborationPlan",
    "ErrorReport",
    "IllConditionedError",
    "error_covariance_general",
    "error_covariance_correlated",
    "distortion_uncorrelated",
    "transmission_cost",
    "simulate_mse",
]

# Plans whose inner system matrices have a reciprocal condition number below
# this are rejected rather than regularized.
RCOND_FLOOR = 1e-14


class IllConditionedError(np.linalg.LinAlgError):
    """A required matrix inverse is numerically meaningless for this plan."""


@dataclass(frozen=True)
class CollaborationPlan:
    """Stacked collaboration vector w = [w_1; ...; w_K] plus per-step views."""

    w: np.ndarray
    horizon: int
    num_links: int

    @staticmethod
    def coerce(instance: ProblemInstance, w) -> "CollaborationPlan":
        if isinstance(w, CollaborationPlan):
            plan = w
        else:
            plan = CollaborationPlan(np.asarray(w, dtype=float).ravel(),
                                     instance.horizon, instance.num_links)
        if plan.w.shape != (instance.dim,):
            raise ValueError(
                f"plan has length {plan.w.shape}, instance needs ({instance.dim},)")
        if not np.isfinite(plan.w).all():
            raise ValueError("plan contains non-finite entries")
        return plan

    def block(self, k: int) -> np.ndarray:
        L = self.num_links
        return self.w[k * L:(k + 1) * L]

    def matrix(self, instance: ProblemInstance, k: int) -> np.ndarray:
        """The M x N weight matrix W_k scattered onto the topology support."""
        return instance.topology.scatter(self.block(k))


@dataclass(frozen=True)
class ErrorReport:
    """Error covariance of the LMMSE estimate and its trace."""

    covariance: np.ndarray
    trace: float

    def to_json_dict(self) -> dict:
        return {"trace": self.trace,
                "covariance": self.covariance.ravel().tolist()}


def _report(P: np.ndarray) -> ErrorReport:
    P = 0.5 * (P + P.T)
    return ErrorReport(covariance=P, trace=float(np.trace(P)))


def _guarded_inv(A: np.ndarray, what: str) -> np.ndarray:
    # 1-norm reciprocal condition estimate; cheap at these sizes.
    norm = np.linalg.norm(A, 1)
    try:
        inv = np.linalg.inv(A)
    except np.linalg.LinAlgError as exc:
        raise IllConditionedError(f"{what} is singular") from exc
    rcond = 1.0 / (norm * np.linalg.norm(inv, 1)) if norm > 0 else 0.0
    if rcond < RCOND_FLOOR:
        raise IllConditionedError(f"{what} has rcond {rcond:.2e}")
    return inv


def _received_mix(instance: ProblemInstance, plan: CollaborationPlan):
    """Per-step scalars/vectors of the received signal.

    Returns (a, B, dnu) with a_k = g_k^T W_k h_k (signal gain through the
    collaboration stage), B[k] = W_k^T g_k (noise mixing row), and
    dnu_k = sigma_eps^2 ||B_k||^2 + sigma_varsigma^2 (received noise power).
    """
    K = instance.horizon
    a = np.empty(K)
    B = np.empty((K, instance.num_sensors))
    for k in range(K):
        wk = plan.block(k)
        row = instance.G[k].T @ wk          # = W_k^T g_k
        B[k] = row
        a[k] = row @ instance.obs_gains[k]
    dnu = instance.sigma_eps_sq * np.sum(B * B, axis=1) + instance.sigma_varsigma_sq
    return a, B, dnu


def error_covariance_general(instance: ProblemInstance, plan) -> ErrorReport:
    """Dense error covariance of the LMMSE estimate.

    Assembles the block-diagonal measurement map and noise covariance from
    the scattered weight matrices (no link-space shortcuts, deliberately an
    independent route from :func:`error_covariance_correlated`) and inverts
    the posterior information matrix.
    """
    plan = CollaborationPlan.coerce(instance, plan)
    K, N = instance.horizon, instance.num_sensors
    DW = np.zeros((K, K * N))
    Dh = np.zeros((K * N, K))
    for k in range(K):
        Wk = plan.matrix(instance, k)
        DW[k, k * N:(k + 1) * N] = instance.channel_gains[k] @ Wk
        Dh[k * N:(k + 1) * N, k] = instance.obs_gains[k]
    Dnu = instance.sigma_eps_sq * (DW @ DW.T) + instance.sigma_varsigma_sq * np.eye(K)
    mapped = DW @ Dh
    prior_inf = _guarded_inv(instance.theta_cov, "prior covariance")
    info = prior_inf + mapped.T @ _guarded_inv(Dnu, "received noise covariance") @ mapped
    return _report(_guarded_inv(info, "posterior information"))


def error_covariance_correlated(instance: ProblemInstance, plan) -> ErrorReport:
    """Error covariance written against the collaboration vector directly.

    Uses the rank-one structure of the per-step weight outer products: the
    inner (I + c v v^T)^{-1} is expanded in closed form, leaving a single
    K x K inverse.
    """
    plan = CollaborationPlan.coerce(instance, plan)
    c = instance.sigma_eps_sq / instance.sigma_varsigma_sq
    K = instance.horizon
    shrink = np.empty(K)
    for k in range(K):
        v = instance.G[k].T @ plan.block(k)
        hk = instance.obs_gains[k]
        hv = hk @ v
        shrink[k] = hk @ hk - c * hv * hv / (1.0 + c * (v @ v))
    info = instance.C - np.diag(shrink) / instance.sigma_eps_sq
    return _report(_guarded_inv(info, "posterior information"))


def distortion_uncorrelated(instance: ProblemInstance, plan) -> float:
    """Sum of per-step quadratic ratios; exact for a diagonal prior."""
    plan = CollaborationPlan.coerce(instance, plan)
    s_th = instance.sigma_theta_sq
    s_ep = instance.sigma_eps_sq
    s_vs = instance.sigma_varsigma_sq
    total = 0.0
    for k in range(instance.horizon):
        wk = plan.block(k)
        num = s_th * s_ep * (wk @ instance.R[k] @ wk) + s_th * s_vs
        den = wk @ instance.S[k] @ wk + s_vs
        total += num / den
    return float(total)


def transmission_cost(instance: ProblemInstance, plan, m: int) -> float:
    """Total transmit energy of sensor m over the horizon."""
    plan = CollaborationPlan.coerce(instance, plan)
    if not 0 <= m < instance.num_transmitters:
        raise ValueError(f"transmitter index {m} out of range")
    total = 0.0
    for k in range(instance.horizon):
        wk = plan.block(k)
        total += wk @ instance.Q[k][m] @ wk
    return float(total)


def simulate_mse(instance: ProblemInstance, plan, trials: int,
                 rng: np.random.Generator) -> float:
    """Empirical mean squared error of the LMMSE estimate over ``trials``.

    Draws the parameter trajectory as a Gaussian with the instance prior,
    pushes it through sensing, collaboration, and the coherent channel, and
    applies the measurement-domain LMMSE gain.
    """
    mse, _ = simulate_mse_with_stderr(instance, plan, trials, rng)
    return mse


def evaluation_report(instance: ProblemInstance, plan, trials: int,
                      seed: int) -> dict:
    """JSON-ready bundle of the analytic error and a seeded simulation."""
    analytic = error_covariance_general(instance, plan)
    mse = simulate_mse(instance, plan, trials, np.random.default_rng(seed))
    doc = analytic.to_json_dict()
    doc.update(mse=mse, trials=trials, seed=seed)
    return doc


def simulate_mse_with_stderr(instance: ProblemInstance, plan, trials: int,
                             rng: np.random.Generator) -> tuple[float, float]:
    """Like :func:`simulate_mse` but also returns the Monte Carlo standard
    error of the reported mean."""
    plan = CollaborationPlan.coerce(instance, plan)
    if trials < 1:
        raise ValueError("need at least one trial")
    K, N = instance.horizon, instance.num_sensors
    a, B, dnu = _received_mix(instance, plan)

    cov_y = (a[:, None] * instance.theta_cov * a[None, :]) + np.diag(dnu)
    gain = instance.theta_cov @ (a[:, None] * _guarded_inv(cov_y, "channel covariance"))

    chol = np.linalg.cholesky(instance.theta_cov)
    theta = rng.standard_normal((trials, K)) @ chol.T
    eps = rng.standard_normal((trials, K, N)) * np.sqrt(instance.sigma_eps_sq)
    varsigma = rng.standard_normal((trials, K)) * np.sqrt(instance.sigma_varsigma_sq)

    # y[t, k] = a_k theta[t, k] + B_k . eps[t, k, :] + varsigma[t, k]
    y = theta * a[None, :] + np.einsum("kn,tkn->tk", B, eps) + varsigma
    theta_hat = y @ gain.T
    sq = np.sum((theta_hat - theta) ** 2, axis=1)
    mse = float(np.mean(sq))
    stderr = float(np.std(sq, ddof=1) / np.sqrt(trials)) if trials > 1 else float("inf")
    return mse, stderr
