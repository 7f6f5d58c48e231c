"""Network model: topologies, gains, correlation priors, and derived matrices.

This module builds :class:`ProblemInstance` objects that bundle everything the
solvers and the estimator need: the collaboration topology (which sensor may
read which neighbor), per-step observation and channel gains, the temporal
covariance of the parameter process, per-sensor energy budgets, and the
quadratic-form matrices derived from them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "CollaborationTopology",
    "CorrelationSpec",
    "ProblemInstance",
    "SolverView",
    "generate_rgg",
    "build_embedding",
    "ou_covariance",
    "assemble_instance",
    "default_instance",
    "random_instance",
    "time_invariant_view",
    "instance_to_json",
    "instance_from_json",
]


class ModelError(ValueError):
    """Raised for inconsistent model construction inputs."""


# ---------------------------------------------------------------------------
# Topology
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CollaborationTopology:
    """Zero-one collaboration topology with its column-major link list.

    ``adjacency[m, n] == 1`` means sensor ``n`` shares its measurement with
    transmitting sensor ``m``.  The link list enumerates the support of the
    adjacency matrix in column-major order, fixing the bijection between the
    stacked weight vector and the weight matrix.
    """

    num_sensors: int
    num_transmitters: int
    adjacency: np.ndarray
    links: tuple[tuple[int, int], ...]
    positions: np.ndarray | None = None

    @property
    def num_links(self) -> int:
        return len(self.links)

    @staticmethod
    def from_adjacency(adjacency: np.ndarray,
                       positions: np.ndarray | None = None) -> "CollaborationTopology":
        a = np.asarray(adjacency)
        if a.ndim != 2:
            raise ModelError("adjacency must be a 2-D matrix")
        if not np.isin(a, (0, 1)).all():
            raise ModelError("adjacency entries must be 0 or 1")
        m, n = a.shape
        if m > n:
            raise ModelError(f"more transmitters ({m}) than sensors ({n})")
        # Column-major enumeration of the support: n outer, m inner.
        links = tuple((int(mm), int(nn))
                      for nn in range(n) for mm in range(m) if a[mm, nn])
        if not links:
            raise ModelError("topology has no links")
        return CollaborationTopology(
            num_sensors=n, num_transmitters=m,
            adjacency=a.astype(float), links=links, positions=positions)

    def scatter(self, w_k: np.ndarray) -> np.ndarray:
        """Scatter a length-L weight vector into the M x N weight matrix."""
        w_k = np.asarray(w_k, dtype=float)
        if w_k.shape != (self.num_links,):
            raise ModelError(f"expected {self.num_links} weights, got {w_k.shape}")
        out = np.zeros((self.num_transmitters, self.num_sensors))
        for l, (m, n) in enumerate(self.links):
            out[m, n] = w_k[l]
        return out


def generate_rgg(n: int, d: float, rng: np.random.Generator) -> CollaborationTopology:
    """Random geometric graph on the unit square with self-links.

    ``n`` sensors are placed uniformly on [0, 1]^2; sensors within distance
    ``d`` of each other are linked (ties at exactly ``d`` included), and every
    sensor is linked to itself.  All ``n`` sensors transmit (M = n).
    """
    if n < 1:
        raise ModelError("need at least one sensor")
    if not 0 < d <= np.sqrt(2):
        raise ModelError("radius must lie in (0, sqrt(2)]")
    pos = rng.uniform(0.0, 1.0, size=(n, 2))
    dist = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=-1)
    adjacency = (dist <= d).astype(float)
    np.fill_diagonal(adjacency, 1.0)
    return CollaborationTopology.from_adjacency(adjacency, positions=pos)


def build_embedding(b: np.ndarray, topology: CollaborationTopology) -> np.ndarray:
    """Lift a per-transmitter coefficient vector onto the link space.

    Returns the L x N matrix B with ``B[l, n] = b[m_l]`` when ``n == n_l`` and
    zero otherwise, so that ``b @ W == w @ B`` for every weight matrix W
    supported on the topology (w = column-major stacked nonzeros of W).
    """
    b = np.asarray(b, dtype=float)
    if b.shape != (topology.num_transmitters,):
        raise ModelError(
            f"coefficient vector has length {b.shape}, expected "
            f"({topology.num_transmitters},) to match the adjacency rows")
    out = np.zeros((topology.num_links, topology.num_sensors))
    for l, (m, n) in enumerate(topology.links):
        out[l, n] = b[m]
    return out


# ---------------------------------------------------------------------------
# Correlation prior
# ---------------------------------------------------------------------------

UNCORRELATED = "uncorrelated"
ORNSTEIN_UHLENBECK = "ornstein_uhlenbeck"


@dataclass(frozen=True)
class CorrelationSpec:
    """Temporal prior of the parameter process.

    ``uncorrelated`` yields a scaled identity covariance; ``ornstein_uhlenbeck``
    yields exponentially decaying correlation with decay rate ``rho_corr``
    (larger ``rho_corr`` means weaker correlation).
    """

    kind: str
    rho_corr: float | None = None

    def __post_init__(self):
        if self.kind not in (UNCORRELATED, ORNSTEIN_UHLENBECK):
            raise ModelError(f"unknown correlation kind {self.kind!r}")
        if self.kind == ORNSTEIN_UHLENBECK:
            if self.rho_corr is None or self.rho_corr <= 0:
                raise ModelError("ornstein_uhlenbeck needs rho_corr > 0")

    def covariance(self, horizon: int, sigma_theta_sq: float) -> np.ndarray:
        if self.kind == UNCORRELATED:
            return sigma_theta_sq * np.eye(horizon)
        return ou_covariance(horizon, self.rho_corr, sigma_theta_sq)


def ou_covariance(horizon: int, rho_corr: float, sigma_theta_sq: float) -> np.ndarray:
    """Ornstein-Uhlenbeck covariance: sigma^2 * exp(-|k1 - k2| * rho_corr)."""
    if horizon < 1:
        raise ModelError("horizon must be >= 1")
    if rho_corr <= 0 or sigma_theta_sq <= 0:
        raise ModelError("rho_corr and sigma_theta_sq must be positive")
    idx = np.arange(horizon)
    lags = np.abs(idx[:, None] - idx[None, :])
    return sigma_theta_sq * np.exp(-lags * rho_corr)


# ---------------------------------------------------------------------------
# Problem instance
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProblemInstance:
    """Immutable bundle of network data plus cached derived matrices.

    Derived quantities (all per time step k unless noted):

    * ``G[k]``   L x N embedding of the channel gains g_k,
    * ``S[k]``   L x L second-moment matrix of the received collaborative
      signal, ``G_k (sigma_theta^2 h_k h_k^T + sigma_eps^2 I) G_k^T``,
    * ``R[k]``   L x L Gram matrix ``G_k G_k^T``,
    * ``Q[k][m]`` L x L transmit-energy quadratic form of sensor m,
    * ``C``      K x K prior-plus-observation information matrix.
    """

    topology: CollaborationTopology
    horizon: int
    obs_gains: np.ndarray       # K x N
    channel_gains: np.ndarray   # K x M
    sigma_theta_sq: float
    sigma_eps_sq: float
    sigma_varsigma_sq: float
    correlation: CorrelationSpec
    theta_cov: np.ndarray       # K x K
    budgets: np.ndarray         # M
    seed: int | None = None
    radius: float | None = None
    # caches (populated by assemble_instance)
    G: tuple[np.ndarray, ...] = field(repr=False, default=())
    S: tuple[np.ndarray, ...] = field(repr=False, default=())
    R: tuple[np.ndarray, ...] = field(repr=False, default=())
    Q: tuple[tuple[np.ndarray, ...], ...] = field(repr=False, default=())
    C: np.ndarray = field(repr=False, default=None)

    @property
    def num_sensors(self) -> int:
        return self.topology.num_sensors

    @property
    def num_transmitters(self) -> int:
        return self.topology.num_transmitters

    @property
    def num_links(self) -> int:
        return self.topology.num_links

    @property
    def dim(self) -> int:
        """Length of the stacked collaboration vector."""
        return self.horizon * self.num_links

    def energy_matrix(self, m: int) -> np.ndarray:
        """Block-diagonal K*L x K*L energy quadratic form of transmitter m."""
        L, K = self.num_links, self.horizon
        out = np.zeros((K * L, K * L))
        for k in range(K):
            out[k * L:(k + 1) * L, k * L:(k + 1) * L] = self.Q[k][m]
        return out


def assemble_instance(topology: CollaborationTopology,
                      horizon: int,
                      obs_gains: np.ndarray,
                      channel_gains: np.ndarray,
                      sigma_theta_sq: float,
                      sigma_eps_sq: float,
                      sigma_varsigma_sq: float,
                      correlation: CorrelationSpec,
                      budgets: np.ndarray,
                      seed: int | None = None,
                      radius: float | None = None) -> ProblemInstance:
    """Validate inputs and populate every derived matrix."""
    K = int(horizon)
    if K < 1:
        raise ModelError("horizon must be >= 1")
    if sigma_eps_sq <= 0 or sigma_varsigma_sq <= 0:
        raise ModelError("noise variances must be positive")
    if sigma_theta_sq < 0:
        raise ModelError("sigma_theta_sq must be nonnegative")
    N, M = topology.num_sensors, topology.num_transmitters
    h = np.asarray(obs_gains, dtype=float)
    g = np.asarray(channel_gains, dtype=float)
    if h.shape != (K, N):
        raise ModelError(f"obs_gains shape {h.shape}, expected {(K, N)}")
    if g.shape != (K, M):
        raise ModelError(f"channel_gains shape {g.shape}, expected {(K, M)}")
    budgets = np.asarray(budgets, dtype=float)
    if budgets.shape != (M,):
        raise ModelError(f"budget vector length {budgets.shape}, expected ({M},)")
    if (budgets < 0).any():
        raise ModelError("budgets must be nonnegative")

    theta_cov = correlation.covariance(K, sigma_theta_sq)

    G, S, R, Q = [], [], [], []
    basis = np.eye(M)
    for k in range(K):
        Gk = build_embedding(g[k], topology)
        noise_core = sigma_theta_sq * np.outer(h[k], h[k]) + sigma_eps_sq * np.eye(N)
        Sk = Gk @ noise_core @ Gk.T
        Rk = Gk @ Gk.T
        Qk = []
        for m in range(M):
            Em = build_embedding(basis[m], topology)
            Qk.append(_symmetrize(Em @ noise_core @ Em.T))
        G.append(Gk)
        S.append(_symmetrize(Sk))
        R.append(_symmetrize(Rk))
        Q.append(tuple(Qk))

    C = np.linalg.inv(theta_cov) + np.diag(np.sum(h * h, axis=1)) / sigma_eps_sq

    return ProblemInstance(
        topology=topology, horizon=K, obs_gains=h, channel_gains=g,
        sigma_theta_sq=float(sigma_theta_sq), sigma_eps_sq=float(sigma_eps_sq),
        sigma_varsigma_sq=float(sigma_varsigma_sq), correlation=correlation,
        theta_cov=theta_cov, budgets=budgets, seed=seed, radius=radius,
        G=tuple(G), S=tuple(S), R=tuple(R), Q=tuple(Q), C=_symmetrize(C))


def _symmetrize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


def random_instance(seed: int,
                    num_sensors: int = 10,
                    horizon: int = 3,
                    radius: float = 0.3,
                    sigma_theta_sq: float = 1.0,
                    sigma_eps_sq: float = 1.0,
                    sigma_varsigma_sq: float = 1.0,
                    correlation: CorrelationSpec | None = None,
                    total_energy: float = 1.0,
                    topology: CollaborationTopology | None = None) -> ProblemInstance:
    """Draw a random network: RGG topology plus U(0.1, 1) gains per step."""
    rng = np.random.default_rng(seed)
    if topology is None:
        topology = generate_rgg(num_sensors, radius, rng)
    if correlation is None:
        correlation = CorrelationSpec(ORNSTEIN_UHLENBECK, rho_corr=0.5)
    N, M = topology.num_sensors, topology.num_transmitters
    h = rng.uniform(0.1, 1.0, size=(horizon, N))
    g = rng.uniform(0.1, 1.0, size=(horizon, M))
    budgets = np.full(M, total_energy / M)
    return assemble_instance(topology, horizon, h, g,
                             sigma_theta_sq, sigma_eps_sq, sigma_varsigma_sq,
                             correlation, budgets, seed=seed, radius=radius)


def default_instance(seed: int = 0, **overrides) -> ProblemInstance:
    """Reference configuration: RGG(10, 0.3), K = 3, unit variances,
    OU correlation with decay 0.5, total energy 1 split evenly."""
    params = dict(num_sensors=10, horizon=3, radius=0.3,
                  sigma_theta_sq=1.0, sigma_eps_sq=1.0, sigma_varsigma_sq=1.0,
                  correlation=CorrelationSpec(ORNSTEIN_UHLENBECK, rho_corr=0.5),
                  total_energy=1.0)
    params.update(overrides)
    return random_instance(seed, **params)


# ---------------------------------------------------------------------------
# Solver-facing views
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SolverView:
    """What the optimizers actually consume.

    A view fixes the decision-vector layout.  The standard view stacks one
    length-L block per time step (dim = K*L); the time-invariant view shares a
    single length-L block across all steps (dim = L) while keeping the K
    per-step quadratic forms.  ``blocks[k]`` slices the per-step weights out
    of the decision vector, and ``lift_groups`` lists the distinct lifted
    blocks (one per step, or a single shared one) together with the time
    steps whose channel embeddings touch them.
    """

    instance: ProblemInstance
    dim: int
    blocks: tuple[slice, ...]                 # per k
    lift_groups: tuple[tuple[slice, tuple[int, ...]], ...]
    energy: tuple[np.ndarray, ...]            # per m, dim x dim
    time_invariant: bool = False

    @property
    def horizon(self) -> int:
        return self.instance.horizon

    @property
    def block_size(self) -> int:
        return self.instance.num_links

    def expand_plan(self, w: np.ndarray) -> np.ndarray:
        """Stacked K*L plan equivalent to decision vector ``w``."""
        w = np.asarray(w, dtype=float)
        if w.shape != (self.dim,):
            raise ModelError(f"plan length {w.shape}, expected ({self.dim},)")
        if not self.time_invariant:
            return w.copy()
        return np.tile(w, self.horizon)

    def block(self, w: np.ndarray, k: int) -> np.ndarray:
        return np.asarray(w)[self.blocks[k]]


def standard_view(instance: ProblemInstance) -> SolverView:
    K, L = instance.horizon, instance.num_links
    blocks = tuple(slice(k * L, (k + 1) * L) for k in range(K))
    groups = tuple((blocks[k], (k,)) for k in range(K))
    energy = tuple(instance.energy_matrix(m)
                   for m in range(instance.num_transmitters))
    return SolverView(instance=instance, dim=K * L, blocks=blocks,
                      lift_groups=groups, energy=energy)


def time_invariant_view(instance: ProblemInstance) -> SolverView:
    """Shared-weights reduction: one length-L block reused at every step.

    Energy forms collapse to the per-transmitter sums of the per-step forms;
    for K = 1 the view coincides with the standard one.
    """
    K, L = instance.horizon, instance.num_links
    shared = slice(0, L)
    blocks = tuple(shared for _ in range(K))
    groups = ((shared, tuple(range(K))),)
    energy = tuple(_symmetrize(sum(instance.Q[k][m] for k in range(K)))
                   for m in range(instance.num_transmitters))
    return SolverView(instance=instance, dim=L, blocks=blocks,
                      lift_groups=groups, energy=energy,
                      time_invariant=K > 1)


def as_view(problem: ProblemInstance | SolverView) -> SolverView:
    if isinstance(problem, SolverView):
        return problem
    return standard_view(problem)


# ---------------------------------------------------------------------------
# JSON serialization
# ---------------------------------------------------------------------------

def instance_to_json(instance: ProblemInstance, explicit: bool = True) -> str:
    """Serialize an instance; with ``explicit`` the gains and adjacency are
    embedded so the round trip is bit-exact regardless of RNG history."""
    doc: dict = {
        "seed": instance.seed,
        "N": instance.num_sensors,
        "M": instance.num_transmitters,
        "K": instance.horizon,
        "d": instance.radius,
        "sigma_theta_sq": instance.sigma_theta_sq,
        "sigma_eps_sq": instance.sigma_eps_sq,
        "sigma_varsigma_sq": instance.sigma_varsigma_sq,
        "rho_corr": (instance.correlation.rho_corr
                     if instance.correlation.kind == ORNSTEIN_UHLENBECK
                     else UNCORRELATED),
        "E_total": float(np.sum(instance.budgets)),
    }
    if explicit:
        doc["obs_gains"] = instance.obs_gains.tolist()
        doc["channel_gains"] = instance.channel_gains.tolist()
        doc["adjacency"] = instance.topology.adjacency.tolist()
        if instance.topology.positions is not None:
            doc["positions"] = instance.topology.positions.tolist()
    return json.dumps(doc, indent=2)


def instance_from_json(text: str) -> ProblemInstance:
    doc = json.loads(text)
    rho = doc.get("rho_corr", UNCORRELATED)
    if rho == UNCORRELATED:
        correlation = CorrelationSpec(UNCORRELATED)
    else:
        correlation = CorrelationSpec(ORNSTEIN_UHLENBECK, rho_corr=float(rho))
    M = int(doc["M"])
    e_total = float(doc.get("E_total", 1.0))

    if "adjacency" in doc:
        positions = (np.asarray(doc["positions"], dtype=float)
                     if "positions" in doc else None)
        topology = CollaborationTopology.from_adjacency(
            np.asarray(doc["adjacency"], dtype=float), positions=positions)
        budgets = np.full(M, e_total / M)
        return assemble_instance(
            topology, int(doc["K"]),
            np.asarray(doc["obs_gains"], dtype=float),
            np.asarray(doc["channel_gains"], dtype=float),
            float(doc["sigma_theta_sq"]), float(doc["sigma_eps_sq"]),
            float(doc["sigma_varsigma_sq"]), correlation, budgets,
            seed=doc.get("seed"), radius=doc.get("d"))

    if doc.get("seed") is None:
        raise ModelError("document has neither explicit matrices nor a seed")
    return random_instance(
        int(doc["seed"]), num_sensors=int(doc["N"]), horizon=int(doc["K"]),
        radius=float(doc["d"]), sigma_theta_sq=float(doc["sigma_theta_sq"]),
        sigma_eps_sq=float(doc["sigma_eps_sq"]),
        sigma_varsigma_sq=float(doc["sigma_varsigma_sq"]),
        correlation=correlation, total_energy=e_total)
