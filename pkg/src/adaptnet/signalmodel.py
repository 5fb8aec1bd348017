"""Streaming data generation for the linear regression model.

Each node k observes d_k(i) = u_{k,i} w0 + v_k(i), with zero-mean Gaussian
regressors of covariance R_{u,k} and zero-mean Gaussian noise of variance
sigma_{v,k}^2, white over time and independent across nodes.  Real-valued
data throughout.

Streams are counter-based: the draw for (trial, time, node) is a pure
function of the master seed and those three indices, so trials can run in
any order (or concurrently) and reproduce bit-identical data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .network import NetworkTopology, random_connected_topology


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """The unknown M-vector the network estimates."""

    vector: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vector, dtype=float).reshape(-1)
        if v.size == 0 or not np.all(np.isfinite(v)):
            raise ConfigError("ground truth must be a nonempty finite vector")
        v.flags.writeable = False
        object.__setattr__(self, "vector", v)

    @property
    def dim(self) -> int:
        return self.vector.size


@dataclass(frozen=True, eq=False)
class NodeProfile:
    """Per-node statistics: step-size, regressor covariance, noise variance.

    noise_variance = 0 is accepted (useful for noiseless tests); operations
    that need strictly positive noise check it themselves.
    """

    step_size: float
    covariance: np.ndarray
    noise_variance: float

    def __post_init__(self):
        cov = np.array(self.covariance, dtype=float)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
            raise ConfigError(f"covariance must be square, got shape {cov.shape}")
        if not np.all(np.isfinite(cov)) or not np.allclose(cov, cov.T, atol=1e-12):
            raise ConfigError("covariance must be finite and symmetric")
        if not self.step_size > 0:
            raise ConfigError(f"step size must be positive, got {self.step_size}")
        if self.noise_variance < 0:
            raise ConfigError(f"noise variance must be nonnegative, got {self.noise_variance}")
        cov.flags.writeable = False
        object.__setattr__(self, "covariance", cov)

    @property
    def dim(self) -> int:
        return self.covariance.shape[0]


@dataclass(frozen=True, eq=False)
class DataSnapshot:
    """One synchronous observation: regressor rows u, noises v, measurements d.

    d = u @ w0 + v holds exactly by construction; v is retained for test
    introspection.
    """

    u: np.ndarray
    v: np.ndarray
    d: np.ndarray


def covariance_sqrt(cov: np.ndarray, node: int | None = None) -> np.ndarray:
    """Symmetric square root via eigendecomposition; rejects non-PD input."""
    vals, vecs = np.linalg.eigh(np.asarray(cov, dtype=float))
    if vals.min() <= 0:
        where = f" at node {node}" if node is not None else ""
        raise ConfigError(f"covariance{where} is not positive definite "
                          f"(min eigenvalue {vals.min():.3g})")
    return (vecs * np.sqrt(vals)) @ vecs.T


def _draw_node(rng, sqrt_cov, noise_std):
    z = rng.standard_normal(sqrt_cov.shape[0])
    u = sqrt_cov @ z
    v = noise_std * rng.standard_normal()
    return u, v


def generate_snapshot(profiles, truth: GroundTruth, rng) -> DataSnapshot:
    """Draw one snapshot.  ``rng`` is a Generator (nodes drawn in index order)
    or a sequence of per-node Generators."""
    n = len(profiles)
    if n == 0:
        raise ConfigError("need at least one node profile")
    m = truth.dim
    streams = rng if isinstance(rng, (list, tuple)) else [rng] * n
    u = np.empty((n, m))
    v = np.empty(n)
    for k, prof in enumerate(profiles):
        if prof.dim != m:
            raise ConfigError(f"node {k}: covariance dim {prof.dim} != ground truth dim {m}")
        sq = covariance_sqrt(prof.covariance, node=k)
        u[k], v[k] = _draw_node(streams[k], sq, np.sqrt(prof.noise_variance))
    return DataSnapshot(u=u, v=v, d=u @ truth.vector + v)


class SnapshotSource:
    """Reproducible snapshot stream over (trial, time) indices.

    Each (trial, time, node) triple addresses its own Philox counter block:
    counter word 0 carries node << 32, word 1 the time index, word 2 the
    trial index.  A node consumes far fewer than 2**32 blocks per snapshot,
    so streams never overlap.
    """

    def __init__(self, profiles, truth: GroundTruth, master_seed: int):
        if len(profiles) == 0:
            raise ConfigError("need at least one node profile")
        self.profiles = list(profiles)
        self.truth = truth
        self.master_seed = int(master_seed)
        self._key = np.random.SeedSequence(self.master_seed).generate_state(2, np.uint64)
        self._sqrts = [covariance_sqrt(p.covariance, node=k)
                       for k, p in enumerate(self.profiles)]
        self._noise_std = np.array([np.sqrt(p.noise_variance) for p in self.profiles])
        for k, p in enumerate(self.profiles):
            if p.dim != truth.dim:
                raise ConfigError(f"node {k}: covariance dim {p.dim} != ground truth dim {truth.dim}")

    def node_stream(self, trial: int, time: int, node: int) -> np.random.Generator:
        counter = np.array([np.uint64(node) << np.uint64(32),
                            np.uint64(time), np.uint64(trial), np.uint64(0)],
                           dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=self._key, counter=counter))

    def snapshot(self, trial: int, time: int) -> DataSnapshot:
        n = len(self.profiles)
        m = self.truth.dim
        u = np.empty((n, m))
        v = np.empty(n)
        for k in range(n):
            u[k], v[k] = _draw_node(self.node_stream(trial, time, k),
                                    self._sqrts[k], self._noise_std[k])
        return DataSnapshot(u=u, v=v, d=u @ self.truth.vector + v)


def benchmark_profile(n_nodes: int = 20, dim: int = 10, seed: int = 0,
                      step_size: float = 0.02, edge_prob: float = 0.3
                      ) -> tuple[NetworkTopology, list[NodeProfile], GroundTruth]:
    """Randomized heterogeneous benchmark scenario.

    Connected random topology; per-node diagonal covariances with entries
    uniform in [2, 4]; noise powers uniform in [-30, -10] dB; ground truth
    with every entry 1/sqrt(dim); common step-size.
    """
    rng = np.random.default_rng(seed)
    topology = random_connected_topology(n_nodes, edge_prob, rng)
    profiles = []
    for _ in range(n_nodes):
        diag = rng.uniform(2.0, 4.0, size=dim)
        noise_db = rng.uniform(-30.0, -10.0)
        profiles.append(NodeProfile(step_size=step_size,
                                    covariance=np.diag(diag),
                                    noise_variance=10.0 ** (noise_db / 10.0)))
    truth = GroundTruth(np.full(dim, 1.0 / np.sqrt(dim)))
    return topology, profiles, truth
