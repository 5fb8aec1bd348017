import numpy as np
import pytest

from adaptnet import (GroundTruth, NodeProfile, build_combination_matrix,
                      random_connected_topology)


def random_left_stochastic(n, rng):
    """Dense positive column-stochastic matrix (self-loops everywhere)."""
    w = rng.random((n, n)) + 0.05
    return w / w.sum(axis=0, keepdims=True)


def random_symmetric_stochastic(n, rng, edge_prob=0.6):
    """Symmetric doubly-stochastic matrix on a random connected topology."""
    topo = random_connected_topology(n, edge_prob, rng)
    return build_combination_matrix(topo, "metropolis").weights


def random_spd(m, rng, lo=0.5, hi=3.0):
    q, _ = np.linalg.qr(rng.standard_normal((m, m)))
    vals = rng.uniform(lo, hi, size=m)
    return (q * vals) @ q.T


def stable_profiles(n, m, rng, homogeneous=False, mu_lo=0.05, mu_hi=0.95,
                    diagonal=False):
    """Per-node profiles with step sizes strictly inside (0, 2/lam_max)."""
    if homogeneous:
        cov = np.diag(rng.uniform(0.5, 3.0, size=m)) if diagonal else random_spd(m, rng)
        bound = 2.0 / np.linalg.eigvalsh(cov)[-1]
        mu = float(rng.uniform(mu_lo, mu_hi) * bound)
        return [NodeProfile(covariance=cov.copy(), step_size=mu,
                            noise_variance=float(rng.uniform(0.01, 0.5)))
                for _ in range(n)]
    out = []
    for _ in range(n):
        cov = np.diag(rng.uniform(0.5, 3.0, size=m)) if diagonal else random_spd(m, rng)
        bound = 2.0 / np.linalg.eigvalsh(cov)[-1]
        out.append(NodeProfile(covariance=cov, step_size=float(rng.uniform(mu_lo, mu_hi) * bound),
                               noise_variance=float(rng.uniform(0.01, 0.5))))
    return out


def unit_truth(m):
    return GroundTruth(np.full(m, 1.0 / np.sqrt(m)))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
