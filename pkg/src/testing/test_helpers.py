"""
Test helpers and exact oracles for the profile-LMM test-suite.
Brute-force metric and PAM references, dense Gaussian conditionals,
a recursive B-spline evaluator and synthetic chains.
"""
import itertools
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import gammaln

from ..core.design import DesignViews
from ..models.parameter_state import ParameterState
from ..sampler.chain_store import ChainMeta, ChainStore


def brute_force_ari(a: Sequence[int], b: Sequence[int]) -> float:
    """Adjusted Rand index by enumerating every pair of observations."""
    a, b = list(a), list(b)
    n = len(a)
    both = same_a = same_b = 0
    for i, j in itertools.combinations(range(n), 2):
        in_a = a[i] == a[j]
        in_b = b[i] == b[j]
        both += in_a and in_b
        same_a += in_a
        same_b += in_b
    pairs = n * (n - 1) / 2
    expected = same_a * same_b / pairs if pairs else 0.0
    maximum = (same_a + same_b) / 2
    if maximum == expected:
        return 1.0
    return (both - expected) / (maximum - expected)


def brute_force_purity(pred: Sequence[int], truth: Sequence[int]) -> float:
    """Majority-class count summed over predicted clusters, divided by n."""
    total = 0
    for cluster in set(pred):
        members = [t for p, t in zip(pred, truth) if p == cluster]
        total += max(members.count(label) for label in set(members))
    return total / len(pred)


def brute_force_pam_objective(D: np.ndarray, k: int) -> Tuple[float, Tuple[int, ...]]:
    """Smallest total dissimilarity to the nearest medoid over all medoid subsets of size k."""
    best = (np.inf, ())
    for medoids in itertools.combinations(range(D.shape[0]), k):
        cost = float(D[:, medoids].min(axis=1).sum())
        if cost < best[0] - 1e-12:
            best = (cost, medoids)
    return best


def cox_de_boor(t: float, knots: np.ndarray, degree: int, index: int) -> float:
    """Value of B-spline ``index`` of ``degree`` at ``t`` by direct recursion (half-open spans)."""
    if degree == 0:
        return 1.0 if knots[index] <= t < knots[index + 1] else 0.0
    value = 0.0
    left = knots[index + degree] - knots[index]
    if left > 0:
        value += (t - knots[index]) / left * cox_de_boor(t, knots, degree - 1, index)
    right = knots[index + degree + 1] - knots[index + 1]
    if right > 0:
        value += (knots[index + degree + 1] - t) / right * cox_de_boor(t, knots, degree - 1, index + 1)
    return value


def recursive_basis(times: Sequence[float], knots: np.ndarray, degree: int, n_basis: int) -> np.ndarray:
    return np.array([[cox_de_boor(t, knots, degree, i) for i in range(n_basis)] for t in times])


def dense_beta_gamma_oracle(state: ParameterState, views: DesignViews, lam: float):
    """
    beta | rest with gamma integrated out, built from the explicit n_c x n_c
    marginal covariances V_c = sigma2 I + X^Int_c W^Int X^Int_c^T.

    Returns:
        (beta_mean, beta_cov, gamma_moments) where gamma_moments(beta) gives
        per-cluster (mean, cov) of gamma_c | beta
    """
    sigma2, wint = state.sigma2, state.wint
    resid = views.y - np.einsum("ij,ij->i", views.x_re, state.eta[views.individual])
    p = views.p_fe
    precision = lam * np.eye(p) / sigma2
    linear = np.zeros(p)
    blocks = []
    for c in range(state.C):
        rows = np.flatnonzero(state.alloc == c)
        F, A, r = views.x_fe[rows], views.x_int[rows], resid[rows]
        V = sigma2 * np.eye(rows.size) + A @ wint @ A.T
        V_inv = np.linalg.inv(V) if rows.size else np.zeros((0, 0))
        precision += F.T @ V_inv @ F
        linear += F.T @ V_inv @ r
        blocks.append((F, A, r, V_inv))
    beta_cov = np.linalg.inv(precision)
    beta_mean = beta_cov @ linear

    def gamma_moments(beta: np.ndarray) -> List[Tuple[np.ndarray, np.ndarray]]:
        out = []
        for F, A, r, V_inv in blocks:
            if r.size == 0:
                out.append((np.zeros(wint.shape[0]), wint.copy()))
                continue
            mean = wint @ A.T @ V_inv @ (r - F @ beta)
            cov = wint - wint @ A.T @ V_inv @ A @ wint
            out.append((mean, cov))
        return out

    return beta_mean, beta_cov, gamma_moments


def dense_random_effect_oracle(state: ParameterState, views: DesignViews, individual: int):
    """eta_j | rest: precision W^Re^-1 + X_j^T X_j / sigma2 and the matching mean."""
    rows = np.flatnonzero(views.individual == individual)
    X = views.x_re[rows]
    r = (views.y[rows] - views.x_fe[rows] @ state.beta
         - np.einsum("ij,ij->i", views.x_int[rows], state.gamma[state.alloc[rows]]))
    precision = np.linalg.inv(state.wre) + X.T @ X / state.sigma2
    cov = np.linalg.inv(precision)
    return cov @ X.T @ r / state.sigma2, cov


def niw_grid_moments(observations: Sequence[float], lambda0: float, nu0: float, phi0: float,
                     mu_grid: Optional[np.ndarray] = None, var_grid: Optional[np.ndarray] = None):
    """
    Posterior means of (mu, sigma2) for a univariate NIW(0, lambda0, nu0, phi0) prior,
    by brute-force integration of prior times likelihood on a grid.
    """
    x = np.asarray(observations, dtype=float)
    n = x.size
    mean = float(x.mean()) if n else 0.0
    scatter = float(((x - mean) ** 2).sum())
    mu_grid = np.linspace(-6.0, 6.0, 1201) if mu_grid is None else mu_grid
    var_grid = np.linspace(1e-3, 30.0, 3000) if var_grid is None else var_grid
    mu, var = np.meshgrid(mu_grid, var_grid, indexing="ij")
    # inverse-gamma(nu0/2, phi0/2) on sigma2, N(0, sigma2/lambda0) on mu
    log_prior = ((nu0 / 2) * np.log(phi0 / 2) - gammaln(nu0 / 2) - (nu0 / 2 + 1) * np.log(var) - phi0 / (2 * var)
                 - 0.5 * np.log(2 * np.pi * var / lambda0) - lambda0 * mu ** 2 / (2 * var))
    log_lik = -0.5 * n * np.log(2 * np.pi * var) - (scatter + n * (mu - mean) ** 2) / (2 * var)
    log_post = log_prior + log_lik
    weights = np.exp(log_post - log_post.max())
    weights /= weights.sum()
    return float((weights * mu).sum()), float((weights * var).sum())


def synthetic_chain(alloc: np.ndarray, gamma: Optional[np.ndarray] = None, int_cols: Sequence[str] = ("intercept",),
                    fe_cols: Sequence[str] = ("intercept",), beta: Optional[np.ndarray] = None,
                    q: int = 2, C: Optional[int] = None) -> ChainStore:
    """
    In-memory chain over given allocation draws (H, n); other blocks are
    zeros or identities of matching shapes unless supplied.
    """
    alloc = np.asarray(alloc, dtype=np.int64)
    H, n = alloc.shape
    C = int(alloc.max()) + 1 if C is None else C
    p_int, p_fe = len(int_cols), len(fe_cols)
    gamma = np.zeros((H, C, p_int)) if gamma is None else np.asarray(gamma, dtype=float)
    beta = np.zeros((H, p_fe)) if beta is None else np.asarray(beta, dtype=float)
    meta = ChainMeta(seed=0, chain_id=0, spec_hash="synthetic", burn_in=0, thin=1, C=C, n=n, m=n,
                     fe_cols=list(fe_cols), re_cols=["intercept"], int_cols=list(int_cols),
                     u_cont_names=[f"u{k + 1}" for k in range(q)], u_cat_names=[], n_categories=[])
    arrays = {
        "alloc": alloc, "gamma": gamma, "beta": beta, "sigma2": np.ones(H),
        "eta": np.zeros((H, n, 1)), "wre": np.ones((H, 1, 1)), "wint": np.repeat(np.eye(p_int)[None], H, axis=0),
        "theta_mu": np.zeros((H, C, q)), "theta_sigma": np.repeat(np.eye(q)[None, None], H * C, axis=0).reshape(
            H, C, q, q), "theta_phi": np.zeros((H, C, 0)), "sticks": np.full((H, C), 0.5),
    }
    return ChainStore.from_arrays(meta, arrays)


def relabel_chain(chain: ChainStore, permutations: np.ndarray) -> ChainStore:
    """
    Apply per-draw label permutations: new label = permutations[h][old label];
    cluster-indexed parameters move with their labels.
    """
    arrays = {name: np.array(chain.array(name)) for name in
              ("alloc", "gamma", "beta", "sigma2", "eta", "wre", "wint", "theta_mu", "theta_sigma",
               "theta_phi", "sticks", "trace_zeta", "trace_nclus", "trace_sigma2")}
    for h, perm in enumerate(np.asarray(permutations)):
        inverse = np.argsort(perm)
        arrays["alloc"][h] = perm[arrays["alloc"][h]]
        for name in ("gamma", "theta_mu", "theta_sigma", "theta_phi", "sticks"):
            arrays[name][h] = arrays[name][h][inverse]
    meta = ChainMeta.from_dict(chain.meta.as_dict())
    return ChainStore.from_arrays(meta, arrays)
