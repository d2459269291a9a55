"""Covariance matrix adaptation evolution strategy used at both levels.

A small functional (mu/mu_w, lambda)-CMA-ES: weighted recombination,
cumulative step-size adaptation and rank-one + rank-mu covariance updates
with the usual default constants. The state is a plain dataclass so that
the scheduler can read and overwrite the mean and covariance of a task
(marginal sharing, cooperation mixing) between generations.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

REPAIR_FLOOR = 1e-14
MAX_RESAMPLE = 10


def default_popsize(dim: int) -> int:
    return 4 + int(3 * np.log(dim))


@dataclass
class Candidate:
    """One evaluated individual handed back to :func:`update`.

    ``injected`` marks a vector that was not drawn from the current
    distribution (e.g. a navigational solution); its step is clipped.
    """

    vector: np.ndarray
    objective: float
    cv: float = 0.0
    injected: bool = False


@dataclass
class EsState:
    dim: int
    mean: np.ndarray
    sigma: float
    cov: np.ndarray
    path_sigma: np.ndarray
    path_c: np.ndarray
    recomb_weights: np.ndarray
    mu_eff: float
    popsize: int
    c_sigma: float
    d_sigma: float
    c_c: float
    c_1: float
    c_mu: float
    chi_n: float
    generation: int = 0
    mean_history: deque = field(default_factory=lambda: deque(maxlen=3))
    eig_basis: np.ndarray | None = None
    eig_sqrt: np.ndarray | None = None

    @property
    def mu(self) -> int:
        return len(self.recomb_weights)


def _strategy_constants(dim: int, popsize: int) -> dict:
    mu = max(popsize // 2, 1)
    raw = np.log((popsize + 1) / 2) - np.log(np.arange(1, mu + 1))
    weights = raw / raw.sum()
    mu_eff = 1.0 / np.sum(weights**2)
    c_sigma = (mu_eff + 2) / (dim + mu_eff + 5)
    d_sigma = 1 + 2 * max(0.0, np.sqrt((mu_eff - 1) / (dim + 1)) - 1) + c_sigma
    c_c = (4 + mu_eff / dim) / (dim + 4 + 2 * mu_eff / dim)
    c_1 = 2 / ((dim + 1.3) ** 2 + mu_eff)
    c_mu = min(1 - c_1, 2 * (mu_eff - 2 + 1 / mu_eff) / ((dim + 2) ** 2 + mu_eff))
    chi_n = np.sqrt(dim) * (1 - 1 / (4 * dim) + 1 / (21 * dim**2))
    return dict(
        recomb_weights=weights,
        mu_eff=float(mu_eff),
        c_sigma=float(c_sigma),
        d_sigma=float(d_sigma),
        c_c=float(c_c),
        c_1=float(c_1),
        c_mu=float(c_mu),
        chi_n=float(chi_n),
    )


def _repair_eigh(cov: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    cov = np.asarray(cov, dtype=float)
    if not np.all(np.isfinite(cov)):
        raise ValueError("covariance contains non-finite entries")
    cov = (cov + cov.T) / 2
    trace = float(np.trace(cov))
    if trace <= 0:
        raise ValueError("covariance is not positive definite")
    vals, vecs = np.linalg.eigh(cov)
    floor = REPAIR_FLOOR * trace
    if vals.min() < floor:
        vals = np.maximum(vals, floor)
        cov = (vecs * vals) @ vecs.T
        cov = (cov + cov.T) / 2
    return cov, vals, vecs


def repair_cov(cov: np.ndarray) -> np.ndarray:
    """Symmetrize and clamp eigenvalues at ``1e-14 * trace``.

    Raises ValueError when the matrix is not finite or has a non-positive
    trace, i.e. when no repair can make it SPD.
    """
    return _repair_eigh(cov)[0]


def _refresh(state: EsState) -> None:
    state.cov, vals, vecs = _repair_eigh(state.cov)
    state.eig_basis = vecs
    state.eig_sqrt = np.sqrt(vals)


def init_es(
    dim: int,
    mean0,
    sigma0: float,
    cov0=None,
    popsize: int | None = None,
) -> EsState:
    mean0 = np.array(mean0, dtype=float).reshape(-1)
    if dim < 1:
        raise ValueError("dim must be positive")
    if mean0.shape != (dim,):
        raise ValueError(f"mean has length {mean0.size}, expected {dim}")
    if not sigma0 > 0:
        raise ValueError("sigma0 must be positive")
    cov0 = np.eye(dim) if cov0 is None else np.array(cov0, dtype=float)
    if cov0.shape != (dim, dim):
        raise ValueError(f"covariance has shape {cov0.shape}, expected {(dim, dim)}")
    popsize = default_popsize(dim) if popsize is None else int(popsize)
    if popsize < 2:
        raise ValueError("popsize must be at least 2")
    state = EsState(
        dim=dim,
        mean=mean0,
        sigma=float(sigma0),
        cov=cov0,
        path_sigma=np.zeros(dim),
        path_c=np.zeros(dim),
        popsize=popsize,
        **_strategy_constants(dim, popsize),
    )
    _refresh(state)
    state.mean_history.append(mean0.copy())
    return state


def set_distribution(state: EsState, mean=None, cov=None) -> EsState:
    """Overwrite mean and/or covariance in place (sigma and paths untouched)."""
    if mean is not None:
        mean = np.array(mean, dtype=float).reshape(-1)
        if mean.shape != (state.dim,):
            raise ValueError("dimension mismatch")
        state.mean = mean
    if cov is not None:
        cov = np.array(cov, dtype=float)
        if cov.shape != (state.dim, state.dim):
            raise ValueError("dimension mismatch")
        state.cov = cov
        _refresh(state)
    return state


def _clip_to(x: np.ndarray, bounds: np.ndarray | None) -> np.ndarray:
    if bounds is None:
        return x
    return np.clip(x, bounds[:, 0], bounds[:, 1])


def sample(state: EsState, count: int, rng: np.random.Generator, bounds=None) -> list[np.ndarray]:
    """Draw ``count`` vectors from N(mean, sigma^2 cov).

    With ``bounds`` (an array of shape (dim, 2)) out-of-box draws are
    redrawn up to ten times and then clipped.
    """
    if count < 0:
        raise ValueError("count must be non-negative")
    if count == 0:
        return []
    scale = state.eig_basis * state.eig_sqrt

    def draw(k: int) -> np.ndarray:
        z = rng.standard_normal((k, state.dim))
        return state.mean + state.sigma * z @ scale.T

    xs = draw(count)
    if bounds is not None:
        bounds = np.asarray(bounds, dtype=float)
        for _ in range(MAX_RESAMPLE):
            bad = np.any((xs < bounds[:, 0]) | (xs > bounds[:, 1]), axis=1)
            if not bad.any():
                break
            xs[bad] = draw(int(bad.sum()))
        xs = _clip_to(xs, bounds)
    return list(xs)


def update(state: EsState, ranked: list[Candidate]) -> EsState:
    """One CMA-ES generation step from candidates ordered best first.

    The best ``mu`` candidates (``mu = popsize // 2``) are recombined; a
    shorter list uses its own renormalized leading weights. The state is
    modified in place and returned.
    """
    if not ranked:
        raise ValueError("update needs at least one candidate")
    n = state.dim
    parents = ranked[: state.mu]
    weights = state.recomb_weights[: len(parents)]
    weights = weights / weights.sum()
    mu_eff = 1.0 / np.sum(weights**2)

    xs = np.array([c.vector for c in parents], dtype=float)
    if xs.shape[1] != n:
        raise ValueError("candidate dimension mismatch")
    ys = (xs - state.mean) / state.sigma

    inv_sqrt = (state.eig_basis / state.eig_sqrt) @ state.eig_basis.T
    clip_len = np.sqrt(n) + 2 * n / (n + 2)
    for i, c in enumerate(parents):
        if c.injected:
            norm = np.linalg.norm(inv_sqrt @ ys[i])
            if norm > clip_len:
                ys[i] *= clip_len / norm

    y_w = weights @ ys
    state.mean = state.mean + state.sigma * y_w

    cs, cc, c1, cmu = state.c_sigma, state.c_c, state.c_1, state.c_mu
    state.path_sigma = (1 - cs) * state.path_sigma + np.sqrt(cs * (2 - cs) * mu_eff) * (inv_sqrt @ y_w)
    ps_norm = np.linalg.norm(state.path_sigma)
    g = state.generation + 1
    h_sigma = ps_norm / np.sqrt(1 - (1 - cs) ** (2 * g)) < (1.4 + 2 / (n + 1)) * state.chi_n
    state.path_c = (1 - cc) * state.path_c + h_sigma * np.sqrt(cc * (2 - cc) * mu_eff) * y_w

    rank_mu = (ys * weights[:, None]).T @ ys
    delta = (1 - h_sigma) * cc * (2 - cc)
    state.cov = (
        (1 - c1 - cmu + c1 * delta) * state.cov
        + c1 * np.outer(state.path_c, state.path_c)
        + cmu * rank_mu
    )
    state.sigma = float(state.sigma * np.exp((cs / state.d_sigma) * (ps_norm / state.chi_n - 1)))
    _refresh(state)
    state.generation = g
    state.mean_history.append(state.mean.copy())
    return state


def marginal(state: EsState, coords) -> tuple[np.ndarray, np.ndarray, float]:
    """Mean sub-vector, principal covariance sub-block and sigma over ``coords``.

    ``coords`` are zero-based, non-empty and strictly increasing.
    """
    idx = np.asarray(list(coords), dtype=int)
    if idx.size == 0:
        raise ValueError("coords must be non-empty")
    if np.any(np.diff(idx) <= 0):
        raise ValueError("coords must be strictly increasing")
    if idx[0] < 0 or idx[-1] >= state.dim:
        raise IndexError("coordinate out of range")
    return state.mean[idx].copy(), state.cov[np.ix_(idx, idx)].copy(), state.sigma
