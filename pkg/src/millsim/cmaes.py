"""Covariance Matrix Adaptation Evolution Strategy over the 4 normalized
symbolic-controller parameters, with grid discretization and a
condition-number termination rule."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .controllers import SymbolicParams
from .world import WorldConfig

DIMENSION = 4
INITIAL_MEAN = 0.5
INITIAL_SIGMA = 0.2
CONDITION_LIMIT = 1e14

#: Normalized values are snapped to multiples of this before being mapped
#: to physical commands (21 grid points on [0, 1]).
GRID_STEP = 0.05
GRID_COUNT = 21


class TerminatedError(RuntimeError):
    """ask() was called on a state past its termination criterion."""


@dataclass
class CmaParameters:
    """Fixed strategy parameters for a given population size (canonical
    defaults for the dimension)."""

    popsize: int
    mu: int
    weights: np.ndarray
    mu_eff: float
    c_sigma: float
    d_sigma: float
    c_c: float
    c_1: float
    c_mu: float
    chi_n: float

    @classmethod
    def defaults(cls, popsize: int, n: int = DIMENSION) -> CmaParameters:
        mu = popsize // 2
        raw = np.log((popsize + 1) / 2.0) - np.log(np.arange(1, mu + 1))
        weights = raw / raw.sum()
        mu_eff = 1.0 / float(weights @ weights)
        c_sigma = (mu_eff + 2) / (n + mu_eff + 5)
        d_sigma = 1 + 2 * max(0.0, math.sqrt((mu_eff - 1) / (n + 1)) - 1) \
            + c_sigma
        c_c = (4 + mu_eff / n) / (n + 4 + 2 * mu_eff / n)
        c_1 = 2 / ((n + 1.3) ** 2 + mu_eff)
        c_mu = min(1 - c_1,
                   2 * (mu_eff - 2 + 1 / mu_eff) / ((n + 2) ** 2 + mu_eff))
        chi_n = math.sqrt(n) * (1 - 1 / (4 * n) + 1 / (21 * n * n))
        return cls(popsize, mu, weights, mu_eff, c_sigma, d_sigma, c_c,
                   c_1, c_mu, chi_n)


@dataclass
class CmaState:
    """Search distribution state: mean, step size, covariance and the two
    evolution paths."""

    params: CmaParameters
    mean: np.ndarray
    sigma: float
    cov: np.ndarray
    p_sigma: np.ndarray
    p_c: np.ndarray
    generation: int = 0
    terminated: bool = False
    condition_number: float = 1.0

    def to_dict(self) -> dict:
        return {
            "popsize": self.params.popsize,
            "mean": self.mean.tolist(),
            "sigma": self.sigma,
            "cov": self.cov.tolist(),
            "p_sigma": self.p_sigma.tolist(),
            "p_c": self.p_c.tolist(),
            "generation": self.generation,
            "terminated": self.terminated,
            "condition_number": self.condition_number,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> CmaState:
        return cls(CmaParameters.defaults(doc["popsize"]),
                   np.array(doc["mean"], dtype=float),
                   float(doc["sigma"]),
                   np.array(doc["cov"], dtype=float),
                   np.array(doc["p_sigma"], dtype=float),
                   np.array(doc["p_c"], dtype=float),
                   int(doc["generation"]),
                   bool(doc["terminated"]),
                   float(doc["condition_number"]))


def cma_init(popsize: int) -> CmaState:
    """Fresh state: mean at the center of the unit box, sigma 0.2,
    identity covariance."""
    n = DIMENSION
    return CmaState(CmaParameters.defaults(popsize),
                    np.full(n, INITIAL_MEAN),
                    INITIAL_SIGMA,
                    np.eye(n),
                    np.zeros(n),
                    np.zeros(n))


def _decompose(state: CmaState) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of the (symmetrized) covariance."""
    cov = (state.cov + state.cov.T) / 2.0
    eigvals, eigvecs = np.linalg.eigh(cov)
    return eigvals, eigvecs


def ask(state: CmaState, rng: np.random.Generator) -> np.ndarray:
    """Sample popsize raw candidates ~ N(mean, sigma^2 C).

    Raw samples may leave the unit box; callers clip copies for
    evaluation and pass the raw samples back to tell().
    """
    if state.terminated:
        raise TerminatedError("CMA-ES state is terminated")
    eigvals, eigvecs = _decompose(state)
    scale = np.sqrt(np.maximum(eigvals, 0.0))
    z = rng.standard_normal((state.params.popsize, DIMENSION))
    return state.mean + state.sigma * (z * scale) @ eigvecs.T


def discretize(candidate: np.ndarray, config: WorldConfig) -> SymbolicParams:
    """Snap a unit-box candidate to the 21-point grid and map it to
    physical commands.

    Components are rounded to the nearest multiple of GRID_STEP (ties
    round up), then u -> (2u - 1) * limit, with v limits on the first two
    components and omega limits on the last two.
    """
    steps = []
    for u in candidate:
        if not 0.0 <= u <= 1.0:
            raise ValueError(f"candidate component {u} outside [0, 1]")
        steps.append(math.floor(u * (GRID_COUNT - 1) + 0.5))
    # (2 * (k/20) - 1) * limit computed as (k - 10) * limit / 10 so the
    # physical values land exactly on the decoder's output grid.
    v_a = (steps[0] - 10) * config.v_max / 10.0
    v_b = (steps[1] - 10) * config.v_max / 10.0
    omega_a = (steps[2] - 10) * config.omega_max / 10.0
    omega_b = (steps[3] - 10) * config.omega_max / 10.0
    return SymbolicParams(v_a, v_b, omega_a, omega_b)


def grid_values(candidate: np.ndarray) -> tuple[float, ...]:
    """The normalized grid points a candidate snaps to (multiples of
    GRID_STEP, exact floats k/20)."""
    return tuple(math.floor(u * (GRID_COUNT - 1) + 0.5) / (GRID_COUNT - 1)
                 for u in candidate)


def tell(state: CmaState, candidates: np.ndarray,
         fitnesses: list[float]) -> CmaState:
    """Standard rank-mu + rank-one update with cumulative step-size
    adaptation; fitnesses are maximized. Mutates and returns the state."""
    par = state.params
    if len(candidates) != par.popsize or len(fitnesses) != par.popsize:
        raise ValueError("candidates/fitnesses must match the population "
                         "size")
    fit = np.asarray(fitnesses, dtype=float)
    if not np.all(np.isfinite(fit)):
        raise ValueError("non-finite fitness passed to tell()")
    n = DIMENSION
    order = np.argsort(-fit, kind="stable")
    selected = np.asarray(candidates, dtype=float)[order[:par.mu]]

    old_mean = state.mean
    y = (selected - old_mean) / state.sigma
    y_w = par.weights @ y
    state.mean = old_mean + state.sigma * y_w

    eigvals, eigvecs = _decompose(state)
    inv_sqrt = eigvecs @ np.diag(1.0 / np.sqrt(np.maximum(eigvals, 1e-30))) \
        @ eigvecs.T
    state.p_sigma = (1 - par.c_sigma) * state.p_sigma + math.sqrt(
        par.c_sigma * (2 - par.c_sigma) * par.mu_eff) * (inv_sqrt @ y_w)
    ps_norm = float(np.linalg.norm(state.p_sigma))
    expected = math.sqrt(
        1 - (1 - par.c_sigma) ** (2 * (state.generation + 1)))
    h_sigma = ps_norm / expected / par.chi_n < 1.4 + 2 / (n + 1)
    state.p_c = (1 - par.c_c) * state.p_c + (
        math.sqrt(par.c_c * (2 - par.c_c) * par.mu_eff) * y_w
        if h_sigma else 0.0)

    delta_h = (1 - h_sigma) * par.c_c * (2 - par.c_c)
    rank_mu = (y * par.weights[:, None]).T @ y
    state.cov = ((1 - par.c_1 - par.c_mu) * state.cov
                 + par.c_1 * (np.outer(state.p_c, state.p_c)
                              + delta_h * state.cov)
                 + par.c_mu * rank_mu)
    state.cov = (state.cov + state.cov.T) / 2.0

    state.sigma *= math.exp((par.c_sigma / par.d_sigma)
                            * (ps_norm / par.chi_n - 1))
    state.generation += 1

    eigvals, _ = _decompose(state)
    floor = max(float(eigvals.max()), 1e-300) * 1e-20
    lo = max(float(eigvals.min()), floor)
    state.condition_number = float(eigvals.max()) / lo
    if state.condition_number > CONDITION_LIMIT:
        state.terminated = True
    return state
