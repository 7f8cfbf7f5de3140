"""Option-book machinery: straddle pricing, scenario bootstrap, mean-CVaR frontier.

Pricing maps each joint risk-factor scenario to a horizon price once; any
later probability reweighting reuses the same price panel untouched, which
is the whole point of reweighting scenarios instead of redrawing them.

The frontier follows the two-step heuristic for large scenario counts:
first trace the probability-weighted mean-variance frontier under the
position constraints across a grid of variance targets, then evaluate the
exact sample objective E[pnl] - lambda * CVaR at each frontier point and
keep the best (ties broken toward the lowest variance target).
"""

import json
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linprog, minimize

from ._kernels import straddle_price
from .scenarios import (ProbabilityVector, ScenarioPanel, weighted_cvar,
                        weighted_mean)


class PricingError(ValueError):
    """Scenario pricing hit invalid inputs (e.g. a non-positive smile vol)."""


class FrontierError(RuntimeError):
    """The frontier constraint set is infeasible or the search failed."""


@dataclass(frozen=True)
class ButterflyContract:
    """Long call + long put at one strike, priced through a skew/smile map.

    ``underlying_factor`` and ``vol_factor`` name the panel columns holding
    the underlying log-change and the ATM implied-volatility change this
    contract reprices against (decimals, e.g. 0.01 = one vol point).
    """

    underlying_id: str
    strike: float
    expiry: float
    risk_free: float
    smile_alpha: float
    smile_beta: float
    current_underlying: float
    current_atm_vol: float
    horizon: float
    underlying_factor: str
    vol_factor: str

    def __post_init__(self):
        for name in ("strike", "expiry", "current_underlying", "current_atm_vol"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if self.expiry - self.horizon <= 0.0:
            raise ValueError("horizon must fall strictly before expiry")


@dataclass(frozen=True)
class PricePanel:
    """J x I matrix of horizon p&l (or prices) per instrument."""

    instrument_ids: List[str]
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2 or data.shape[1] != len(self.instrument_ids):
            raise ValueError("price panel shape does not match instrument ids")
        if not np.all(np.isfinite(data)):
            raise ValueError("price panel contains non-finite entries")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "instrument_ids", list(self.instrument_ids))


@dataclass(frozen=True)
class FrontierSpec:
    """CVaR level, risk-aversion grid and position constraints for the frontier."""

    gamma: float
    lambdas: Tuple[float, ...]
    position_bound: float
    B: np.ndarray
    b_lower: np.ndarray
    b_upper: np.ndarray
    n_variance_targets: int = 30

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if self.position_bound <= 0.0:
            raise ValueError("position bound must be positive")
        if any(lam < 0.0 for lam in self.lambdas):
            raise ValueError("risk aversions must be nonnegative")
        object.__setattr__(self, "lambdas", tuple(float(l) for l in self.lambdas))
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        lo = np.atleast_1d(np.asarray(self.b_lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.b_upper, dtype=float))
        if B.shape[0] != lo.shape[0] or B.shape[0] != hi.shape[0]:
            raise ValueError("constraint rows and bounds disagree")
        for arr in (B, lo, hi):
            arr.setflags(write=False)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "b_lower", lo)
        object.__setattr__(self, "b_upper", hi)


@dataclass(frozen=True)
class BootstrapConfig:
    """Kernel bootstrap settings: bandwidth multiplier, target count, seed."""

    epsilon: float = 0.15
    j: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive")


@dataclass(frozen=True)
class FrontierPoint:
    lambda_: float
    weights: np.ndarray
    expected_pnl: float
    cvar: float


# ---------------------------------------------------------------------------
# pricing
# ---------------------------------------------------------------------------

def bs_price(y, sigma, strike: float, maturity: float, rate: float):
    """Same-strike call+put price

        y [Phi(d1) - Phi(-d1)] - K e^{-rT} [Phi(d2) - Phi(-d2)]

    with the usual d1 = (ln(y/K) + (r + sigma^2/2) T) / (sigma sqrt(T)) and
    d2 = d1 - sigma sqrt(T).  Vectorized over y and sigma.
    """
    y_arr = np.atleast_1d(np.asarray(y, dtype=float))
    sigma_arr = np.broadcast_to(
        np.asarray(sigma, dtype=float), y_arr.shape).astype(float)
    if strike <= 0.0 or maturity <= 0.0:
        raise PricingError("strike and maturity must be positive")
    if np.any(y_arr <= 0.0) or np.any(sigma_arr <= 0.0):
        raise PricingError("spot and volatility must be positive")
    out = straddle_price(np.ascontiguousarray(y_arr),
                         np.ascontiguousarray(sigma_arr),
                         float(strike), float(maturity), float(rate))
    if np.ndim(y) == 0:
        return float(out[0])
    return out


def smile_vol(y, sigma, strike: float, maturity: float,
              alpha: float, beta: float):
    """Skew/smile map sigma + alpha*m + beta*m^2 with m = ln(y/K)/sqrt(T)."""
    if maturity <= 0.0:
        raise PricingError("maturity must be positive")
    moneyness = np.log(np.asarray(y, dtype=float) / strike) / math.sqrt(maturity)
    return sigma + alpha * moneyness + beta * moneyness ** 2


def horizon_price(contract: ButterflyContract, x_y, x_sigma):
    """Horizon price under a scenario of underlying log-change and vol change."""
    remaining = contract.expiry - contract.horizon
    y_h = contract.current_underlying * np.exp(np.asarray(x_y, dtype=float))
    vol = smile_vol(y_h, contract.current_atm_vol + np.asarray(x_sigma, dtype=float),
                    contract.strike, remaining,
                    contract.smile_alpha, contract.smile_beta)
    if np.any(np.asarray(vol) <= 0.0):
        raise PricingError(
            f"{contract.underlying_id}: smile-adjusted volatility is not positive")
    return bs_price(y_h, vol, contract.strike, remaining, contract.risk_free)


def current_price(contract: ButterflyContract) -> float:
    """Price today through the same smile map, at full time to expiry."""
    vol = smile_vol(contract.current_underlying, contract.current_atm_vol,
                    contract.strike, contract.expiry,
                    contract.smile_alpha, contract.smile_beta)
    if vol <= 0.0:
        raise PricingError(
            f"{contract.underlying_id}: smile-adjusted volatility is not positive")
    return float(bs_price(contract.current_underlying, float(vol),
                          contract.strike, contract.expiry, contract.risk_free))


def contract_delta(contract: ButterflyContract, bump: float = 1e-5) -> float:
    """Price sensitivity to the underlying log-change at the null scenario.

    Central finite difference of the horizon price in x_y.
    """
    up = horizon_price(contract, np.array([bump]), np.array([0.0]))
    down = horizon_price(contract, np.array([-bump]), np.array([0.0]))
    return float((up[0] - down[0]) / (2.0 * bump))


# ---------------------------------------------------------------------------
# scenario generation and p&l
# ---------------------------------------------------------------------------

def kernel_bootstrap(history: np.ndarray, config: BootstrapConfig,
                     factor_names: Optional[Sequence[str]] = None
                     ) -> Tuple[ScenarioPanel, ProbabilityVector]:
    """Bootstrap J scenarios by sampling normals centered at history rows.

    Each historical observation x_t spawns floor(J / T_obs) draws from
    N(x_t, epsilon * sample covariance); the remaining J mod T_obs draws go
    round-robin to the first rows.  Probabilities are uniform and the draw
    is deterministic in the seed.
    """
    history = np.atleast_2d(np.asarray(history, dtype=float))
    t_obs, n = history.shape
    if t_obs < n + 1:
        raise ValueError(f"need at least N+1 = {n + 1} observations, got {t_obs}")
    if config.j < t_obs:
        raise ValueError("target scenario count must be at least the history length")
    covariance = np.cov(history, rowvar=False, ddof=1)
    covariance = np.atleast_2d(covariance)
    try:
        chol = np.linalg.cholesky(config.epsilon * covariance)
    except np.linalg.LinAlgError:
        chol = np.linalg.cholesky(
            config.epsilon * covariance + 1e-12 * np.eye(n))
    base, remainder = divmod(config.j, t_obs)
    counts = np.full(t_obs, base, dtype=int)
    counts[:remainder] += 1
    rng = np.random.default_rng(config.seed)
    blocks = []
    for t in range(t_obs):
        z = rng.standard_normal((counts[t], n))
        blocks.append(history[t] + z @ chol.T)
    panel_data = np.vstack(blocks)
    if factor_names is None:
        factor_names = [f"x{i}" for i in range(n)]
    return (ScenarioPanel(list(factor_names), panel_data),
            ProbabilityVector.uniform(config.j))


def build_pnl_panel(panel: ScenarioPanel, book: Sequence[ButterflyContract],
                    current_prices: Sequence[float]) -> PricePanel:
    """Horizon p&l per scenario and contract: price(scenario) - current price.

    Computed once; posterior reweighting downstream never touches it.
    """
    if len(book) != len(current_prices):
        raise ValueError("one current price per contract required")
    columns = []
    for contract, price_now in zip(book, current_prices):
        x_y = panel.column(contract.underlying_factor)
        x_sigma = panel.column(contract.vol_factor)
        columns.append(horizon_price(contract, x_y, x_sigma) - price_now)
    ids = [f"{c.underlying_id}:{c.expiry:g}" for c in book]
    if len(set(ids)) != len(ids):
        ids = [f"{i}:{label}" for i, label in enumerate(ids)]
    return PricePanel(ids, np.column_stack(columns))


def zero_delta_budget_constraints(book: Sequence[ButterflyContract],
                                  current_prices: Sequence[float]
                                  ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Constraint rows forcing zero net delta and zero initial outlay."""
    deltas = np.array([contract_delta(c) for c in book])
    prices = np.asarray(current_prices, dtype=float)
    B = np.vstack([deltas, prices])
    zeros = np.zeros(2)
    return B, zeros, zeros


# ---------------------------------------------------------------------------
# mean-CVaR frontier
# ---------------------------------------------------------------------------

def _feasible(w: np.ndarray, spec: FrontierSpec, tol: float = 1e-9) -> bool:
    if np.any(np.abs(w) > spec.position_bound + tol):
        return False
    bw = spec.B @ w
    return bool(np.all(bw >= spec.b_lower - tol) and np.all(bw <= spec.b_upper + tol))


def _max_mean_weights(mu: np.ndarray, spec: FrontierSpec) -> np.ndarray:
    """Linear-program solution maximizing expected p&l under the constraints."""
    n = mu.shape[0]
    a_ub = np.vstack([spec.B, -spec.B])
    b_ub = np.concatenate([spec.b_upper, -spec.b_lower])
    res = linprog(-mu, A_ub=a_ub, b_ub=b_ub,
                  bounds=[(-spec.position_bound, spec.position_bound)] * n,
                  method="highs")
    if not res.success:
        raise FrontierError(f"expected-p&l maximization infeasible: {res.message}")
    return res.x


def _max_mean_at_variance(mu: np.ndarray, cov: np.ndarray, target: float,
                          spec: FrontierSpec, start: np.ndarray) -> Optional[np.ndarray]:
    """Maximize mu'w subject to w'Cov w <= target and the position constraints."""
    n = mu.shape[0]
    constraints = [{
        "type": "ineq",
        "fun": lambda w: target - w @ cov @ w,
        "jac": lambda w: -2.0 * cov @ w,
    }]
    for i in range(spec.B.shape[0]):
        row = spec.B[i]
        lo, hi = spec.b_lower[i], spec.b_upper[i]
        if hi - lo < 1e-15:
            constraints.append({"type": "eq",
                                "fun": (lambda w, r=row, c=lo: r @ w - c),
                                "jac": (lambda w, r=row: r)})
        else:
            constraints.append({"type": "ineq",
                                "fun": (lambda w, r=row, c=hi: c - r @ w),
                                "jac": (lambda w, r=row: -r)})
            constraints.append({"type": "ineq",
                                "fun": (lambda w, r=row, c=lo: r @ w - c),
                                "jac": (lambda w, r=row: r)})
    res = minimize(lambda w: -mu @ w, start, jac=lambda w: -mu,
                   method="SLSQP", constraints=constraints,
                   bounds=[(-spec.position_bound, spec.position_bound)] * n,
                   options={"maxiter": 200, "ftol": 1e-12})
    if not res.success or not np.all(np.isfinite(res.x)):
        return None
    w = res.x
    if w @ cov @ w > target * (1.0 + 1e-6) + 1e-12 or not _feasible(w, spec, 1e-6):
        return None
    return w


def mean_variance_candidates(pnl: PricePanel, p: ProbabilityVector,
                             spec: FrontierSpec) -> List[np.ndarray]:
    """Step one of the heuristic: weights tracing the mean-variance frontier.

    Variance targets are log-spaced between the minimum-variance feasible
    point (the zero book, which must be feasible) and the variance of the
    cap-bound maximum-mean book.
    """
    mu = pnl.data.T @ p.weights
    centered = pnl.data - mu
    cov = (centered * p.weights[:, np.newaxis]).T @ centered
    zero = np.zeros(mu.shape[0])
    if not _feasible(zero, spec):
        raise FrontierError("the zero book must satisfy the position constraints")
    candidates = [zero]
    w_top = _max_mean_weights(mu, spec)
    v_top = float(w_top @ cov @ w_top)
    if v_top <= 1e-16:
        return candidates
    targets = np.geomspace(v_top * 1e-4, v_top, spec.n_variance_targets)
    start = zero
    for target in targets:
        w = _max_mean_at_variance(mu, cov, float(target), spec, start)
        if w is not None:
            candidates.append(w)
            start = w
    candidates.append(w_top)
    return candidates


def mean_cvar_frontier(pnl: PricePanel, p: ProbabilityVector,
                       spec: FrontierSpec) -> List[FrontierPoint]:
    """Two-step mean-CVaR frontier over the risk-aversion grid.

    For each lambda the exact sample objective E - lambda*CVaR is evaluated
    on the mean-variance candidates and the best one kept; ties break toward
    the earlier (lower variance target) candidate.
    """
    candidates = mean_variance_candidates(pnl, p, spec)
    evaluated = []
    for w in candidates:
        portfolio = pnl.data @ w
        expected = weighted_mean(portfolio, p)
        risk = weighted_cvar(portfolio, p, spec.gamma)
        evaluated.append((w, expected, risk))
    points = []
    for lam in spec.lambdas:
        best = None
        best_value = -np.inf
        for w, expected, risk in evaluated:
            value = expected - lam * risk
            if value > best_value + 1e-12:
                best_value = value
                best = (w, expected, risk)
        w, expected, risk = best
        points.append(FrontierPoint(lambda_=lam, weights=w.copy(),
                                    expected_pnl=expected, cvar=risk))
    return points


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------

_CONTRACT_KEYS = {
    "underlying_id", "strike", "expiry", "risk_free", "smile_alpha",
    "smile_beta", "current_underlying", "current_atm_vol", "horizon",
    "underlying_factor", "vol_factor",
}


def book_from_json(payload) -> List[ButterflyContract]:
    if not isinstance(payload, list):
        raise ValueError("a book file is a JSON array of contracts")
    book = []
    for obj in payload:
        unknown = set(obj) - _CONTRACT_KEYS
        if unknown:
            raise ValueError(f"unknown contract fields {sorted(unknown)}")
        book.append(ButterflyContract(**obj))
    return book


def load_book(path) -> List[ButterflyContract]:
    with open(path, "r", encoding="utf-8") as handle:
        return book_from_json(json.load(handle))


def save_book(book: Sequence[ButterflyContract], path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump([c.__dict__ for c in book], handle, indent=2)


def save_frontier_csv(points: Sequence[FrontierPoint],
                      instrument_ids: Sequence[str], path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        headers = ["lambda"] + [f"w_{i}" for i in instrument_ids]
        headers += ["expected_pnl", "cvar"]
        handle.write(",".join(headers) + "\n")
        for point in points:
            row = [format(point.lambda_, ".17g")]
            row += [format(w, ".17g") for w in point.weights]
            row += [format(point.expected_pnl, ".17g"), format(point.cvar, ".17g")]
            handle.write(",".join(row) + "\n")
