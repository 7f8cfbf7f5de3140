"""Minimum relative-entropy reweighting under linear probability constraints.

The primal problem is

    minimize   sum_j x_j (ln x_j - ln p_j)
    subject to F x <= f,  H x = h

over scenario probabilities x, with the prior p fixed.  Stationarity gives
the exponential form x(lambda, nu) = exp(ln p - 1 - F'lambda - H'nu), which
is strictly positive, so the nonnegativity constraint never binds and the
whole problem collapses to maximizing the concave dual

    G(lambda, nu) = -sum_j x_j(lambda, nu) - lambda'f - nu'h

over lambda >= 0 and free nu.  The dual dimension equals the number of
constraint rows, never the number of scenarios, which is what makes very
large panels cheap to reweight.

The maximizer here is a projected Newton method with the exact Hessian
(-A diag(x) A' for the stacked constraint matrix A) and Armijo backtracking;
it is fully deterministic, starting from zero multipliers.
"""

import json
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ._kernels import exp_primal
from .constraints import LinearConstraintSet
from .scenarios import ProbabilityVector


class SupportViolationError(ValueError):
    """A distribution puts mass where its reference has none."""


class EntropySolverError(RuntimeError):
    """Base class for solve failures; carries the diagnostics payload."""

    def __init__(self, message: str, diagnostics: Optional[dict] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class InfeasibleViewsError(EntropySolverError):
    """The constraint system admits no probability vector (dual diverged)."""


class NotConvergedError(EntropySolverError):
    """Iteration limit or stall before reaching the dual tolerance."""


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances and line-search parameters for the dual maximization."""

    dual_tolerance: float = 1e-9
    max_iterations: int = 500
    feasibility_tolerance: float = 1e-8
    backtrack_factor: float = 0.5
    armijo_slope: float = 1e-4
    min_step: float = 1e-14
    divergence_threshold: float = 1e8

    def __post_init__(self):
        if self.dual_tolerance <= 0 or self.feasibility_tolerance <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if not 0 < self.backtrack_factor < 1:
            raise ValueError("backtrack_factor must lie in (0, 1)")


@dataclass(frozen=True)
class PosteriorResult:
    """Posterior probabilities plus dual multipliers and KKT diagnostics."""

    posterior: ProbabilityVector
    lam: np.ndarray
    nu: np.ndarray
    relative_entropy: float
    max_constraint_violation: float
    complementary_slackness: float
    iterations: int
    converged: bool
    clamped: int

    def diagnostics(self) -> dict:
        return {
            "relative_entropy": self.relative_entropy,
            "max_constraint_violation": self.max_constraint_violation,
            "complementary_slackness": self.complementary_slackness,
            "iterations": self.iterations,
            "converged": self.converged,
            "clamped": self.clamped,
        }

    def diagnostics_json(self) -> str:
        return json.dumps(self.diagnostics(), indent=2)


def relative_entropy(p_tilde: ProbabilityVector, p: ProbabilityVector) -> float:
    """Discrete relative entropy sum p~_j (ln p~_j - ln p_j), with 0 ln 0 = 0."""
    a, b = p_tilde.weights, p.weights
    if a.shape != b.shape:
        raise ValueError("probability vectors have different lengths")
    mask = a > 0.0
    if np.any(b[mask] == 0.0):
        raise SupportViolationError(
            "posterior puts mass on scenarios with zero prior probability")
    a_m, b_m = a[mask], b[mask]
    return float(np.sum(a_m * (np.log(a_m) - np.log(b_m))))


def _positive_log_prior(prior: ProbabilityVector) -> np.ndarray:
    if np.any(prior.weights <= 0.0):
        raise ValueError("solver prior must be strictly positive")
    return np.log(prior.weights)


def _stack(constraints: LinearConstraintSet) -> Tuple[np.ndarray, np.ndarray]:
    coeffs = np.vstack([constraints.F, constraints.H]) if constraints.n_inequalities \
        else constraints.H
    rhs = np.concatenate([constraints.f, constraints.h])
    return coeffs, rhs


def primal_from_duals(lam, nu, constraints: LinearConstraintSet,
                      prior: ProbabilityVector) -> np.ndarray:
    """Exponential primal map x_j = exp(ln p_j - 1 - (F'lam)_j - (H'nu)_j).

    Always strictly positive; exponents are clamped at +-700 to guard
    against overflow (clamp events show up in solve diagnostics).
    """
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    nu = np.atleast_1d(np.asarray(nu, dtype=float))
    if lam.shape[0] != constraints.n_inequalities or nu.shape[0] != constraints.n_equalities:
        raise ValueError("multiplier lengths do not match constraint rows")
    log_p = _positive_log_prior(prior)
    coeffs, _ = _stack(constraints)
    y = np.concatenate([lam, nu])
    x, _ = exp_primal(log_p, np.ascontiguousarray(coeffs.T), y)
    return x


def dual_value_and_gradient(lam, nu, constraints: LinearConstraintSet,
                            prior: ProbabilityVector):
    """Dual objective and its gradient at (lam, nu).

    The value is the Lagrangian evaluated at the primal map, which reduces
    to -sum x - lam'f - nu'h; the gradient is (F x - f, H x - h) by the
    envelope theorem.
    """
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    nu = np.atleast_1d(np.asarray(nu, dtype=float))
    log_p = _positive_log_prior(prior)
    coeffs, rhs = _stack(constraints)
    y = np.concatenate([lam, nu])
    x, _ = exp_primal(log_p, np.ascontiguousarray(coeffs.T), y)
    value = -float(x.sum()) - float(y @ rhs)
    gradient = coeffs @ x - rhs
    m_ineq = constraints.n_inequalities
    return value, gradient[:m_ineq], gradient[m_ineq:]


def solve(constraints: LinearConstraintSet, prior: ProbabilityVector,
          config: Optional[SolverConfig] = None) -> PosteriorResult:
    """Posterior probabilities minimizing relative entropy to the prior.

    Maximizes the dual by projected Newton (lambda kept nonnegative by
    projection, exact Hessian, backtracking line search) and reads the
    posterior off the exponential primal map at the optimum.

    Raises InfeasibleViewsError when the dual diverges (multipliers blow
    past the divergence threshold: the constraint system admits no
    distribution) and NotConvergedError when the iteration budget or the
    line search is exhausted first, or when the near-feasibility checks on
    the returned posterior fail.
    """
    if config is None:
        config = SolverConfig()
    if constraints.n_scenarios != len(prior):
        raise ValueError("constraint system and prior disagree on J")
    log_p = _positive_log_prior(prior)
    if constraints.n_rows == 1:
        # normalization only: the unconstrained KL minimum is the prior itself,
        # with the exact multiplier nu0 = -1
        return PosteriorResult(
            posterior=prior, lam=np.zeros(0), nu=np.array([-1.0]),
            relative_entropy=0.0, max_constraint_violation=0.0,
            complementary_slackness=0.0, iterations=0, converged=True,
            clamped=0)
    coeffs, rhs = _stack(constraints)
    coeffs_t = np.ascontiguousarray(coeffs.T)
    m_ineq = constraints.n_inequalities
    m_total = constraints.n_rows

    def evaluate(y):
        x, n_clamped = exp_primal(log_p, coeffs_t, y)
        value = -float(x.sum()) - float(y @ rhs)
        gradient = coeffs @ x - rhs
        return x, value, gradient, n_clamped

    y = np.zeros(m_total)
    x, value, gradient, n_clamped = evaluate(y)
    iterations = 0
    converged = False
    stalled = False

    for iterations in range(1, config.max_iterations + 1):
        projected = gradient.copy()
        at_bound = np.zeros(m_total, dtype=bool)
        at_bound[:m_ineq] = y[:m_ineq] <= 0.0
        projected[at_bound] = np.maximum(projected[at_bound], 0.0)
        if float(np.max(np.abs(projected), initial=0.0)) <= config.dual_tolerance:
            converged = True
            break
        if float(np.max(np.abs(y), initial=0.0)) > config.divergence_threshold:
            raise InfeasibleViewsError(
                "dual multipliers diverged: views are mutually inconsistent",
                {"multiplier_norm": float(np.max(np.abs(y))),
                 "iterations": iterations})

        # blocked multipliers sit at zero with the gradient pushing them negative
        blocked = at_bound & (gradient < 0.0)
        free = ~blocked
        g_free = gradient[free]
        a_free = coeffs[free]
        hessian = (a_free * x) @ a_free.T
        ridge = 1e-10 * max(1.0, float(np.max(np.diag(hessian), initial=0.0)))
        direction = None
        for _ in range(6):
            try:
                d = np.linalg.solve(hessian + ridge * np.eye(hessian.shape[0]), g_free)
            except np.linalg.LinAlgError:
                ridge *= 100.0
                continue
            if np.all(np.isfinite(d)) and float(g_free @ d) > 0.0:
                direction = d
                break
            ridge *= 100.0
        if direction is None:
            direction = g_free  # steepest-ascent fallback

        # once the predicted gain drops below float resolution of the value,
        # Armijo can only accept zero-length steps; take the full Newton step
        predicted_gain = float(g_free @ direction)
        if predicted_gain <= 1e-12 * (1.0 + abs(value)):
            y_new = y.copy()
            y_new[free] = y[free] + direction
            np.maximum(y_new[:m_ineq], 0.0, out=y_new[:m_ineq])
            x, value, gradient, n_clamped = evaluate(y_new)
            y = y_new
            continue

        step = 1.0
        accepted = False
        while step >= config.min_step:
            y_new = y.copy()
            y_new[free] = y[free] + step * direction
            np.maximum(y_new[:m_ineq], 0.0, out=y_new[:m_ineq])
            x_new, value_new, gradient_new, n_clamped_new = evaluate(y_new)
            gain_floor = config.armijo_slope * float(gradient @ (y_new - y))
            if value_new >= value + gain_floor and np.isfinite(value_new):
                y, x, value, gradient, n_clamped = (
                    y_new, x_new, value_new, gradient_new, n_clamped_new)
                accepted = True
                break
            step *= config.backtrack_factor
        if not accepted:
            stalled = True
            break

    diagnostics = {"iterations": iterations, "dual_value": value,
                   "clamped": n_clamped}
    if not converged:
        if float(np.max(np.abs(y), initial=0.0)) > 1e4:
            raise InfeasibleViewsError(
                "dual climbing without stationarity: views are likely infeasible",
                diagnostics)
        reason = "line search stalled" if stalled else "iteration limit reached"
        raise NotConvergedError(f"dual maximization did not converge: {reason}",
                                diagnostics)

    total = float(x.sum())
    if abs(total - 1.0) > config.feasibility_tolerance:
        raise NotConvergedError(
            f"posterior mass drifted to {total!r} at dual optimum", diagnostics)
    posterior_weights = x / total
    lam, nu = y[:m_ineq].copy(), y[m_ineq:].copy()

    ineq_residual = constraints.F @ posterior_weights - constraints.f if m_ineq \
        else np.zeros(0)
    eq_residual = constraints.H @ posterior_weights - constraints.h
    max_violation = max(
        float(np.max(ineq_residual, initial=0.0)),
        float(np.max(np.abs(eq_residual), initial=0.0)))
    slackness = float(np.max(np.abs(lam * ineq_residual), initial=0.0))
    posterior = ProbabilityVector(posterior_weights)

    return PosteriorResult(
        posterior=posterior,
        lam=lam,
        nu=nu,
        relative_entropy=relative_entropy(posterior, prior),
        max_constraint_violation=max_violation,
        complementary_slackness=slackness,
        iterations=iterations,
        converged=True,
        clamped=n_clamped,
    )
