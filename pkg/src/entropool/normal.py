"""Closed-form reweighting for normal reference models.

For a normal reference N(mu, Sigma) and views pinning the means of QX and
the covariance of GX, the minimum relative-entropy posterior is again
normal with

    mu~    = mu + Sigma Q' (Q Sigma Q')^-1 (mu_Q~ - Q mu)
    Sigma~ = Sigma + Sigma G' ((G Sigma G')^-1 Sigma_G~ (G Sigma G')^-1
                               - (G Sigma G')^-1) G Sigma

and the confidence-c posterior is the two-component mixture of reference
and full-confidence posterior.  These formulas are the verification oracle
for the scenario-space solver: discretize the reference, compile the same
views as constraint rows, solve, and compare moments.
"""

import json
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .constraints import ConstraintBuilder, LinearConstraintSet
from .scenarios import ProbabilityVector, ScenarioPanel


class NotPositiveDefiniteError(ValueError):
    """A covariance that must be (semi)definite is not; carries the eigenvalue."""

    def __init__(self, message: str, eigenvalue: Optional[float] = None):
        super().__init__(message)
        self.eigenvalue = eigenvalue


@dataclass(frozen=True)
class NormalModel:
    """Mean vector and positive-definite covariance."""

    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        sigma = np.atleast_2d(np.asarray(self.sigma, dtype=float))
        if sigma.shape != (mu.shape[0], mu.shape[0]):
            raise ValueError("covariance shape does not match the mean")
        if not np.allclose(sigma, sigma.T, atol=1e-12):
            raise ValueError("covariance must be symmetric")
        try:
            np.linalg.cholesky(sigma)
        except np.linalg.LinAlgError:
            smallest = float(np.linalg.eigvalsh(sigma)[0])
            raise NotPositiveDefiniteError(
                f"covariance is not positive definite (min eigenvalue {smallest:g})",
                smallest) from None
        mu.setflags(write=False)
        sigma.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)

    @property
    def dim(self) -> int:
        return self.mu.shape[0]

    def to_json(self) -> str:
        return json.dumps({"mu": self.mu.tolist(), "sigma": self.sigma.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "NormalModel":
        obj = json.loads(text)
        return cls(np.asarray(obj["mu"], dtype=float),
                   np.asarray(obj["sigma"], dtype=float))


@dataclass(frozen=True)
class NormalViewSpec:
    """Mean views on QX and/or covariance views on GX (either block optional)."""

    Q: Optional[np.ndarray] = None
    mu_Q: Optional[np.ndarray] = None
    G: Optional[np.ndarray] = None
    sigma_G: Optional[np.ndarray] = None

    def __post_init__(self):
        if (self.Q is None) != (self.mu_Q is None):
            raise ValueError("Q and mu_Q must be supplied together")
        if (self.G is None) != (self.sigma_G is None):
            raise ValueError("G and sigma_G must be supplied together")
        if self.Q is None and self.G is None:
            raise ValueError("at least one view block is required")
        for name in ("Q", "G"):
            block = getattr(self, name)
            if block is not None:
                block = np.atleast_2d(np.asarray(block, dtype=float))
                block.setflags(write=False)
                object.__setattr__(self, name, block)
        if self.mu_Q is not None:
            mu_q = np.atleast_1d(np.asarray(self.mu_Q, dtype=float))
            if mu_q.shape[0] != self.Q.shape[0]:
                raise ValueError("mu_Q length does not match Q")
            mu_q.setflags(write=False)
            object.__setattr__(self, "mu_Q", mu_q)
        if self.sigma_G is not None:
            sig = np.atleast_2d(np.asarray(self.sigma_G, dtype=float))
            if sig.shape != (self.G.shape[0], self.G.shape[0]):
                raise ValueError("sigma_G shape does not match G")
            if not np.allclose(sig, sig.T, atol=1e-12):
                raise ValueError("sigma_G must be symmetric")
            smallest = float(np.linalg.eigvalsh(sig)[0])
            if smallest < -1e-12:
                raise NotPositiveDefiniteError(
                    f"sigma_G must be positive semidefinite (min eigenvalue {smallest:g})",
                    smallest)
            sig.setflags(write=False)
            object.__setattr__(self, "sigma_G", sig)

    @classmethod
    def from_json(cls, text: str) -> "NormalViewSpec":
        obj = json.loads(text)
        def _get(key):
            return np.asarray(obj[key], dtype=float) if obj.get(key) is not None else None
        return cls(Q=_get("Q"), mu_Q=_get("mu_Q"), G=_get("G"), sigma_G=_get("sigma_G"))


@dataclass(frozen=True)
class NormalMixture:
    """Finite normal mixture; weights nonnegative, summing to one."""

    components: Tuple[Tuple[float, NormalModel], ...]

    def __post_init__(self):
        components = tuple((float(w), m) for w, m in self.components)
        weights = np.array([w for w, _ in components])
        if np.any(weights < 0.0) or abs(float(weights.sum()) - 1.0) > 1e-12:
            raise ValueError("mixture weights must be nonnegative and sum to one")
        object.__setattr__(self, "components", components)

    def mean(self) -> np.ndarray:
        return sum(w * m.mu for w, m in self.components)


def _solve_spd(matrix: np.ndarray, rhs: np.ndarray, label: str) -> np.ndarray:
    try:
        return cho_solve(cho_factor(matrix), rhs)
    except np.linalg.LinAlgError:
        raise ValueError(f"{label} is singular") from None


def normal_posterior(ref: NormalModel, views: NormalViewSpec) -> NormalModel:
    """Full-confidence posterior for mean views on QX and covariance views on GX.

    Omitted blocks leave the corresponding moment untouched.  The assembled
    covariance is symmetrized and validated positive definite; failure is an
    error carrying the offending eigenvalue, never a silent repair.
    """
    mu, sigma = ref.mu, ref.sigma
    mu_post = mu.copy()
    sigma_post = sigma.copy()
    if views.Q is not None:
        q = views.Q
        q_sigma = q @ sigma
        gram = q_sigma @ q.T  # Q Sigma Q'
        adjustment = _solve_spd(gram, views.mu_Q - q @ mu, "Q Sigma Q'")
        mu_post = mu + q_sigma.T @ adjustment
    if views.G is not None:
        g = views.G
        g_sigma = g @ sigma
        gram = g_sigma @ g.T  # G Sigma G'
        inv_target_inv = _solve_spd(
            gram, _solve_spd(gram, views.sigma_G, "G Sigma G'").T, "G Sigma G'")
        gram_inv = _solve_spd(gram, np.eye(gram.shape[0]), "G Sigma G'")
        inner = inv_target_inv - gram_inv
        sigma_post = sigma + g_sigma.T @ inner @ g_sigma
        sigma_post = 0.5 * (sigma_post + sigma_post.T)
    try:
        return NormalModel(mu_post, sigma_post)
    except NotPositiveDefiniteError as exc:
        raise NotPositiveDefiniteError(
            f"posterior covariance lost positive definiteness: {exc}",
            exc.eigenvalue) from None


def kl_normals(a: NormalModel, b: NormalModel) -> float:
    """Relative entropy of normal a from normal b (nats).

    0.5*[ln det(Sigma_b Sigma_a^-1) - N + tr(Sigma_a Sigma_b^-1)
         + (mu_a - mu_b)' Sigma_b^-1 (mu_a - mu_b)].
    """
    if a.dim != b.dim:
        raise ValueError("models have different dimensions")
    if np.array_equal(a.mu, b.mu) and np.array_equal(a.sigma, b.sigma):
        return 0.0
    n = a.dim
    diff = a.mu - b.mu
    b_inv_a = _solve_spd(b.sigma, a.sigma, "covariance of b")
    quad = float(diff @ _solve_spd(b.sigma, diff, "covariance of b"))
    sign_a, logdet_a = np.linalg.slogdet(a.sigma)
    sign_b, logdet_b = np.linalg.slogdet(b.sigma)
    if sign_a <= 0 or sign_b <= 0:
        raise ValueError("covariances must have positive determinant")
    return 0.5 * (logdet_b - logdet_a - n + float(np.trace(b_inv_a)) + quad)


def mixture_posterior(ref: NormalModel, full_conf: NormalModel,
                      c: float) -> NormalMixture:
    """Confidence-c posterior: reference with weight 1-c, posterior with weight c."""
    if not 0.0 <= c <= 1.0:
        raise ValueError(f"confidence must lie in [0, 1], got {c}")
    return NormalMixture(((1.0 - c, ref), (c, full_conf)))


def discretize(model: NormalModel, j: int, seed: int,
               factor_names: Optional[List[str]] = None
               ) -> Tuple[ScenarioPanel, ProbabilityVector]:
    """J pseudo-random draws with uniform probabilities, deterministic in the seed."""
    if j < 100:
        raise ValueError("discretization needs at least 100 scenarios")
    rng = np.random.default_rng(seed)
    chol = np.linalg.cholesky(model.sigma)
    draws = rng.standard_normal((j, model.dim)) @ chol.T + model.mu
    if factor_names is None:
        factor_names = [f"x{i}" for i in range(model.dim)]
    return ScenarioPanel(factor_names, draws), ProbabilityVector.uniform(j)


def normal_view_constraints(panel: ScenarioPanel, prior: ProbabilityVector,
                            ref: NormalModel,
                            views: NormalViewSpec) -> LinearConstraintSet:
    """Constraint rows that make the scenario solver target the analytic posterior.

    Mean views become first-moment equality rows on the QX combinations.
    Covariance views become second-moment equality rows on the GX
    combinations, anchored at the analytic posterior mean so the attained
    covariance equals sigma_G exactly rather than drifting with the mean.
    """
    posterior = normal_posterior(ref, views)
    builder = ConstraintBuilder(panel.n_scenarios)
    if views.Q is not None:
        combos = panel.data @ views.Q.T
        for i in range(views.Q.shape[0]):
            builder.add(combos[:, i], "=", float(views.mu_Q[i]))
    if views.G is not None:
        combos = panel.data @ views.G.T
        anchor = views.G @ posterior.mu
        for i in range(views.G.shape[0]):
            builder.add(combos[:, i], "=", float(anchor[i]))
            for l in range(i, views.G.shape[0]):
                builder.add(combos[:, i] * combos[:, l], "=",
                            float(views.sigma_G[i, l] + anchor[i] * anchor[l]))
    return builder.build()
