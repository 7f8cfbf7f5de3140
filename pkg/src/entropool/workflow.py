"""Orchestration shared by the CLI and the HTTP service.

One user's views solve jointly when they all carry full confidence.  With
per-view confidences the posterior is the power-set blend: each subset of
views with positive allocation mass gets its own joint solve, and the
blends are weighted by the allocation.  Users then pool by their overall
confidences with the residual mass on the prior.
"""

from typing import Dict, List, Optional, Sequence, Tuple

from .constraints import normalization_only
from .pooling import (ConfidenceSpec, UserConfidence, pool_multi,
                      posterior_from_power_set, power_set_allocation)
from .scenarios import ProbabilityVector, ScenarioPanel
from .solver import SolverConfig, relative_entropy, solve
from .views import View, compile, view_panel_for

ViewGroups = Sequence[Tuple[str, float, List[View]]]


def user_posterior(panel: ScenarioPanel, prior: ProbabilityVector,
                   views: Sequence[View],
                   config: Optional[SolverConfig] = None
                   ) -> Tuple[ProbabilityVector, dict]:
    """Full-confidence posterior for one user's view list plus diagnostics."""
    if not views:
        result = solve(normalization_only(len(prior)), prior, config)
        return result.posterior, result.diagnostics()
    view_panel = view_panel_for(panel, views)
    if all(v.confidence >= 1.0 for v in views):
        result = solve(compile(views, view_panel, prior), prior, config)
        return result.posterior, result.diagnostics()

    allocation = power_set_allocation(
        [(str(i), v.confidence) for i, v in enumerate(views)])
    subset_posteriors = {}
    subset_diags = {}
    for subset, mass in allocation.subsets:
        if mass == 0.0 or not subset:
            continue
        chosen = [views[int(i)] for i in sorted(subset, key=int)]
        result = solve(compile(chosen, view_panel, prior), prior, config)
        subset_posteriors[subset] = result.posterior
        subset_diags["{" + ",".join(sorted(subset, key=int)) + "}"] = \
            result.diagnostics()
    blended = posterior_from_power_set(allocation, subset_posteriors, prior)
    diag = {
        "converged": all(d["converged"] for d in subset_diags.values()),
        "iterations": max((d["iterations"] for d in subset_diags.values()),
                          default=0),
        "max_constraint_violation": max(
            (d["max_constraint_violation"] for d in subset_diags.values()),
            default=0.0),
        "complementary_slackness": max(
            (d["complementary_slackness"] for d in subset_diags.values()),
            default=0.0),
        "clamped": sum(d["clamped"] for d in subset_diags.values()),
        "relative_entropy": relative_entropy(blended, prior),
        "subsets": subset_diags,
    }
    return blended, diag


def solve_view_groups(panel: ScenarioPanel, prior: ProbabilityVector,
                      groups: ViewGroups,
                      config: Optional[SolverConfig] = None):
    """Per-user posteriors pooled by overall confidence.

    Returns (pooled posterior, per-user posteriors, per-user diagnostics).
    """
    posteriors: Dict[str, ProbabilityVector] = {}
    diagnostics: Dict[str, dict] = {}
    users = []
    for user_id, confidence, views in groups:
        posterior, diag = user_posterior(panel, prior, views, config)
        posteriors[user_id] = posterior
        diagnostics[user_id] = diag
        users.append(UserConfidence(user_id=user_id,
                                    overall_confidence=confidence))
    pooled = pool_multi(posteriors, ConfidenceSpec(tuple(users)), prior)
    return pooled, posteriors, diagnostics
