"""Confidence-weighted blending of prior and posterior probability vectors.

Less-than-full confidence shrinks a posterior back toward the prior by
convex combination.  Multiple users blend by their overall confidences with
the residual mass on the prior.  Different confidences across one user's
views map to a probability allocation over subsets of views: sorting the
confidence levels descending, the subset holding all views at or above a
level gets the gap down to the next level, and the empty set gets one minus
the largest confidence.  Each view's total activation mass then equals its
stated confidence.
"""

from dataclasses import dataclass
from typing import FrozenSet, List, Mapping, Sequence, Tuple

import numpy as np

from .scenarios import ProbabilityVector


@dataclass(frozen=True)
class UserConfidence:
    user_id: str
    overall_confidence: float
    view_confidences: Tuple[Tuple[str, float], ...] = ()

    def __post_init__(self):
        if not 0.0 <= self.overall_confidence <= 1.0:
            raise ValueError("overall confidence must lie in [0, 1]")
        for view_id, c in self.view_confidences:
            if not 0.0 <= c <= 1.0:
                raise ValueError(f"view {view_id!r} confidence {c} outside [0, 1]")


@dataclass(frozen=True)
class ConfidenceSpec:
    users: Tuple[UserConfidence, ...]

    def __post_init__(self):
        total = sum(u.overall_confidence for u in self.users)
        if total > 1.0 + 1e-12:
            raise ValueError(f"user confidences sum to {total}, exceeding 1")


@dataclass(frozen=True)
class PowerSetAllocation:
    """Probability mass per view subset; masses nonnegative, summing to one."""

    subsets: Tuple[Tuple[FrozenSet[str], float], ...]

    def __post_init__(self):
        total = sum(mass for _, mass in self.subsets)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"subset masses sum to {total}, not 1")
        if any(mass < 0.0 for _, mass in self.subsets):
            raise ValueError("subset masses must be nonnegative")
        labels = [s for s, _ in self.subsets]
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate subsets in allocation")

    def mass(self, subset: FrozenSet[str]) -> float:
        for s, m in self.subsets:
            if s == subset:
                return m
        return 0.0


def _blend(weighted: Sequence[Tuple[float, ProbabilityVector]]) -> ProbabilityVector:
    total = np.zeros(len(weighted[0][1]))
    for weight, vector in weighted:
        total += weight * vector.weights
    return ProbabilityVector.normalized(total, tolerance=1e-9)


def pool_two(prior: ProbabilityVector, posterior: ProbabilityVector,
             c: float) -> ProbabilityVector:
    """Confidence-c blend (1-c)*prior + c*posterior."""
    if not 0.0 <= c <= 1.0:
        raise ValueError(f"confidence must lie in [0, 1], got {c}")
    if len(prior) != len(posterior):
        raise ValueError("probability vectors have different lengths")
    return _blend([(1.0 - c, prior), (c, posterior)])


def pool_multi(posteriors: Mapping[str, ProbabilityVector],
               spec: ConfidenceSpec,
               prior: ProbabilityVector) -> ProbabilityVector:
    """Multi-user blend; the residual 1 - sum(c_s) goes to the prior."""
    weighted: List[Tuple[float, ProbabilityVector]] = []
    residual = 1.0
    for user in spec.users:
        residual -= user.overall_confidence
        if user.overall_confidence == 0.0:
            continue
        if user.user_id not in posteriors:
            raise ValueError(
                f"user {user.user_id!r} has positive confidence but no posterior")
        weighted.append((user.overall_confidence, posteriors[user.user_id]))
    weighted.append((max(residual, 0.0), prior))
    return _blend(weighted)


def power_set_allocation(
        view_confidences: Sequence[Tuple[str, float]]) -> PowerSetAllocation:
    """Comonotone allocation of probability over subsets of views.

    Distinct confidence levels sorted descending c1 > c2 > ...; the subset
    of views with confidence >= ck receives ck - c(k+1) (zero after the
    last level), and the empty set receives 1 - max confidence.  Every view
    then activates with total probability equal to its confidence.
    """
    for view_id, c in view_confidences:
        if not 0.0 <= c <= 1.0:
            raise ValueError(f"view {view_id!r} confidence {c} outside [0, 1]")
    levels = sorted({c for _, c in view_confidences if c > 0.0}, reverse=True)
    subsets: List[Tuple[FrozenSet[str], float]] = []
    for position, level in enumerate(levels):
        next_level = levels[position + 1] if position + 1 < len(levels) else 0.0
        members = frozenset(v for v, c in view_confidences if c >= level)
        subsets.append((members, level - next_level))
    top = levels[0] if levels else 0.0
    subsets.append((frozenset(), 1.0 - top))
    return PowerSetAllocation(tuple(subsets))


def posterior_from_power_set(allocation: PowerSetAllocation,
                             subset_posteriors: Mapping[FrozenSet[str],
                                                        ProbabilityVector],
                             prior: ProbabilityVector) -> ProbabilityVector:
    """Blend subset posteriors by their allocation mass.

    Only subsets with positive mass need a posterior; the empty set always
    maps to the prior.
    """
    weighted: List[Tuple[float, ProbabilityVector]] = []
    for subset, mass in allocation.subsets:
        if mass == 0.0:
            continue
        if not subset:
            weighted.append((mass, prior))
            continue
        if subset not in subset_posteriors:
            raise ValueError(
                f"no posterior supplied for subset {sorted(subset)} with mass {mass}")
        weighted.append((mass, subset_posteriors[subset]))
    if not weighted:
        return prior
    return _blend(weighted)


def skill_confidence(num_past_views: int, view_outcome_correlation: float) -> float:
    """Track-record confidence: grows with seniority and realized view skill.

    This functional form, max(0, corr) * (1 - 1/(1 + n)), is ad hoc; the
    requirement is only monotonicity in both arguments with value in [0, 1].
    """
    if num_past_views < 0:
        raise ValueError("num_past_views must be nonnegative")
    if not -1.0 <= view_outcome_correlation <= 1.0:
        raise ValueError("view/outcome correlation must lie in [-1, 1]")
    return max(0.0, view_outcome_correlation) * (1.0 - 1.0 / (1.0 + num_past_views))
