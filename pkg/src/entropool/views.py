"""Compilation of market views into linear constraints on scenario probabilities.

Each view is a statement about a feature (location, ranking, volatility,
correlation, tail quantile, tail codependence, or full moment sets) of one
or more derived columns.  Every kind compiles into rows over the posterior
probability vector; >= rows are stored negated so the emitted system is
always ``F p <= f`` / ``H p = h`` with the normalization row built in.

Reference values (means, standard deviations, quantiles) are always
resolved under the PRIOR probabilities, never the posterior being solved
for.  Scenarios exactly at a value threshold are excluded from indicator
rows; copula-rank thresholds are inclusive so a joint threshold of one
selects every scenario.
"""

import json
from dataclasses import dataclass, field
from itertools import combinations, combinations_with_replacement
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .constraints import ConstraintBuilder, LinearConstraintSet
from .expressions import evaluate_view_columns
from .scenarios import (ProbabilityVector, ScenarioPanel, ViewPanel,
                        empirical_copula_ranks, weighted_mean, weighted_quantile,
                        weighted_std)


class ViewCompileError(ValueError):
    """A view cannot be expressed as valid constraint rows on this panel."""


class ViewSchemaError(ValueError):
    """A view JSON payload violates the schema."""


VIEW_KINDS = (
    "MeanLocation", "MedianLocation", "Ranking", "VolatilityStd",
    "VolatilityQuantileRange", "CorrelationStress", "QuantileTail",
    "TailCodependence", "MarginalMoments", "CopulaMoments", "JointMoments",
)
MOMENT_KINDS = ("MarginalMoments", "CopulaMoments", "JointMoments")
TARGET_MODES = ("Absolute", "KappaSigma", "QuantileShift", "ReferenceMultiple")

_DIRECTIONS = {"<=": "<=", ">=": ">=", "=": "=", "==": "=",
               "≤": "<=", "≥": ">="}


@dataclass(frozen=True)
class TargetSpec:
    """How a view's numeric target is resolved.

    Absolute takes the value verbatim.  KappaSigma resolves to the prior
    mean plus kappa prior standard deviations (kappa of -2/-1/1/2 reads as
    very bearish/bearish/bullish/very bullish).  QuantileShift resolves to
    the prior (1/2 + kappa/5)-tile.  ReferenceMultiple scales the relevant
    prior reference quantity (standard deviation, tail mass, ...) by kappa.
    """

    mode: str
    value: float

    def __post_init__(self):
        if self.mode not in TARGET_MODES:
            raise ViewSchemaError(f"unknown target mode {self.mode!r}")
        value = float(self.value)
        if not np.isfinite(value):
            raise ViewSchemaError("target value must be finite")
        if self.mode == "QuantileShift" and not abs(value) < 2.5:
            raise ViewSchemaError(
                "QuantileShift kappa must satisfy |kappa| < 2.5 so the tile stays in (0, 1)")
        object.__setattr__(self, "value", value)


@dataclass(frozen=True, eq=False)
class View:
    """One view statement over derived columns of the scenario panel.

    ``columns`` holds column expressions (or labels of a prebuilt view
    panel).  ``level`` carries the extra scalar some kinds need: the tail
    level u for QuantileTail, the half-width gamma for
    VolatilityQuantileRange, and the joint thresholds for TailCodependence.
    Moment-matching kinds carry their target sample in-memory only.
    """

    kind: str
    columns: Tuple[str, ...]
    direction: str = "="
    target: Optional[TargetSpec] = None
    order: Optional[int] = None
    level: Optional[Tuple[float, ...]] = None
    confidence: float = 1.0
    target_sample: Optional[np.ndarray] = None
    target_weights: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in VIEW_KINDS:
            raise ViewSchemaError(f"unknown view kind {self.kind!r}")
        object.__setattr__(self, "columns", tuple(self.columns))
        if not self.columns:
            raise ViewSchemaError("a view needs at least one column")
        direction = _DIRECTIONS.get(self.direction)
        if direction is None:
            raise ViewSchemaError(f"unknown direction {self.direction!r}")
        object.__setattr__(self, "direction", direction)
        if not 0.0 <= self.confidence <= 1.0:
            raise ViewSchemaError("confidence must lie in [0, 1]")
        if self.kind == "Ranking":
            if len(self.columns) < 2:
                raise ViewSchemaError("ranking views need at least two columns")
            if self.target is not None:
                raise ViewSchemaError("ranking views take no target")
        if self.kind == "CorrelationStress" and len(self.columns) != 2:
            raise ViewSchemaError("correlation stress views take exactly two columns")
        if self.kind in MOMENT_KINDS:
            if self.order is None or int(self.order) < 1:
                raise ViewSchemaError(f"{self.kind} views need order >= 1")
            object.__setattr__(self, "order", int(self.order))
        if self.level is not None:
            level = tuple(float(u) for u in np.atleast_1d(self.level))
            object.__setattr__(self, "level", level)


Row = Tuple[np.ndarray, str, float]


def _resolve_location_target(target: TargetSpec, column: np.ndarray,
                             prior: ProbabilityVector) -> float:
    if target.mode == "Absolute":
        return target.value
    if target.mode == "KappaSigma":
        sigma = weighted_std(column, prior)
        if sigma == 0.0:
            raise ViewCompileError("KappaSigma target on a constant column")
        return weighted_mean(column, prior) + target.value * sigma
    if target.mode == "QuantileShift":
        return weighted_quantile(column, prior, 0.5 + target.value / 5.0)
    raise ViewCompileError(
        f"target mode {target.mode!r} is not valid for location views")


def compile_mean_location(view: View, panel: ViewPanel,
                          prior: ProbabilityVector) -> List[Row]:
    column = panel.column(view.columns[0])
    if view.target is None:
        raise ViewCompileError("mean views need a target")
    rhs = _resolve_location_target(view.target, column, prior)
    return [(column, view.direction, rhs)]


def compile_median_location(view: View, panel: ViewPanel,
                            prior: ProbabilityVector) -> List[Row]:
    column = panel.column(view.columns[0])
    if view.target is None:
        raise ViewCompileError("median views need a target")
    threshold = _resolve_location_target(view.target, column, prior)
    rows: List[Row] = []
    if view.direction in (">=", "="):
        below = (column < threshold).astype(float)
        if not below.any():
            raise ViewCompileError(
                "median threshold at or below the column minimum selects no scenario")
        rows.append((below, "<=", 0.5))
    if view.direction in ("<=", "="):
        above = (column > threshold).astype(float)
        if not above.any():
            raise ViewCompileError(
                "median threshold at or above the column maximum selects no scenario")
        rows.append((above, "<=", 0.5))
    return rows


def compile_ranking(view: View, panel: ViewPanel) -> List[Row]:
    rows: List[Row] = []
    for first, second in zip(view.columns, view.columns[1:]):
        difference = panel.column(first) - panel.column(second)
        if not np.any(difference != 0.0):
            raise ViewCompileError(
                f"ranking columns {first!r} and {second!r} are identical")
        rows.append((difference, ">=", 0.0))
    return rows


def compile_volatility_std(view: View, panel: ViewPanel,
                           prior: ProbabilityVector) -> List[Row]:
    column = panel.column(view.columns[0])
    if view.target is None:
        raise ViewCompileError("volatility views need a target")
    if view.target.mode == "Absolute":
        sigma_target = view.target.value
    elif view.target.mode == "ReferenceMultiple":
        sigma_target = view.target.value * weighted_std(column, prior)
    else:
        raise ViewCompileError(
            f"target mode {view.target.mode!r} is not valid for volatility views")
    mean = weighted_mean(column, prior)
    return [(column * column, view.direction, mean * mean + sigma_target ** 2)]


def compile_volatility_quantile_range(view: View, panel: ViewPanel,
                                      prior: ProbabilityVector) -> List[Row]:
    column = panel.column(view.columns[0])
    if view.level is None or len(view.level) != 1:
        raise ViewCompileError("quantile-range volatility views need a level gamma")
    gamma = view.level[0]
    if not 0.0 < gamma < 0.5:
        raise ViewCompileError(f"gamma must lie in (0, 1/2), got {gamma}")
    if view.target is None or view.target.mode != "ReferenceMultiple":
        raise ViewCompileError(
            "quantile-range volatility views scale the prior range: use ReferenceMultiple")
    kappa = view.target.value
    if kappa * gamma >= 0.5 or kappa <= 0.0:
        raise ViewCompileError(
            f"resolved tiles collapse: kappa*gamma = {kappa * gamma!r} must lie in (0, 1/2)")
    lower_tile = weighted_quantile(column, prior, 0.5 - kappa * gamma)
    upper_tile = weighted_quantile(column, prior, 0.5 + kappa * gamma)
    below = (column < lower_tile).astype(float)
    above = (column > upper_tile).astype(float)
    if not below.any() or not above.any():
        raise ViewCompileError("resolved tiles leave an empty tail indicator")
    return [(below, view.direction, 0.5 - gamma),
            (above, view.direction, 0.5 - gamma)]


def homogeneous_shrinkage(correlation: np.ndarray, rho_identity: float,
                          rho_sample: float, rho_ones: float) -> np.ndarray:
    """Correlation target rho1*I + rho2*C + rho3*11'; rhos >= 0 summing to one."""
    rhos = np.array([rho_identity, rho_sample, rho_ones], dtype=float)
    if np.any(rhos < 0.0) or abs(float(rhos.sum()) - 1.0) > 1e-12:
        raise ValueError("shrinkage weights must be nonnegative and sum to one")
    correlation = np.asarray(correlation, dtype=float)
    k = correlation.shape[0]
    return (rho_identity * np.eye(k) + rho_sample * correlation
            + rho_ones * np.ones((k, k)))


def compile_correlation_stress(view: View, panel: ViewPanel,
                               prior: ProbabilityVector,
                               anchor: bool = True) -> List[Row]:
    """Cross-moment row hitting the target correlation.

    The bare cross-moment row fixes only E[v_k v_l]; with ``anchor`` (the
    default) four extra equality rows pin both means and second moments to
    their prior values so the attained correlation exactly equals the target.
    """
    if view.direction != "=":
        raise ViewCompileError("correlation stress views must be equalities")
    if view.target is None or view.target.mode != "Absolute":
        raise ViewCompileError("correlation stress views need an Absolute target")
    rho = view.target.value
    if not -1.0 <= rho <= 1.0:
        raise ViewCompileError(f"target correlation {rho} outside [-1, 1]")
    col_k = panel.column(view.columns[0])
    col_l = panel.column(view.columns[1])
    mean_k, mean_l = weighted_mean(col_k, prior), weighted_mean(col_l, prior)
    std_k, std_l = weighted_std(col_k, prior), weighted_std(col_l, prior)
    if std_k == 0.0 or std_l == 0.0:
        raise ViewCompileError("correlation stress on a constant column")
    rows: List[Row] = [
        (col_k * col_l, "=", mean_k * mean_l + std_k * std_l * rho)]
    if anchor:
        rows.append((col_k, "=", mean_k))
        rows.append((col_l, "=", mean_l))
        rows.append((col_k * col_k, "=", mean_k ** 2 + std_k ** 2))
        rows.append((col_l * col_l, "=", mean_l ** 2 + std_l ** 2))
    return rows


def compile_quantile_tail(view: View, panel: ViewPanel,
                          prior: ProbabilityVector) -> List[Row]:
    column = panel.column(view.columns[0])
    if view.level is None or len(view.level) != 1:
        raise ViewCompileError("quantile tail views need a tail level u")
    u = view.level[0]
    if not 0.0 < u < 1.0:
        raise ViewCompileError(f"tail level must lie in (0, 1), got {u}")
    if view.target is None:
        threshold = weighted_quantile(column, prior, u)
    elif view.target.mode == "Absolute":
        threshold = view.target.value
    else:
        raise ViewCompileError(
            "quantile tail views take an Absolute threshold or the prior quantile")
    below = (column < threshold).astype(float)
    if not below.any():
        raise ViewCompileError("tail threshold below the column minimum")
    # "posterior u-quantile >= t" caps the mass below t at u, and conversely
    if view.direction == ">=":
        return [(below, "<=", u)]
    if view.direction == "<=":
        return [(below, ">=", u)]
    return [(below, "=", u)]


def compile_tail_codependence(view: View, panel: ViewPanel,
                              prior: ProbabilityVector) -> List[Row]:
    if view.level is None:
        raise ViewCompileError("tail codependence views need joint thresholds")
    thresholds = np.asarray(view.level, dtype=float)
    if thresholds.shape == (1,):
        thresholds = np.full(len(view.columns), thresholds[0])
    if thresholds.shape != (len(view.columns),):
        raise ViewCompileError("one joint threshold per view column required")
    if np.any(thresholds <= 0.0) or np.any(thresholds > 1.0):
        raise ViewCompileError("joint thresholds must lie in (0, 1]")
    sub = ViewPanel(list(view.columns),
                    np.column_stack([panel.column(c) for c in view.columns]))
    ranks = empirical_copula_ranks(sub)
    joint = np.all(ranks <= thresholds[np.newaxis, :], axis=1).astype(float)
    if not joint.any():
        raise ViewCompileError("joint tail indicator selects no scenario")
    if view.target is None:
        raise ViewCompileError("tail codependence views need a target")
    if view.target.mode == "Absolute":
        rhs = view.target.value
    elif view.target.mode == "ReferenceMultiple":
        rhs = view.target.value * float(prior.weights @ joint)
    else:
        raise ViewCompileError(
            "tail codependence targets are Absolute or ReferenceMultiple")
    return [(joint, view.direction, rhs)]


def _moment_target_sample(view: View, prior: ProbabilityVector,
                          n_columns: int) -> Tuple[np.ndarray, np.ndarray]:
    if view.target_sample is None:
        raise ViewCompileError(f"{view.kind} views need a target sample")
    sample = np.asarray(view.target_sample, dtype=float)
    if sample.ndim == 1:
        sample = sample[:, np.newaxis]
    if sample.shape[1] != n_columns:
        raise ViewCompileError(
            f"target sample has {sample.shape[1]} columns for {n_columns} view columns")
    if view.target_weights is not None:
        weights = np.asarray(view.target_weights, dtype=float)
    else:
        if sample.shape[0] != len(prior):
            raise ViewCompileError(
                "target sample length differs from J: supply target_weights")
        weights = prior.weights
    if weights.shape != (sample.shape[0],):
        raise ViewCompileError("target weights do not match the target sample")
    return sample, weights


def compile_moment_matching(view: View, panel: ViewPanel,
                            prior: ProbabilityVector,
                            max_rows: int = 200) -> List[Row]:
    """Equality rows matching posterior moments of the working columns.

    MarginalMoments matches each column's raw moments up to ``order`` to the
    target sample's.  JointMoments matches every cross moment (all monomials
    of total degree <= order).  CopulaMoments works on the empirical copula
    ranks: cross products of distinct columns are matched to the target
    copula sample while marginal rank moments are pinned to 1/(m+1), the
    moments of the uniform distribution.
    """
    order = view.order or 1
    k = len(view.columns)
    working = np.column_stack([panel.column(c) for c in view.columns])
    rows: List[Row] = []

    if view.kind == "CopulaMoments":
        working = empirical_copula_ranks(ViewPanel(list(view.columns), working))
        count = k * order + sum(
            len(list(combinations(range(k), d))) for d in range(2, order + 1))
        if count > max_rows:
            raise ViewCompileError(f"{count} moment rows exceed the cap {max_rows}")
        for c in range(k):
            for power in range(1, order + 1):
                rows.append((working[:, c] ** power, "=", 1.0 / (power + 1)))
        if order >= 2:
            sample, weights = _moment_target_sample(view, prior, k)
            for degree in range(2, order + 1):
                for combo in combinations(range(k), degree):
                    coeffs = np.prod(working[:, combo], axis=1)
                    rhs = float(weights @ np.prod(sample[:, combo], axis=1))
                    rows.append((coeffs, "=", rhs))
        return rows

    sample, weights = _moment_target_sample(view, prior, k)
    if view.kind == "MarginalMoments":
        if k * order > max_rows:
            raise ViewCompileError(f"{k * order} moment rows exceed the cap {max_rows}")
        for c in range(k):
            for power in range(1, order + 1):
                rows.append((working[:, c] ** power, "=",
                             float(weights @ sample[:, c] ** power)))
        return rows

    # JointMoments: every monomial of total degree 1..order
    count = sum(len(list(combinations_with_replacement(range(k), d)))
                for d in range(1, order + 1))
    if count > max_rows:
        raise ViewCompileError(f"{count} moment rows exceed the cap {max_rows}")
    for degree in range(1, order + 1):
        for combo in combinations_with_replacement(range(k), degree):
            coeffs = np.prod(working[:, combo], axis=1)
            rhs = float(weights @ np.prod(sample[:, combo], axis=1))
            rows.append((coeffs, "=", rhs))
    return rows


def compile(views: Sequence[View], view_panel: ViewPanel,
            prior: ProbabilityVector, *, anchor_correlation: bool = True,
            max_moment_rows: int = 200) -> LinearConstraintSet:
    """Compile a view list into the full constraint system.

    The result always contains the normalization row; it is deterministic,
    so identical inputs produce bit-identical systems.
    """
    if view_panel.n_scenarios != len(prior):
        raise ViewCompileError("view panel and prior disagree on J")
    builder = ConstraintBuilder(len(prior))
    for index, view in enumerate(views):
        try:
            if view.kind == "MeanLocation":
                rows = compile_mean_location(view, view_panel, prior)
            elif view.kind == "MedianLocation":
                rows = compile_median_location(view, view_panel, prior)
            elif view.kind == "Ranking":
                rows = compile_ranking(view, view_panel)
            elif view.kind == "VolatilityStd":
                rows = compile_volatility_std(view, view_panel, prior)
            elif view.kind == "VolatilityQuantileRange":
                rows = compile_volatility_quantile_range(view, view_panel, prior)
            elif view.kind == "CorrelationStress":
                rows = compile_correlation_stress(view, view_panel, prior,
                                                  anchor=anchor_correlation)
            elif view.kind == "QuantileTail":
                rows = compile_quantile_tail(view, view_panel, prior)
            elif view.kind == "TailCodependence":
                rows = compile_tail_codependence(view, view_panel, prior)
            elif view.kind in MOMENT_KINDS:
                rows = compile_moment_matching(view, view_panel, prior,
                                               max_rows=max_moment_rows)
            else:  # pragma: no cover - kinds validated at construction
                raise ViewCompileError(f"unhandled kind {view.kind!r}")
            for coeffs, direction, rhs in rows:
                builder.add(coeffs, direction, rhs)
        except ValueError as exc:
            raise ViewCompileError(f"view {index} ({view.kind}): {exc}") from exc
    return builder.build()


def view_panel_for(panel: ScenarioPanel, views: Sequence[View]) -> ViewPanel:
    """Evaluate the distinct column expressions referenced by the views."""
    expressions: List[str] = []
    for view in views:
        for column in view.columns:
            if column not in expressions:
                expressions.append(column)
    return evaluate_view_columns(panel, expressions)


# ---------------------------------------------------------------------------
# JSON view files
# ---------------------------------------------------------------------------

_VIEW_KEYS = {"kind", "columns", "direction", "target", "order", "confidence",
              "level"}
_TARGET_KEYS = {"mode", "value"}
_USER_KEYS = {"user_id", "overall_confidence", "views"}


def view_from_json(obj: dict) -> View:
    if not isinstance(obj, dict):
        raise ViewSchemaError("each view must be a JSON object")
    unknown = set(obj) - _VIEW_KEYS
    if unknown:
        raise ViewSchemaError(f"unknown view fields {sorted(unknown)}")
    if "kind" not in obj or "columns" not in obj:
        raise ViewSchemaError("views need 'kind' and 'columns'")
    if obj["kind"] in MOMENT_KINDS:
        raise ViewSchemaError(
            f"{obj['kind']} views carry a target sample and cannot be loaded from files")
    target = None
    if obj.get("target") is not None:
        tgt = obj["target"]
        if not isinstance(tgt, dict) or set(tgt) - _TARGET_KEYS or "mode" not in tgt:
            raise ViewSchemaError("target must be an object {mode, value}")
        target = TargetSpec(mode=tgt["mode"], value=float(tgt.get("value", 0.0)))
    columns = obj["columns"]
    if isinstance(columns, str) or not isinstance(columns, (list, tuple)):
        raise ViewSchemaError("'columns' must be an array of expression strings")
    try:
        return View(
            kind=obj["kind"],
            columns=tuple(str(c) for c in columns),
            direction=obj.get("direction", "="),
            target=target,
            order=obj.get("order"),
            level=obj.get("level"),
            confidence=float(obj.get("confidence", 1.0)),
        )
    except (TypeError, ValueError) as exc:
        raise ViewSchemaError(str(exc)) from exc


def views_from_json(payload) -> List[Tuple[str, float, List[View]]]:
    """Parse a view file into (user_id, overall_confidence, views) groups.

    Two shapes are accepted: a bare array of view objects (one anonymous
    full-confidence user) or {"users": [{user_id, overall_confidence,
    views}, ...]}.
    """
    if isinstance(payload, list):
        return [("user", 1.0, [view_from_json(v) for v in payload])]
    if isinstance(payload, dict) and set(payload) == {"users"}:
        groups = []
        for user in payload["users"]:
            if not isinstance(user, dict) or set(user) - _USER_KEYS:
                raise ViewSchemaError("user entries allow only "
                                      f"{sorted(_USER_KEYS)}")
            if "user_id" not in user or "views" not in user:
                raise ViewSchemaError("user entries need 'user_id' and 'views'")
            confidence = float(user.get("overall_confidence", 1.0))
            if not 0.0 <= confidence <= 1.0:
                raise ViewSchemaError("overall_confidence must lie in [0, 1]")
            groups.append((str(user["user_id"]), confidence,
                           [view_from_json(v) for v in user["views"]]))
        if not groups:
            raise ViewSchemaError("'users' must not be empty")
        return groups
    raise ViewSchemaError(
        "view files are an array of views or an object {'users': [...]}")


def load_views(path) -> List[Tuple[str, float, List[View]]]:
    with open(path, "r", encoding="utf-8") as handle:
        try:
            payload = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ViewSchemaError(f"{path}: {exc}") from exc
    return views_from_json(payload)


def view_to_json(view: View) -> dict:
    obj: Dict[str, object] = {
        "kind": view.kind,
        "columns": list(view.columns),
        "direction": view.direction,
        "confidence": view.confidence,
    }
    if view.target is not None:
        obj["target"] = {"mode": view.target.mode, "value": view.target.value}
    if view.order is not None:
        obj["order"] = view.order
    if view.level is not None:
        obj["level"] = list(view.level) if len(view.level) > 1 else view.level[0]
    return obj
