"""Scenario panels, probability vectors and probability-weighted statistics.

A scenario panel is a J x N matrix of joint risk-factor realizations; a
probability vector assigns a weight to each of the J rows.  Every statistic
in this module is weighted by such a vector, so the same panel serves both
the reference model (typically uniform weights) and any reweighted posterior.

Conventions baked in here and relied on by the view compiler and tests:

* quantiles use the left order statistic under the prefix-sum rule: the
  level-u quantile is the sorted value at the largest index I whose
  cumulative weight is <= u (smallest order statistic if even the first
  weight exceeds u); no interpolation;
* rank ties are broken by original row index;
* the CVaR tail holds the floor((1-gamma)*J) smallest p&l entries and the
  reported CVaR is a positive loss.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from ._kernels import weighted_mean_var


class PanelFormatError(ValueError):
    """A scenario panel or probability file violates its format contract."""


def _frozen_array(values, dtype=float, ndim=None) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    if ndim is not None and arr.ndim != ndim:
        raise ValueError(f"expected a {ndim}-d array, got ndim={arr.ndim}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ScenarioPanel:
    """J x N panel of joint risk-factor scenarios.

    Units are per factor (log-changes, vol-point changes, rate changes);
    this container does not interpret them.  Immutable after construction.
    """

    factor_names: List[str]
    data: np.ndarray

    def __post_init__(self):
        data = _frozen_array(self.data, ndim=2)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "factor_names", list(self.factor_names))
        j, n = data.shape
        if j < 2 or n < 1:
            raise PanelFormatError(f"panel must be at least 2 x 1, got {j} x {n}")
        if len(self.factor_names) != n:
            raise PanelFormatError(
                f"{len(self.factor_names)} factor names for {n} columns")
        if len(set(self.factor_names)) != n:
            raise PanelFormatError("factor names must be unique")
        if not np.all(np.isfinite(data)):
            raise PanelFormatError("panel contains non-finite entries")

    @property
    def n_scenarios(self) -> int:
        return self.data.shape[0]

    @property
    def n_factors(self) -> int:
        return self.data.shape[1]

    def column(self, name: str) -> np.ndarray:
        try:
            idx = self.factor_names.index(name)
        except ValueError:
            raise KeyError(f"unknown factor {name!r}") from None
        return self.data[:, idx]

    def with_columns(self, names: Sequence[str], columns: np.ndarray) -> "ScenarioPanel":
        """Panel extended with extra columns (e.g. security prices)."""
        columns = np.atleast_2d(np.asarray(columns, dtype=float))
        if columns.shape[0] != self.n_scenarios:
            columns = columns.T
        return ScenarioPanel(self.factor_names + list(names),
                             np.hstack([self.data, columns]))


@dataclass(frozen=True)
class ProbabilityVector:
    """Nonnegative weights over J scenarios summing to one."""

    weights: np.ndarray

    def __post_init__(self):
        w = _frozen_array(self.weights, ndim=1)
        object.__setattr__(self, "weights", w)
        if not np.all(np.isfinite(w)):
            raise ValueError("probability weights must be finite")
        if np.any(w < 0):
            raise ValueError("probability weights must be nonnegative")
        total = float(w.sum())
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"probability weights sum to {total!r}, not 1")

    @classmethod
    def uniform(cls, j: int) -> "ProbabilityVector":
        return cls(np.full(j, 1.0 / j))

    @classmethod
    def normalized(cls, weights, tolerance: float = 1e-9) -> "ProbabilityVector":
        """Build from weights whose sum may carry floating drift.

        Drift beyond ``tolerance`` is an error, never silently repaired.
        """
        w = np.asarray(weights, dtype=float)
        total = float(w.sum())
        if abs(total - 1.0) > tolerance:
            raise ValueError(
                f"weights sum to {total!r}; drift exceeds tolerance {tolerance}")
        if abs(total - 1.0) <= 1e-12:
            return cls(w)  # already satisfies the invariant; keep bytes intact
        return cls(w / total)

    def __len__(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class ViewPanel:
    """J x K panel of view variables: columns are functions of the scenarios."""

    column_labels: List[str]
    columns: np.ndarray

    def __post_init__(self):
        cols = _frozen_array(self.columns, ndim=2)
        object.__setattr__(self, "columns", cols)
        object.__setattr__(self, "column_labels", list(self.column_labels))
        if len(self.column_labels) != cols.shape[1]:
            raise ValueError("one label per column required")
        if not np.all(np.isfinite(cols)):
            raise ValueError("view panel contains non-finite entries")

    @property
    def n_scenarios(self) -> int:
        return self.columns.shape[0]

    @property
    def n_columns(self) -> int:
        return self.columns.shape[1]

    def column(self, label: str) -> np.ndarray:
        try:
            idx = self.column_labels.index(label)
        except ValueError:
            raise KeyError(f"unknown view column {label!r}") from None
        return self.columns[:, idx]


@dataclass(frozen=True)
class WeightedStatistics:
    """Summary statistics of one column under a probability vector."""

    mean: float
    std: float
    median: float
    quantiles: Dict[float, float] = field(default_factory=dict)
    cvar: Dict[float, float] = field(default_factory=dict)


def _check_lengths(column: np.ndarray, p: ProbabilityVector) -> np.ndarray:
    column = np.asarray(column, dtype=float)
    if column.ndim != 1 or column.shape[0] != len(p):
        raise ValueError(
            f"column length {column.shape} does not match {len(p)} probabilities")
    return column


def weighted_mean(column, p: ProbabilityVector) -> float:
    """Probability-weighted sample mean of one column."""
    column = _check_lengths(column, p)
    m, _ = weighted_mean_var(column, p.weights)
    return m


def _sqrt_nonneg(value: float) -> float:
    # weighted variances can come out at -1e-18 from rounding
    return float(np.sqrt(max(value, 0.0)))


def weighted_std(column, p: ProbabilityVector) -> float:
    """Probability-weighted sample standard deviation (no ddof correction)."""
    column = _check_lengths(column, p)
    _, var = weighted_mean_var(column, p.weights)
    return _sqrt_nonneg(var)


def weighted_quantile(column, p: ProbabilityVector, level: float) -> float:
    """Left-order-statistic quantile under the prefix-sum rule.

    Returns the sorted value at the largest index I such that the cumulative
    weight through I is <= level.  When even the first sorted weight exceeds
    the level, the smallest order statistic is returned.
    """
    if not 0.0 < level < 1.0:
        raise ValueError(f"quantile level must be in (0, 1), got {level}")
    column = _check_lengths(column, p)
    order = np.argsort(column, kind="stable")
    cumulative = np.cumsum(p.weights[order])
    # index of the last prefix with cumulative weight <= level; the 1e-12
    # slack keeps accumulated rounding in the prefix sums from flipping a
    # knife-edge comparison that is exact in real arithmetic
    position = int(np.searchsorted(cumulative, level + 1e-12, side="right")) - 1
    if position < 0:
        position = 0
    return float(column[order[position]])


def weighted_median(column, p: ProbabilityVector) -> float:
    return weighted_quantile(column, p, 0.5)


def weighted_correlation(column_a, column_b, p: ProbabilityVector) -> float:
    """Probability-weighted correlation of two columns.

    Computed as (E[ab] - E[a]E[b]) / (std_a * std_b); raises when either
    column is degenerate under p.
    """
    a = _check_lengths(column_a, p)
    b = _check_lengths(column_b, p)
    mean_a, var_a = weighted_mean_var(a, p.weights)
    mean_b, var_b = weighted_mean_var(b, p.weights)
    std_a, std_b = _sqrt_nonneg(var_a), _sqrt_nonneg(var_b)
    if std_a == 0.0 or std_b == 0.0:
        raise ValueError("correlation undefined: zero standard deviation")
    cross = float(p.weights @ (a * b))
    return (cross - mean_a * mean_b) / (std_a * std_b)


def weighted_correlation_matrix(panel: ViewPanel, p: ProbabilityVector) -> np.ndarray:
    k = panel.n_columns
    corr = np.eye(k)
    for i in range(k):
        for j in range(i + 1, k):
            corr[i, j] = corr[j, i] = weighted_correlation(
                panel.columns[:, i], panel.columns[:, j], p)
    return corr


def empirical_copula_ranks(panel: ViewPanel) -> np.ndarray:
    """Normalized within-column ranks in (0, 1], ties broken by row index.

    Entry (j, k) is r/J where the j-th scenario holds the r-th smallest
    value of column k (stable order, so earlier rows rank lower on ties).
    """
    j_count = panel.n_scenarios
    ranks = np.empty_like(panel.columns)
    positions = np.arange(1, j_count + 1, dtype=float) / j_count
    for k in range(panel.n_columns):
        order = np.argsort(panel.columns[:, k], kind="stable")
        ranks[order, k] = positions
    return ranks


def weighted_cvar(pnl, p: ProbabilityVector, gamma: float) -> float:
    """Expected shortfall at tail level gamma, reported as a positive loss.

    The tail is the floor((1-gamma)*J) smallest p&l entries (ties broken by
    row index); the result is minus their probability-weighted average.
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must be in (0, 1), got {gamma}")
    pnl = _check_lengths(pnl, p)
    tail_size = int(np.floor((1.0 - gamma) * len(p)))
    if tail_size < 1:
        raise ValueError(
            f"empty tail: (1-gamma)*J = {(1.0 - gamma) * len(p):.3g} floors below 1")
    order = np.argsort(pnl, kind="stable")[:tail_size]
    tail_mass = float(p.weights[order].sum())
    if tail_mass <= 0.0:
        raise ValueError("tail scenarios carry zero probability")
    return -float(p.weights[order] @ pnl[order]) / tail_mass


def column_statistics(column, p: ProbabilityVector,
                      quantile_levels: Sequence[float] = (0.05, 0.25, 0.5, 0.75, 0.95),
                      cvar_levels: Sequence[float] = ()) -> WeightedStatistics:
    """Bundle of weighted statistics for reporting endpoints."""
    column = _check_lengths(column, p)
    quantiles = {float(u): weighted_quantile(column, p, u) for u in quantile_levels}
    cvar = {float(g): weighted_cvar(column, p, g) for g in cvar_levels}
    return WeightedStatistics(
        mean=weighted_mean(column, p),
        std=weighted_std(column, p),
        median=weighted_median(column, p),
        quantiles=quantiles,
        cvar=cvar,
    )


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------

def load_panel_csv(path) -> ScenarioPanel:
    """Read a scenario panel from CSV: header row of factor names, then rows.

    UTF-8, '.' decimal separator.  Any non-numeric or non-finite entry is a
    load error; there is no missing-data handling.
    """
    with open(path, "r", encoding="utf-8") as handle:
        header = handle.readline().strip()
        if not header:
            raise PanelFormatError(f"{path}: empty panel file")
        names = [token.strip() for token in header.split(",")]
        rows = []
        for line_no, line in enumerate(handle, start=2):
            line = line.strip()
            if not line:
                continue
            tokens = line.split(",")
            if len(tokens) != len(names):
                raise PanelFormatError(
                    f"{path}:{line_no}: expected {len(names)} fields, got {len(tokens)}")
            try:
                rows.append([float(token) for token in tokens])
            except ValueError as exc:
                raise PanelFormatError(f"{path}:{line_no}: {exc}") from None
    if not rows:
        raise PanelFormatError(f"{path}: no scenario rows")
    try:
        return ScenarioPanel(names, np.array(rows, dtype=float))
    except (PanelFormatError, ValueError) as exc:
        raise PanelFormatError(f"{path}: {exc}") from None


def save_panel_csv(panel: ScenarioPanel, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(",".join(panel.factor_names) + "\n")
        for row in panel.data:
            handle.write(",".join(format(v, ".17g") for v in row) + "\n")


def load_probabilities(path, expected_length: Optional[int] = None) -> ProbabilityVector:
    """Read a sidecar probability file: one weight per line.

    Weights must satisfy the probability-vector invariants after parsing;
    a sum off by more than 1e-9 is an error (renormalization is not silent).
    """
    with open(path, "r", encoding="utf-8") as handle:
        try:
            weights = [float(line.strip()) for line in handle if line.strip()]
        except ValueError as exc:
            raise PanelFormatError(f"{path}: {exc}") from None
    if expected_length is not None and len(weights) != expected_length:
        raise PanelFormatError(
            f"{path}: {len(weights)} weights for {expected_length} scenarios")
    try:
        return ProbabilityVector.normalized(weights, tolerance=1e-9)
    except ValueError as exc:
        raise PanelFormatError(f"{path}: {exc}") from None


def save_probabilities(p: ProbabilityVector, path) -> None:
    """Write one weight per line with 17 significant digits (lossless round-trip)."""
    with open(path, "w", encoding="utf-8") as handle:
        for w in p.weights:
            handle.write(format(w, ".17g") + "\n")
