"""Linear constraint systems over scenario probability vectors.

Views compile into rows of ``F p <= f`` (inequalities, with >= rows stored
negated) and ``H p = h`` (equalities).  The normalization row (all ones,
right-hand side one) is always present in the equality block, so a solver
consuming this type never has to add it.
"""

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np


@dataclass(frozen=True)
class LinearConstraintSet:
    """Inequality pair (F, f) and equality pair (H, h) over length-J vectors."""

    F: np.ndarray
    f: np.ndarray
    H: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        F = np.atleast_2d(np.asarray(self.F, dtype=float))
        H = np.atleast_2d(np.asarray(self.H, dtype=float))
        f = np.atleast_1d(np.asarray(self.f, dtype=float))
        h = np.atleast_1d(np.asarray(self.h, dtype=float))
        if F.size == 0:
            F = F.reshape(0, H.shape[1])
            f = f.reshape(0)
        for name, arr in (("F", F), ("f", f), ("H", H), ("h", h)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"constraint block {name} has non-finite entries")
        if F.shape[0] != f.shape[0] or H.shape[0] != h.shape[0]:
            raise ValueError("constraint matrix/vector row counts disagree")
        if F.shape[0] > 0 and F.shape[1] != H.shape[1]:
            raise ValueError("inequality and equality blocks disagree on J")
        for block in (F, H):
            if block.shape[0] and np.any(np.all(block == 0.0, axis=1)):
                raise ValueError("all-zero constraint row")
        ones = np.all(H == 1.0, axis=1) & (h == 1.0)
        if not np.any(ones):
            raise ValueError("equality block must contain the normalization row")
        for name, arr in (("F", F), ("f", f), ("H", H), ("h", h)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_scenarios(self) -> int:
        return self.H.shape[1]

    @property
    def n_inequalities(self) -> int:
        return self.F.shape[0]

    @property
    def n_equalities(self) -> int:
        return self.H.shape[0]

    @property
    def n_rows(self) -> int:
        return self.n_inequalities + self.n_equalities


class ConstraintBuilder:
    """Accumulates view rows and emits a LinearConstraintSet.

    Directions are "<=", "=" or ">="; >= rows are negated into <= form at
    insertion so the stored system is always in normal form.
    """

    def __init__(self, n_scenarios: int):
        self.j = n_scenarios
        self._ineq: List[Tuple[np.ndarray, float]] = []
        self._eq: List[Tuple[np.ndarray, float]] = [
            (np.ones(n_scenarios), 1.0)]  # normalization row first

    def add(self, coefficients: np.ndarray, direction: str, rhs: float) -> None:
        coefficients = np.asarray(coefficients, dtype=float)
        if coefficients.shape != (self.j,):
            raise ValueError(
                f"constraint row has shape {coefficients.shape}, expected ({self.j},)")
        if not np.any(coefficients != 0.0):
            raise ValueError("all-zero constraint row")
        if direction == "=":
            self._eq.append((coefficients, float(rhs)))
        elif direction == "<=":
            self._ineq.append((coefficients, float(rhs)))
        elif direction == ">=":
            self._ineq.append((-coefficients, -float(rhs)))
        else:
            raise ValueError(f"unknown direction {direction!r}")

    def build(self) -> LinearConstraintSet:
        if self._ineq:
            F = np.vstack([row for row, _ in self._ineq])
            f = np.array([rhs for _, rhs in self._ineq])
        else:
            F = np.zeros((0, self.j))
            f = np.zeros(0)
        H = np.vstack([row for row, _ in self._eq])
        h = np.array([rhs for _, rhs in self._eq])
        return LinearConstraintSet(F=F, f=f, H=H, h=h)


def normalization_only(n_scenarios: int) -> LinearConstraintSet:
    return ConstraintBuilder(n_scenarios).build()
