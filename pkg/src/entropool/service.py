"""HTTP service exposing sessions: panel upload, views, solve, stats, frontier.

Sessions are in-memory.  Every response carries the session's revision
number; every mutation must quote the revision it saw, and a mismatch is a
409 so clients refetch instead of silently overwriting each other.  Within
one session mutations are serialized by a lock (solves included), while
independent sessions proceed in parallel.

Error contract: 400 invalid payload, 404 unknown session, 409 stale
revision, 422 infeasible (or non-converging) views.
"""

import threading
import uuid
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .options import (FrontierPoint, FrontierSpec, build_pnl_panel,
                      book_from_json, current_price, mean_cvar_frontier,
                      zero_delta_budget_constraints)
from .scenarios import ProbabilityVector, ScenarioPanel, column_statistics
from .solver import (InfeasibleViewsError, NotConvergedError, SolverConfig)
from .views import View, ViewSchemaError, view_from_json, view_to_json
from .workflow import solve_view_groups


class CreateSessionBody(BaseModel):
    factor_names: List[str]
    data: List[List[float]]
    prior: Optional[List[float]] = None


class PutViewsBody(BaseModel):
    revision: int
    overall_confidence: float = 1.0
    views: List[dict]


class SolveBody(BaseModel):
    revision: int


class FrontierBody(BaseModel):
    revision: int
    book: List[dict]
    gamma: float = 0.95
    lambdas: List[float] = [0.0, 0.01, 0.02, 0.03, 0.05, 0.1, 1000.0]
    position_cap: float = 100.0


@dataclass
class Session:
    session_id: str
    panel: ScenarioPanel
    prior: ProbabilityVector
    revision: int = 0
    user_views: Dict[str, Tuple[float, List[View]]] = field(default_factory=dict)
    posteriors: Optional[Dict[str, ProbabilityVector]] = None
    pooled: Optional[ProbabilityVector] = None
    solve_diagnostics: Optional[dict] = None
    frontier: Optional[List[FrontierPoint]] = None
    frontier_instruments: Optional[List[str]] = None
    lock: threading.RLock = field(default_factory=threading.RLock)

    def invalidate(self) -> None:
        # any mutation drops all downstream artifacts
        self.posteriors = None
        self.pooled = None
        self.solve_diagnostics = None
        self.frontier = None
        self.frontier_instruments = None

    @property
    def solved(self) -> bool:
        return self.pooled is not None

    def effective_posterior(self) -> ProbabilityVector:
        return self.pooled if self.pooled is not None else self.prior


class SessionStore:
    def __init__(self):
        self._sessions: Dict[str, Session] = {}
        self._lock = threading.Lock()

    def create(self, panel: ScenarioPanel, prior: ProbabilityVector) -> Session:
        session = Session(session_id=uuid.uuid4().hex[:12], panel=panel,
                          prior=prior)
        with self._lock:
            self._sessions[session.session_id] = session
        return session

    def get(self, session_id: str) -> Session:
        with self._lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404,
                                detail=f"unknown session {session_id!r}")
        return session


def _require_revision(session: Session, revision: int) -> None:
    if revision != session.revision:
        raise HTTPException(
            status_code=409,
            detail=f"stale revision {revision}; session is at {session.revision}")


def _bad_request(message: str) -> HTTPException:
    return HTTPException(status_code=400, detail=message)


def create_app(solver_config: Optional[SolverConfig] = None) -> FastAPI:
    app = FastAPI(title="entropool", version="0.1.0")
    store = SessionStore()
    config = solver_config or SolverConfig()

    @app.exception_handler(RequestValidationError)
    async def _validation_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": exc.errors()})

    @app.get("/health")
    def health():
        return {"status": "ok", "service": "entropool"}

    @app.post("/sessions")
    def create_session(body: CreateSessionBody):
        try:
            panel = ScenarioPanel(body.factor_names,
                                  np.asarray(body.data, dtype=float))
            prior = (ProbabilityVector.normalized(body.prior, tolerance=1e-9)
                     if body.prior is not None
                     else ProbabilityVector.uniform(panel.n_scenarios))
            if len(prior) != panel.n_scenarios:
                raise ValueError("prior length does not match the panel")
        except ValueError as exc:
            raise _bad_request(str(exc)) from exc
        session = store.create(panel, prior)
        return {"session_id": session.session_id, "revision": session.revision}

    @app.get("/sessions/{session_id}")
    def describe_session(session_id: str):
        session = store.get(session_id)
        with session.lock:
            return {
                "session_id": session.session_id,
                "revision": session.revision,
                "factor_names": session.panel.factor_names,
                "n_scenarios": session.panel.n_scenarios,
                "users": {
                    user: {"overall_confidence": confidence,
                           "views": [view_to_json(v) for v in views]}
                    for user, (confidence, views) in session.user_views.items()
                },
                "solved": session.solved,
                "frontier_computed": session.frontier is not None,
            }

    @app.put("/sessions/{session_id}/views/{user_id}")
    def put_views(session_id: str, user_id: str, body: PutViewsBody):
        session = store.get(session_id)
        try:
            views = [view_from_json(obj) for obj in body.views]
            if not 0.0 <= body.overall_confidence <= 1.0:
                raise ViewSchemaError("overall_confidence must lie in [0, 1]")
        except ViewSchemaError as exc:
            raise _bad_request(str(exc)) from exc
        with session.lock:
            _require_revision(session, body.revision)
            session.user_views[user_id] = (body.overall_confidence, views)
            session.invalidate()
            session.revision += 1
            return {"revision": session.revision}

    @app.post("/sessions/{session_id}/solve")
    def solve_session(session_id: str, body: SolveBody):
        session = store.get(session_id)
        with session.lock:
            _require_revision(session, body.revision)
            groups = [(user, confidence, views)
                      for user, (confidence, views) in session.user_views.items()]
            if not groups:
                groups = [("user", 1.0, [])]
            try:
                pooled, posteriors, diagnostics = solve_view_groups(
                    session.panel, session.prior, groups, config)
            except (InfeasibleViewsError, NotConvergedError) as exc:
                raise HTTPException(status_code=422, detail=str(exc)) from exc
            except ValueError as exc:
                raise _bad_request(str(exc)) from exc
            session.posteriors = posteriors
            session.pooled = pooled
            session.solve_diagnostics = diagnostics
            session.frontier = None
            session.frontier_instruments = None
            session.revision += 1
            return {"revision": session.revision, "users": diagnostics}

    @app.get("/sessions/{session_id}/statistics")
    def statistics(session_id: str):
        session = store.get(session_id)
        with session.lock:
            posterior = session.effective_posterior()
            columns = []
            for name in session.panel.factor_names:
                column = session.panel.column(name)
                columns.append({
                    "name": name,
                    "prior": _stats_json(column, session.prior),
                    "posterior": _stats_json(column, posterior),
                })
            return {"revision": session.revision, "solved": session.solved,
                    "columns": columns}

    @app.get("/sessions/{session_id}/histogram")
    def histogram(session_id: str, column: str, bins: int = 50):
        session = store.get(session_id)
        if bins < 1 or bins > 10_000:
            raise _bad_request("bins must lie in [1, 10000]")
        with session.lock:
            try:
                values = session.panel.column(column)
            except KeyError as exc:
                raise _bad_request(str(exc)) from exc
            edges = np.histogram_bin_edges(values, bins=bins)
            prior_mass, _ = np.histogram(values, bins=edges,
                                         weights=session.prior.weights)
            post_mass, _ = np.histogram(
                values, bins=edges,
                weights=session.effective_posterior().weights)
            return {
                "revision": session.revision,
                "solved": session.solved,
                "column": column,
                "edges": edges.tolist(),
                "prior_mass": prior_mass.tolist(),
                "posterior_mass": post_mass.tolist(),
            }

    @app.post("/sessions/{session_id}/frontier")
    def compute_frontier(session_id: str, body: FrontierBody):
        session = store.get(session_id)
        with session.lock:
            _require_revision(session, body.revision)
            try:
                book = book_from_json(body.book)
                prices = [current_price(c) for c in book]
                pnl = build_pnl_panel(session.panel, book, prices)
                B, lo, hi = zero_delta_budget_constraints(book, prices)
                spec = FrontierSpec(gamma=body.gamma,
                                    lambdas=tuple(body.lambdas),
                                    position_bound=body.position_cap,
                                    B=B, b_lower=lo, b_upper=hi)
                points = mean_cvar_frontier(pnl, session.effective_posterior(),
                                            spec)
            except (ValueError, KeyError) as exc:
                raise _bad_request(str(exc)) from exc
            session.frontier = points
            session.frontier_instruments = pnl.instrument_ids
            session.revision += 1
            return {"revision": session.revision, "points": len(points)}

    @app.get("/sessions/{session_id}/frontier")
    def get_frontier(session_id: str):
        session = store.get(session_id)
        with session.lock:
            points = [{
                "lambda": point.lambda_,
                "weights": point.weights.tolist(),
                "expected_pnl": point.expected_pnl,
                "cvar": point.cvar,
            } for point in (session.frontier or [])]
            return {"revision": session.revision,
                    "computed": session.frontier is not None,
                    "instrument_ids": session.frontier_instruments,
                    "points": points}

    @app.get("/sessions/{session_id}/snapshot")
    def snapshot(session_id: str):
        session = store.get(session_id)
        with session.lock:
            return {
                "session_id": session.session_id,
                "revision": session.revision,
                "factor_names": session.panel.factor_names,
                "data": session.panel.data.tolist(),
                "prior": session.prior.weights.tolist(),
                "users": {
                    user: {"overall_confidence": confidence,
                           "views": [view_to_json(v) for v in views]}
                    for user, (confidence, views) in session.user_views.items()
                },
                "pooled": (session.pooled.weights.tolist()
                           if session.pooled is not None else None),
            }

    return app


def _stats_json(column: np.ndarray, p: ProbabilityVector) -> dict:
    stats = column_statistics(column, p)
    return {
        "mean": stats.mean,
        "std": stats.std,
        "median": stats.median,
        "quantiles": {format(level, "g"): value
                      for level, value in stats.quantiles.items()},
    }


app = create_app()
