# rydsat/main.py - HTTP surface for the cheap, deterministic stages
import os
from typing import Any, Dict, Optional

from fastapi import Depends, FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from .config import load_config
from .errors import GeometryError, InputError, RydsatError
from .memory.run_store import RunStore
from .pipeline import graph_summary, solve
from .readout.scaling import scaling_table
from .sat.formula import brute_force_sat, parse_dimacs
from .sat.oracle import MAX_ORACLE_VERTICES, enumerate_mis
from .sat.reduction import reduce
from .utils.logger import logger

app = FastAPI(title="Rydberg SAT API", version="1.0.0")

# CORS middleware
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

_store: Optional[RunStore] = None


def get_store() -> RunStore:
    global _store
    if _store is None:
        _store = RunStore(os.getenv("RYDSAT_DB_PATH", "rydsat_runs.db"))
    return _store


# Request models
class DimacsRequest(BaseModel):
    dimacs: str


class ScalingRequest(BaseModel):
    n_atoms: Optional[int] = Field(None, ge=0)
    n_clauses: Optional[int] = Field(None, ge=1)
    target: float = Field(0.2, gt=0, lt=1)
    rep_rate_hz: float = Field(2.5, gt=0)


class SolveRequest(BaseModel):
    dimacs: str
    name: str = "request.cnf"
    overrides: Dict[str, Any] = Field(default_factory=dict)
    record: bool = True


def _http_error(error: RydsatError) -> HTTPException:
    if isinstance(error, InputError):
        status = 400
    elif isinstance(error, GeometryError):
        status = 422
    else:
        status = 500
    logger.error("request failed: %s", error)
    return HTTPException(status_code=status, detail=error.to_dict())


@app.get("/")
async def root():
    return {
        "service": "rydsat",
        "version": app.version,
        "endpoints": ["/reduce", "/oracle", "/scaling", "/solve", "/runs", "/health"],
    }


@app.get("/health")
async def health_check():
    return {"status": "healthy"}


@app.post("/reduce")
async def reduce_endpoint(request: DimacsRequest):
    """MIS graph and its summary"""
    try:
        g = reduce(parse_dimacs(request.dimacs))
        return {"graph": g.to_dict(), "summary": graph_summary(g)}
    except RydsatError as e:
        raise _http_error(e)


@app.post("/oracle")
async def oracle_endpoint(request: DimacsRequest):
    try:
        formula = parse_dimacs(request.dimacs)
        g = reduce(formula)
        result = {"sat": brute_force_sat(formula).to_dict(), "num_clauses": g.num_clauses}
        if g.num_vertices <= MAX_ORACLE_VERTICES:
            result["mis"] = enumerate_mis(g).to_dict()
        return result
    except RydsatError as e:
        raise _http_error(e)


@app.post("/scaling")
async def scaling_endpoint(request: ScalingRequest):
    try:
        return scaling_table(request.n_atoms, request.n_clauses, request.target, request.rep_rate_hz)
    except RydsatError as e:
        raise _http_error(e)


@app.post("/solve")
def solve_endpoint(request: SolveRequest, store: RunStore = Depends(get_store)):
    """Full pipeline; blocking, so served from the worker thread pool"""
    try:
        config = load_config(None, **request.overrides)
        result = solve(parse_dimacs(request.dimacs), config, input_name=request.name)
    except RydsatError as e:
        raise _http_error(e)
    report = result.report
    if request.record:
        report = {**report, "run_id": store.add_run(report)}
    return report


@app.get("/runs")
async def list_runs(limit: int = 20, store: RunStore = Depends(get_store)):
    runs = store.list_runs(limit)
    return {"runs": runs, "count": len(runs)}


@app.get("/runs/{run_id}")
async def get_run(run_id: int, store: RunStore = Depends(get_store)):
    run = store.get_run(run_id)
    if run is None:
        raise HTTPException(status_code=404, detail=f"run {run_id} not found")
    return run


if __name__ == "__main__":
    import uvicorn

    uvicorn.run(app, host="0.0.0.0", port=int(os.getenv("PORT", "8000")))
