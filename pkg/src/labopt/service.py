"""HTTP ask/tell service for human-run optimization campaigns.

Each campaign is one JSON document on disk (written atomically), one
lock, and one lazily fitted model memoized by observation count. The
suggestion flow serves a precomputed replicated Latin-hypercube plan
first, then switches to acquisition maximization; fit or acquisition
breakdowns degrade to flagged fallback points instead of failing the
request.
"""

from __future__ import annotations

import math
import os
import threading
import uuid
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .acquisition import (
    AcquisitionSpec,
    _default_res,
    batch_evaluator,
    maximize_acquisition,
    unit_grid,
)
from .design import expand_replicates, lhs_maximin
from .errors import (
    AcquisitionFailureError,
    DegenerateDataError,
    LabOptError,
    SingularCovarianceError,
)
from .gp import BoxDomain, Dataset, SearchConfig, fit
from .kernels import KernelFamily
from .loop import recommend

SCHEMA_VERSION = 1
MAX_DIMENSIONS = 4
KERNEL_CHOICES = ("Gaussian", "Power", "Matern")
_BOUND_SLACK = 1e-9

_KERNELS = {
    "Gaussian": KernelFamily("SquaredExponential"),
    "Power": KernelFamily("PowerExponential"),
    "Matern": KernelFamily("Matern"),
}


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str,
                 field: Optional[str] = None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.field = field

    def body(self) -> dict:
        doc = {"code": self.code, "message": self.message}
        if self.field is not None:
            doc["field"] = self.field
        return doc


class VariableDef(BaseModel):
    name: str
    lower: float
    upper: float


class AcquisitionParams(BaseModel):
    kind: str = "EI"
    pi: Optional[float] = None
    lam: Optional[float] = None
    kg_quadrature: Optional[int] = None
    pes_star_samples: Optional[int] = None


class CreateCampaignRequest(BaseModel):
    variables: list[VariableDef]
    kernel: str = "Matern"
    acquisition: AcquisitionParams = Field(default_factory=AcquisitionParams)
    budget: Optional[int] = None
    seed: int = 0
    initial_unique: Optional[int] = None
    initial_replicates: int = 2


class ObservationIn(BaseModel):
    x: list[float]
    y: float
    note: Optional[str] = None


class CampaignStore:
    """Disk-backed campaign documents plus per-campaign locks and models."""

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._guard = threading.Lock()
        self._locks: dict = {}
        self._models: dict = {}

    def lock(self, cid: str) -> threading.Lock:
        with self._guard:
            if cid not in self._locks:
                self._locks[cid] = threading.Lock()
            return self._locks[cid]

    def path(self, cid: str) -> Path:
        return self.root / f"{cid}.json"

    def load(self, cid: str) -> dict:
        path = self.path(cid)
        if not path.exists():
            raise ApiError(404, "not_found", f"no campaign {cid!r}")
        import json

        return json.loads(path.read_text())

    def save(self, doc: dict) -> None:
        import json

        path = self.path(doc["id"])
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text(json.dumps(doc, sort_keys=True))
        os.replace(tmp, path)

    def invalidate_model(self, cid: str) -> None:
        self._models.pop(cid, None)

    def model_for(self, doc: dict):
        """Fit (or reuse) the model for the current observation count."""
        cid = doc["id"]
        n = len(doc["observations"])
        cached = self._models.get(cid)
        if cached is not None and cached[0] == n:
            return cached[1], cached[2]
        dataset = _dataset_of(doc)
        model = fit(dataset, _KERNELS[doc["kernel"]],
                    SearchConfig(seed=doc["seed"]))
        self._models[cid] = (n, model, dataset)
        return model, dataset


def _domain_of(doc: dict) -> BoxDomain:
    return BoxDomain(tuple(v["lower"] for v in doc["variables"]),
                     tuple(v["upper"] for v in doc["variables"]))


def _dataset_of(doc: dict) -> Dataset:
    domain = _domain_of(doc)
    X = np.array([o["x"] for o in doc["observations"]], dtype=float)
    y = np.array([o["y"] for o in doc["observations"]], dtype=float)
    return Dataset.from_raw(domain, X, y)


def _acq_spec(doc: dict, seed: int) -> AcquisitionSpec:
    params = dict(doc["acquisition"])
    return AcquisitionSpec(seed=seed, **params)


def _validate_create(req: CreateCampaignRequest) -> None:
    d = len(req.variables)
    if d < 1 or d > MAX_DIMENSIONS:
        raise ApiError(422, "validation_error",
                       f"need 1 to {MAX_DIMENSIONS} variables, got {d}",
                       field="variables")
    names = set()
    for i, v in enumerate(req.variables):
        if not v.name.strip():
            raise ApiError(422, "validation_error", "variable name is empty",
                           field=f"variables[{i}].name")
        if v.name in names:
            raise ApiError(422, "validation_error",
                           f"duplicate variable name {v.name!r}",
                           field=f"variables[{i}].name")
        names.add(v.name)
        if not (math.isfinite(v.lower) and math.isfinite(v.upper)):
            raise ApiError(422, "validation_error", "bounds must be finite",
                           field=f"variables[{i}].lower")
        if not v.lower < v.upper:
            raise ApiError(422, "validation_error",
                           "lower bound must be below upper bound",
                           field=f"variables[{i}].upper")
    if req.kernel not in KERNEL_CHOICES:
        raise ApiError(422, "validation_error",
                       f"kernel must be one of {KERNEL_CHOICES}",
                       field="kernel")
    if req.seed < 0:
        raise ApiError(422, "validation_error", "seed must be non-negative",
                       field="seed")
    if req.budget is not None and req.budget < 1:
        raise ApiError(422, "validation_error", "budget must be positive",
                       field="budget")
    if req.initial_replicates not in (1, 2, 3):
        raise ApiError(422, "validation_error",
                       "initial_replicates must be 1, 2, or 3",
                       field="initial_replicates")
    if req.initial_unique is not None and req.initial_unique < 2:
        raise ApiError(422, "validation_error",
                       "need at least two unique initial sites",
                       field="initial_unique")


def _resolve_acquisition(params: AcquisitionParams) -> dict:
    overrides = {k: v for k, v in params.model_dump().items()
                 if k != "kind" and v is not None}
    try:
        spec = AcquisitionSpec(kind=params.kind, **overrides)
    except LabOptError as exc:
        raise ApiError(422, "validation_error", str(exc), field="acquisition")
    return {
        "kind": spec.kind,
        "pi": spec.pi,
        "lam": spec.lam,
        "kg_quadrature": spec.kg_quadrature,
        "pes_star_samples": spec.pes_star_samples,
    }


def _new_campaign(req: CreateCampaignRequest) -> dict:
    _validate_create(req)
    d = len(req.variables)
    n_unique = req.initial_unique if req.initial_unique is not None else 5 * d
    rng = np.random.default_rng(np.random.SeedSequence([req.seed, 0]))
    unit_plan = expand_replicates(lhs_maximin(n_unique, d, rng),
                                  req.initial_replicates)
    domain = BoxDomain(tuple(v.lower for v in req.variables),
                       tuple(v.upper for v in req.variables))
    plan_raw = [list(map(float, domain.denormalize(row))) for row in unit_plan]
    return {
        "schema": SCHEMA_VERSION,
        "id": uuid.uuid4().hex[:12],
        "created": datetime.now(timezone.utc).isoformat(),
        "status": "active",
        "variables": [v.model_dump() for v in req.variables],
        "kernel": req.kernel,
        "acquisition": _resolve_acquisition(req.acquisition),
        "seed": req.seed,
        "budget": req.budget,
        "initial_plan": plan_raw,
        "observations": [],
    }


def _recommendation_block(store: CampaignStore, doc: dict) -> dict:
    """Posterior-mean recommendation, gated at n >= 2d; null if unfittable."""
    n = len(doc["observations"])
    d = len(doc["variables"])
    block = {"recommendation": None, "predicted_mean": None,
             "best_observed": None}
    if n > 0:
        ys = [o["y"] for o in doc["observations"]]
        k = int(np.argmin(ys))
        block["best_observed"] = {"x": doc["observations"][k]["x"],
                                  "y": ys[k]}
    if n < max(2, 2 * d):
        return block
    try:
        model, dataset = store.model_for(doc)
    except (SingularCovarianceError, DegenerateDataError):
        return block
    rec = recommend(model, dataset)
    mu, _ = model.posterior_batch(dataset.domain.normalize(rec)[None, :])
    block["recommendation"] = [float(v) for v in rec]
    block["predicted_mean"] = float(mu[0])
    return block


def _campaign_state(store: CampaignStore, doc: dict) -> dict:
    state = {k: doc[k] for k in (
        "schema", "id", "created", "status", "variables", "kernel",
        "acquisition", "seed", "budget", "initial_plan")}
    state["n_obs"] = len(doc["observations"])
    state["observations"] = doc["observations"]
    state.update(_recommendation_block(store, doc))
    return state


def _max_distance_point(dataset: Dataset) -> np.ndarray:
    # No usable model: the most isolated grid point stands in for the
    # predictive-variance argmax of any stationary correlation.
    grid = unit_grid(dataset.d, _default_res(dataset.d, "scan"))
    diff = grid[:, None, :] - dataset.X[None, :, :]
    nearest = np.sqrt((diff ** 2).sum(axis=2)).min(axis=1)
    return grid[int(np.argmax(nearest))].copy()


def _suggest(store: CampaignStore, doc: dict) -> dict:
    n = len(doc["observations"])
    d = len(doc["variables"])
    domain = _domain_of(doc)
    budget = doc.get("budget")
    out = {
        "n_obs": n,
        "fallback": False,
        "mu": None,
        "s2": None,
        "acquisition": None,
        "budget_exhausted": budget is not None and n >= budget,
    }
    plan = doc["initial_plan"]
    if n < len(plan):
        out["x"] = plan[n]
        out["source"] = "initial_design"
        return out

    dataset = _dataset_of(doc)
    try:
        model, dataset = store.model_for(doc)
    except (SingularCovarianceError, DegenerateDataError):
        unit = _max_distance_point(dataset)
        out["x"] = [float(v) for v in domain.denormalize(unit)]
        out["source"] = "fallback"
        out["fallback"] = True
        return out

    acq_seed = int(np.random.SeedSequence([doc["seed"], 3, n])
                   .generate_state(1)[0])
    spec = _acq_spec(doc, acq_seed)
    try:
        unit = maximize_acquisition(model, spec)
        source = "acquisition"
    except AcquisitionFailureError:
        grid = unit_grid(d, _default_res(d, "scan"))
        _, s2 = model.posterior_std_batch(grid)
        unit = grid[int(np.argmax(s2))].copy()
        source = "fallback"
        out["fallback"] = True
    mu, s2 = model.posterior_batch(unit[None, :])
    out["mu"] = float(mu[0])
    out["s2"] = float(s2[0])
    if source == "acquisition":
        out["acquisition"] = float(
            np.asarray(batch_evaluator(model, spec)(unit[None, :]))[0])
    out["x"] = [float(v) for v in np.clip(
        domain.denormalize(unit),
        np.asarray(domain.lower), np.asarray(domain.upper))]
    out["source"] = source
    return out


def _slice(store: CampaignStore, doc: dict, axis: int, resolution: int) -> dict:
    n = len(doc["observations"])
    d = len(doc["variables"])
    if axis < 0 or axis >= d:
        raise ApiError(422, "validation_error",
                       f"axis must be in [0, {d - 1}]", field="axis")
    if resolution < 2 or resolution > 4097:
        raise ApiError(422, "validation_error",
                       "resolution must be between 2 and 4097",
                       field="resolution")
    if n < 2:
        raise ApiError(409, "no_model",
                       "need at least two observations to fit a model")
    try:
        model, dataset = store.model_for(doc)
    except (SingularCovarianceError, DegenerateDataError) as exc:
        raise ApiError(409, "no_model", f"model fit failed: {exc}")

    anchor_unit = dataset.domain.normalize(recommend(model, dataset))
    ticks = np.linspace(0.0, 1.0, resolution)
    query = np.tile(anchor_unit, (resolution, 1))
    query[:, axis] = ticks
    mu, s2 = model.posterior_batch(query)
    acq_seed = int(np.random.SeedSequence([doc["seed"], 3, n])
                   .generate_state(1)[0])
    alpha = batch_evaluator(model, _acq_spec(doc, acq_seed))(query)
    lo = dataset.domain.lower[axis]
    hi = dataset.domain.upper[axis]
    return {
        "axis": axis,
        "variable": doc["variables"][axis]["name"],
        "anchor": [float(v) for v in dataset.domain.denormalize(anchor_unit)],
        "x": [float(lo + t * (hi - lo)) for t in ticks],
        "mean": [float(v) for v in mu],
        "variance": [float(v) for v in s2],
        "acquisition": [float(v) for v in np.asarray(alpha, dtype=float)],
        "model_n_obs": n,
    }


def create_app(data_dir) -> FastAPI:
    """Build the service around one campaign directory."""
    store = CampaignStore(data_dir)
    app = FastAPI(title="labopt campaign service", version="0.1.0")
    # The browser client is typically served from a file server on another
    # port; single-user lab deployment, so a blanket allowance is fine.
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])

    @app.exception_handler(ApiError)
    async def _api_error(request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status, content=exc.body())

    @app.exception_handler(RequestValidationError)
    async def _request_error(request: Request, exc: RequestValidationError):
        first = exc.errors()[0] if exc.errors() else {}
        loc = ".".join(str(p) for p in first.get("loc", ()) if p != "body")
        return JSONResponse(
            status_code=422,
            content={"code": "validation_error",
                     "message": first.get("msg", "invalid request"),
                     "field": loc or None})

    @app.exception_handler(LabOptError)
    async def _labopt_error(request: Request, exc: LabOptError):
        return JSONResponse(status_code=422,
                            content={"code": "validation_error",
                                     "message": str(exc)})

    def _active(doc: dict) -> dict:
        if doc["status"] != "active":
            raise ApiError(409, "campaign_closed",
                           f"campaign {doc['id']} is closed")
        return doc

    @app.post("/campaigns", status_code=201)
    def create_campaign(req: CreateCampaignRequest):
        doc = _new_campaign(req)
        with store.lock(doc["id"]):
            store.save(doc)
            return _campaign_state(store, doc)

    @app.get("/campaigns/{cid}")
    def get_campaign(cid: str):
        with store.lock(cid):
            return _campaign_state(store, store.load(cid))

    @app.post("/campaigns/{cid}/observations")
    def tell(cid: str, obs: ObservationIn):
        with store.lock(cid):
            doc = _active(store.load(cid))
            d = len(doc["variables"])
            if len(obs.x) != d:
                raise ApiError(422, "validation_error",
                               f"x must have {d} coordinates", field="x")
            if not all(math.isfinite(v) for v in obs.x):
                raise ApiError(422, "validation_error",
                               "x must be finite", field="x")
            if not math.isfinite(obs.y):
                raise ApiError(422, "validation_error",
                               "y must be finite", field="y")
            for i, (v, var) in enumerate(zip(obs.x, doc["variables"])):
                if v < var["lower"] - _BOUND_SLACK \
                        or v > var["upper"] + _BOUND_SLACK:
                    raise ApiError(
                        422, "validation_error",
                        f"{var['name']}={v} is outside "
                        f"[{var['lower']}, {var['upper']}]",
                        field=f"x[{i}]")
            doc["observations"].append({
                "x": [float(v) for v in obs.x],
                "y": float(obs.y),
                "at": datetime.now(timezone.utc).isoformat(),
                "note": obs.note,
            })
            store.invalidate_model(cid)
            store.save(doc)
            summary = {"id": cid, "status": doc["status"],
                       "n_obs": len(doc["observations"])}
            summary.update(_recommendation_block(store, doc))
            return summary

    @app.get("/campaigns/{cid}/suggestion")
    def suggest(cid: str):
        with store.lock(cid):
            doc = _active(store.load(cid))
            return _suggest(store, doc)

    @app.get("/campaigns/{cid}/slice")
    def posterior_slice(cid: str, axis: int = 0, resolution: int = 101):
        with store.lock(cid):
            doc = store.load(cid)
            return _slice(store, doc, axis, resolution)

    @app.post("/campaigns/{cid}/close")
    def close(cid: str):
        with store.lock(cid):
            doc = store.load(cid)
            doc["status"] = "closed"
            store.save(doc)
            return {"id": cid, "status": "closed",
                    "n_obs": len(doc["observations"])}

    return app
