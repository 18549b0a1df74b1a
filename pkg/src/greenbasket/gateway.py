"""HTTP service exposing catalog, optimization jobs, and the feedback log.

Jobs run in a small thread pool and live in memory; results are retrievable
by id until the process exits. The feedback endpoint appends one JSON line
per decision to an append-only log so sessions can be replayed. The catalog
is loaded once at startup and never mutated.
"""

from __future__ import annotations

import json
import os
import threading
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .domain import (
    AnchorContext,
    Catalog,
    FEATURE_COLUMNS,
    N_OBJECTIVES,
    Recommendation,
    feature_ratios,
)
from .experiments import run_method
from .pareto import acceptability_filter

DEFAULT_METHOD = "rnsga2"
KNOWN_METHODS = ("g3a", "mones", "rnsga2")

ENV_PORT = "GREENBASKET_PORT"
ENV_CATALOG = "GREENBASKET_CATALOG"


@dataclass
class GatewayConfig:
    catalog_path: str | None = None
    default_method: str = DEFAULT_METHOD
    port: int = 8000
    seed: int = 0
    feedback_log: str = "feedback.jsonl"
    workers: int = 2

    @classmethod
    def from_file(cls, path) -> "GatewayConfig":
        """Parse the documented ``key = value`` config format ('#' comments)."""
        config = cls()
        for raw in Path(path).read_text().splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"bad config line: {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key == "catalog":
                config.catalog_path = value
            elif key == "default_method":
                if value not in KNOWN_METHODS:
                    raise ValueError(f"unknown default method {value!r}")
                config.default_method = value
            elif key == "port":
                config.port = int(value)
            elif key == "seed":
                config.seed = int(value)
            elif key == "feedback_log":
                config.feedback_log = value
            elif key == "workers":
                config.workers = int(value)
            else:
                raise ValueError(f"unknown config key {key!r}")
        return config

    def apply_env_overrides(self) -> "GatewayConfig":
        if os.environ.get(ENV_PORT):
            self.port = int(os.environ[ENV_PORT])
        if os.environ.get(ENV_CATALOG):
            self.catalog_path = os.environ[ENV_CATALOG]
        return self


class OptimizeRequest(BaseModel):
    basket: dict[str, int]
    method: str | None = None
    weights: list[float] | None = None
    seed: int = 0
    budget: int | None = None


class FeedbackRequest(BaseModel):
    accepted_index: int | None = None


@dataclass
class Job:
    job_id: str
    status: str  # pending | completed | failed
    request: dict
    recommendations: list[dict] = field(default_factory=list)
    error: str | None = None


class JobStore:
    def __init__(self, workers: int = 2):
        self._jobs: dict[str, Job] = {}
        self._lock = threading.Lock()
        self._executor = ThreadPoolExecutor(max_workers=workers)

    def submit(self, fn, request: dict) -> Job:
        job = Job(job_id=uuid.uuid4().hex, status="pending", request=request)
        with self._lock:
            self._jobs[job.job_id] = job

        def runner():
            try:
                job.recommendations = fn()
                job.status = "completed"
            except Exception as exc:  # surfaced through the job status
                job.error = str(exc)
                job.status = "failed"

        self._executor.submit(runner)
        return job

    def get(self, job_id: str) -> Job | None:
        with self._lock:
            return self._jobs.get(job_id)


def _render_recommendation(
    catalog: Catalog, ctx: AnchorContext, rec: Recommendation
) -> dict:
    ratios = feature_ratios(catalog, rec.basket, ctx)
    return {
        "basket": {
            catalog.product_ids[i]: int(q)
            for i, q in enumerate(rec.basket)
            if q > 0
        },
        "losses": [float(v) for v in rec.losses],
        "ratios": {c: float(v) for c, v in zip(FEATURE_COLUMNS, ratios)},
        "cosine_similarity": float(rec.cosine),
        "passed_filter": bool(acceptability_filter([rec])),
    }


def create_app(catalog: Catalog | None, config: GatewayConfig | None = None) -> FastAPI:
    config = config or GatewayConfig()
    app = FastAPI(title="greenbasket", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    store = JobStore(workers=config.workers)
    feedback_lock = threading.Lock()
    app.state.catalog = catalog
    app.state.config = config
    app.state.store = store

    def require_catalog() -> Catalog:
        if app.state.catalog is None:
            raise HTTPException(status_code=409, detail="catalog not loaded")
        return app.state.catalog

    @app.get("/health")
    def health():
        return {"status": "ok", "catalog_loaded": app.state.catalog is not None}

    @app.get("/catalog")
    def get_catalog():
        cat = require_catalog()
        products = []
        for i, pid in enumerate(cat.product_ids):
            entry = {"product_id": pid, "name": cat.names[i], "unit": cat.units[i]}
            entry.update(
                {c: float(v) for c, v in zip(FEATURE_COLUMNS, cat.coeffs[i])}
            )
            products.append(entry)
        return {"n_products": cat.size, "products": products}

    @app.post("/optimize")
    def optimize(request: OptimizeRequest):
        cat = require_catalog()
        method = request.method or config.default_method
        if method not in KNOWN_METHODS:
            raise HTTPException(status_code=400, detail=f"unknown method {method!r}")

        quantities = {}
        for pid, qty in request.basket.items():
            if pid not in cat:
                raise HTTPException(status_code=400, detail=f"unknown product {pid!r}")
            if qty < 0:
                raise HTTPException(status_code=400, detail="quantities must be >= 0")
            quantities[pid] = qty
        x_star = cat.basket_from_mapping(quantities)
        if not np.any(x_star > 0):
            raise HTTPException(status_code=400, detail="intended basket is empty")

        weights = None
        if request.weights is not None:
            if len(request.weights) != N_OBJECTIVES or any(
                w <= 0 for w in request.weights
            ):
                raise HTTPException(
                    status_code=400, detail="weights must be 11 positive numbers"
                )
            weights = np.asarray(request.weights, dtype=float)

        ctx = AnchorContext.build(cat, x_star)

        def work():
            recs = run_method(
                method, cat, x_star, request.seed, request.budget, weights
            )
            return [_render_recommendation(cat, ctx, r) for r in recs]

        job = store.submit(work, request.model_dump())
        return {"job_id": job.job_id, "status": job.status}

    @app.get("/jobs/{job_id}")
    def get_job(job_id: str):
        job = store.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail="unknown job")
        body = {"job_id": job.job_id, "status": job.status}
        if job.status == "completed":
            body["recommendations"] = job.recommendations
        elif job.status == "failed":
            body["error"] = job.error
        return body

    @app.post("/jobs/{job_id}/feedback")
    def feedback(job_id: str, request: FeedbackRequest):
        job = store.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail="unknown job")
        if job.status != "completed":
            raise HTTPException(status_code=409, detail="job not completed")
        if request.accepted_index is not None and not (
            0 <= request.accepted_index < len(job.recommendations)
        ):
            raise HTTPException(status_code=422, detail="index out of range")
        line = {
            "timestamp": time.time(),
            "job_id": job_id,
            "choice": request.accepted_index,
        }
        with feedback_lock:
            with open(config.feedback_log, "a") as fh:
                fh.write(json.dumps(line) + "\n")
        return {"status": "recorded", "choice": request.accepted_index}

    return app


def replay_feedback_log(path) -> dict:
    """Reconstruct acceptance counts from the append-only feedback log."""
    counts: dict[str, int] = {"accepted": 0, "declined": 0}
    per_job: dict[str, list] = {}
    with open(path) as fh:
        for raw in fh:
            entry = json.loads(raw)
            per_job.setdefault(entry["job_id"], []).append(entry["choice"])
            if entry["choice"] is None:
                counts["declined"] += 1
            else:
                counts["accepted"] += 1
    counts["per_job"] = per_job
    return counts
