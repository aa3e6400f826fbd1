# ============================================================================
# web.py - FastAPI dashboard with HTMX long-polling for bench progress
# ============================================================================
from __future__ import annotations

import asyncio
from contextlib import asynccontextmanager
from datetime import datetime
import logging
from pathlib import Path
import random
from typing import Any

from fastapi import FastAPI, Form, Request
from fastapi.responses import HTMLResponse, JSONResponse
from fastapi.templating import Jinja2Templates
from pydantic import ValidationError

from hoacs.aes_guard import REFERENCE_KEYS, parse_hex
from hoacs.attack_calc import AttackParams, attack_report
from hoacs.bench import BenchRow, bench_run
from hoacs.config import BenchConfig, make_rng
from hoacs.errors import HoacsError, OutOfRange
from hoacs.rnc_core import decode, encode, from_residues, parse_moduli
from hoacs.trace_audit import TraceMode, audit

logger = logging.getLogger(__name__)


# Progress events for long-polling
class ProgressBus:
    def __init__(self) -> None:
        self.subscribers: list[asyncio.Queue[dict[str, Any]]] = []

    async def subscribe(self) -> asyncio.Queue[dict[str, Any]]:
        queue: asyncio.Queue[dict[str, Any]] = asyncio.Queue()
        self.subscribers.append(queue)
        return queue

    async def publish(self, event: dict[str, Any]) -> None:
        for queue in self.subscribers:
            await queue.put(event)

    def publish_nowait(self, event: dict[str, Any]) -> None:
        for queue in self.subscribers:
            queue.put_nowait(event)

    def unsubscribe(self, queue: asyncio.Queue[dict[str, Any]]) -> None:
        if queue in self.subscribers:
            self.subscribers.remove(queue)


progress_bus = ProgressBus()
bench_runs: set[asyncio.Future[Any]] = set()


@asynccontextmanager
async def lifespan(app: FastAPI):
    yield
    progress_bus.subscribers.clear()


app = FastAPI(lifespan=lifespan)
templates = Jinja2Templates(directory=str(Path(__file__).parent / "templates"))


def _wants_json(request: Request) -> bool:
    return "application/json" in request.headers.get("accept", "")


def _seed(text: str) -> int | None:
    # empty number inputs arrive as ""
    text = text.strip()
    if not text:
        return None
    try:
        return int(text)
    except ValueError:
        raise OutOfRange(f"seed must be an integer, got {text!r}") from None


@app.exception_handler(HoacsError)
async def hoacs_error_handler(request: Request, exc: HoacsError) -> JSONResponse:
    return JSONResponse(status_code=422, content={"error": type(exc).__name__, "detail": str(exc)})


@app.exception_handler(ValidationError)
async def validation_error_handler(request: Request, exc: ValidationError) -> JSONResponse:
    return JSONResponse(status_code=422, content={"error": "ValidationError", "detail": str(exc)})


@app.get("/", response_class=HTMLResponse)
async def home(request: Request):
    return templates.TemplateResponse(
        request=request,
        name="index.html",
        context={"modes": [m.value for m in TraceMode], "reference_keys": REFERENCE_KEYS},
    )


@app.post("/encode")
async def encode_value(
    request: Request,
    value: int = Form(...),
    moduli: str = Form("17,19"),
    shift: bool = Form(False),
    seed: str = Form(""),
):
    mset = parse_moduli(moduli)
    x = encode(value, mset, make_rng(_seed(seed)) if shift else None)
    data = {
        "value": value,
        "moduli": list(mset.moduli),
        "components": list(x.components),
        "canonical": list(x.canonical_components()),
    }
    if _wants_json(request):
        return data
    return templates.TemplateResponse(request=request, name="partials/encode_result.html", context=data)


@app.post("/decode")
async def decode_value(request: Request, components: str = Form(...), moduli: str = Form("17,19")):
    mset = parse_moduli(moduli)
    try:
        residues = [int(c) for c in components.split(",")]
    except ValueError:
        return JSONResponse(status_code=422, content={"error": "ValueError", "detail": components})
    data = {"components": residues, "moduli": list(mset.moduli), "value": decode(from_residues(residues, mset), mset)}
    if _wants_json(request):
        return data
    return templates.TemplateResponse(request=request, name="partials/decode_result.html", context=data)


@app.get("/attack-calc")
async def attack_calc(
    b: int = 32,
    t_exec: float = 66,
    s_cpu: float = 4e9,
    n_dr: int = 8,
    gamma: int = 5,
    m: int = 65537,
    k: int = 2,
):
    params = AttackParams(b=b, t_exec=t_exec, s_cpu=s_cpu, n_dr=n_dr, gamma=gamma, m=m, k=k)
    return attack_report(params).model_dump()


@app.post("/audit", response_class=HTMLResponse)
async def audit_keys(
    request: Request,
    key: str = Form(""),
    mode: str = Form(TraceMode.PROTECTED_GRID.value),
    block: str = Form("00" * 16),
    seed: str = Form(""),
):
    if mode not in {m.value for m in TraceMode}:
        raise OutOfRange(f"unknown mode {mode!r}")
    keys = [parse_hex(key)] if key.strip() else [parse_hex(k) for k in REFERENCE_KEYS.values()]
    reports = await asyncio.to_thread(audit, mode, keys, parse_hex(block), None, random.Random(_seed(seed)))
    if _wants_json(request):
        return JSONResponse([r.model_dump() for r in reports])
    return templates.TemplateResponse(
        request=request, name="partials/audit_result.html", context={"reports": reports}
    )


@app.post("/bench", response_class=HTMLResponse)
async def start_bench(
    request: Request,
    ops: str = Form("add"),
    counts: str = Form("0,50"),
    repetitions: int = Form(3),
    variants: str = Form("with-rand,without-rand"),
    seed: str = Form(""),
):
    cfg = BenchConfig(
        ops=[o.strip() for o in ops.split(",") if o.strip()],
        counts=[int(c) for c in counts.split(",") if c.strip()],
        repetitions=repetitions,
        variants=[v.strip() for v in variants.split(",") if v.strip()],
        seed=_seed(seed),
    )
    loop = asyncio.get_running_loop()

    def progress(row: BenchRow) -> None:
        event = {"type": "bench_row", "data": row.model_dump(), "timestamp": datetime.now().isoformat()}
        loop.call_soon_threadsafe(progress_bus.publish_nowait, event)

    def finished(future: asyncio.Future[Any]) -> None:
        bench_runs.discard(future)
        error = future.exception()
        progress_bus.publish_nowait({"type": "bench_done", "data": None if error is None else str(error)})

    future = loop.run_in_executor(None, bench_run, cfg, progress)
    bench_runs.add(future)
    future.add_done_callback(finished)
    logger.info("bench started: %s", cfg)
    return templates.TemplateResponse(request=request, name="partials/bench_started.html", context={"cfg": cfg})


@app.get("/bench/poll", response_class=HTMLResponse)
async def poll_bench(request: Request, timeout: float = 30.0):
    """Long-polling endpoint for bench progress - returns HTML for HTMX"""
    queue = await progress_bus.subscribe()

    try:
        event = await asyncio.wait_for(queue.get(), timeout=timeout)
        return templates.TemplateResponse(
            request=request,
            name="partials/bench_poll.html",
            context={"event": event},
        )
    except asyncio.TimeoutError:
        # Fresh polling div so the client keeps polling
        return templates.TemplateResponse(
            request=request,
            name="partials/bench_poll.html",
            context={"event": None},
        )
    finally:
        progress_bus.unsubscribe(queue)


@app.get("/health")
async def health():
    return {"status": "healthy"}
