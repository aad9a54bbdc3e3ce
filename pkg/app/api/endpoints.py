# This module defines the API endpoints for building reliability-guaranteeing schedules
# and for running benchmarks in the background.
# Author: shiboli
# Date: 2025-06-09
# Version: 0.2.0

import os
from datetime import datetime

from fastapi import APIRouter, BackgroundTasks, File, Form, HTTPException, UploadFile, status

from app.config import settings
from app.core.bench_service import expand_cells, run_benchmark, write_records
from app.core.exceptions import SchedulingError
from app.core.logger import console
from app.core.scheduling_service import CellResult, PreparedScenario, scheduling_service
from app.core.topology import load_scenario
from app.models.network import Extension, SchedulerKind
from app.models.schemas import BenchConfig, BenchmarkAccepted, ErrorResponse, ScheduleRequest, ScheduleResponse

router = APIRouter()

ERROR_RESPONSES = {
    status.HTTP_400_BAD_REQUEST: {"model": ErrorResponse, "description": "Invalid or infeasible scheduling request"},
    status.HTTP_500_INTERNAL_SERVER_ERROR: {"model": ErrorResponse, "description": "Internal server error"},
}


def _response(scenario: PreparedScenario, result: CellResult, preview_slots: int) -> ScheduleResponse:
    rendered = result.frame.render(limit=preview_slots) if preview_slots else ""
    return ScheduleResponse(
        record=result.record,
        routing=dict(scenario.routing.parent),
        repetition=dict(result.repetition.tau) if result.repetition is not None else None,
        frame_preview=rendered.splitlines(),
    )


@router.post(
    "/schedule",
    response_model=ScheduleResponse,
    responses=ERROR_RESPONSES,
    summary="Schedule a generated topology",
)
async def schedule_topology(request: ScheduleRequest):
    """
    Generates a topology for the given size and seed, routes it over ETX and builds the
    frame of one scheduler kind with the requested reliability extension.
    """
    try:
        console.info(f"Handling /schedule request for {request.model_dump()}")
        scenario = scheduling_service.generate(request.size, request.seed, request.snr_db)
        result = scheduling_service.run_cell(
            scenario, request.kind, request.extension, request.rho, trials=request.trials,
        )
        return _response(scenario, result, request.preview_slots)
    except (SchedulingError, ValueError) as e:
        console.warning(f"Bad request: {e}")
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(e))
    except Exception:
        console.exception("An unexpected error occurred in /schedule endpoint.")
        raise HTTPException(
            status_code=status.HTTP_500_INTERNAL_SERVER_ERROR,
            detail="An internal server error occurred."
        )


@router.post(
    "/scenario/file",
    response_model=ScheduleResponse,
    responses=ERROR_RESPONSES,
    summary="Schedule an uploaded scenario file",
)
async def schedule_scenario_file(
    file: UploadFile = File(...),
    kind: SchedulerKind = Form(SchedulerKind.NODE_BASED),
    extension: Extension = Form(Extension.SCHEDEX),
    rho: float = Form(0.9),
    trials: int = Form(0),
    preview_slots: int = Form(20),
):
    """
    Accepts a scenario file (the JSON layout written by save_scenario), stores it under
    SCENARIO_DIR and schedules it.
    """
    filename = os.path.basename(file.filename or "scenario.json")
    save_path = os.path.join(settings.SCENARIO_DIR, filename)
    os.makedirs(settings.SCENARIO_DIR, exist_ok=True)
    with open(save_path, "wb") as buffer:
        buffer.write(await file.read())

    try:
        net, Q, cp, tp = load_scenario(save_path)
        scenario = scheduling_service.prepare(net, Q, cp, tp)
        result = scheduling_service.run_cell(scenario, kind, extension, rho, trials=trials)
        return _response(scenario, result, preview_slots)
    except (SchedulingError, ValueError) as e:
        console.warning(f"Bad scenario request for '{filename}': {e}")
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(e))
    except Exception:
        console.exception("An unexpected error occurred in /scenario/file endpoint.")
        raise HTTPException(
            status_code=status.HTTP_500_INTERNAL_SERVER_ERROR,
            detail="An internal server error occurred."
        )


# Background task function
def background_benchmark(cfg: BenchConfig, output_path: str):
    records = run_benchmark(cfg)
    write_records(records, output_path, cfg.format)


@router.post(
    "/benchmark",
    response_model=BenchmarkAccepted,
    status_code=status.HTTP_202_ACCEPTED,
    summary="Run a benchmark in the background",
)
async def start_benchmark(cfg: BenchConfig, background_tasks: BackgroundTasks):
    """
    Validates the benchmark grid and schedules it for background execution. Records are
    written under RESULTS_DIR and a `scenario` is read from SCENARIO_DIR; only the file
    name of either path is used.
    """
    if cfg.out:
        output_path = os.path.join(settings.RESULTS_DIR, os.path.basename(cfg.out))
    else:
        stamp = datetime.now().strftime("%Y%m%d-%H%M%S")
        output_path = os.path.join(settings.RESULTS_DIR, f"bench-{cfg.seed}-{stamp}.{cfg.format}")
    if cfg.scenario:
        scenario_path = os.path.join(settings.SCENARIO_DIR, os.path.basename(cfg.scenario))
        if not os.path.isfile(scenario_path):
            raise HTTPException(
                status_code=status.HTTP_404_NOT_FOUND,
                detail=f"Scenario '{os.path.basename(cfg.scenario)}' not found in the scenario directory.",
            )
        cfg = cfg.model_copy(update={"scenario": scenario_path})
    cells = len(expand_cells(cfg)) * (1 if cfg.scenario else cfg.topologies * len(cfg.sizes))

    background_tasks.add_task(background_benchmark, cfg, output_path)
    return BenchmarkAccepted(
        message=f"Benchmark with {cells} cells accepted and running in the background. See server logs for progress.",
        output_path=output_path,
        cells=cells,
    )
