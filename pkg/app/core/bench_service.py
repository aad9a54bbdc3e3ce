# The module implements the benchmark harness: it runs the (size, topology, kind, extension,
# rho) grid through the scheduling service, writes records as CSV or JSON and builds the
# grouped summaries (mean/std, SchedEx-vs-Incrementer ratios, distance to best, growth).
# Author: shiboli
# Date: 2025-06-09
# Version: 0.2.0

import json
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Iterable, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict
from scipy.stats import gmean

from app.config import settings
from app.core.exceptions import SchedulingError
from app.core.logger import console
from app.core.scheduling_service import PreparedScenario, scheduling_service
from app.core.topology import load_scenario
from app.models.network import Extension, SchedulerKind
from app.models.schemas import RECORD_COLUMNS, BenchConfig, BenchRecord

GROUP_KEYS = ["size", "kind", "extension", "rho"]
INT_COLUMNS = ["size", "seed", "frame_slots", "transmissions", "max_tau"]

Cell = Tuple[SchedulerKind, Extension, Optional[float]]


def topology_seeds(master: int, size: int, count: int) -> List[int]:
    """Per-size topology seeds derived from the master seed (63-bit, so they fit int64 columns)."""
    state = np.random.SeedSequence([master, size]).generate_state(count, dtype=np.uint64)
    return [int(s >> np.uint64(1)) for s in state]


def expand_cells(cfg: BenchConfig) -> List[Cell]:
    """Plain scheduling ignores rho and yields one cell per kind; the extensions one per rho."""
    cells: List[Cell] = []
    for kind in cfg.kinds:
        for extension in cfg.extensions:
            if extension is Extension.NONE:
                cells.append((kind, extension, None))
            else:
                cells.extend((kind, extension, rho) for rho in cfg.rhos)
    return cells


def _failed(size: int, seed: int, cell: Cell, reason: str, snr_db: float) -> BenchRecord:
    kind, extension, rho = cell
    return BenchRecord(
        size=size, seed=seed, kind=kind, extension=extension, rho=rho,
        status="failed", reason=reason, snr_db=snr_db,
    )


def _run_scenario(scenario: PreparedScenario, cells: List[Cell], trials: int) -> List[BenchRecord]:
    records = []
    for index, cell in enumerate(cells):
        kind, extension, rho = cell
        try:
            result = scheduling_service.run_cell(
                scenario, kind, extension, rho, trials=trials, mc_seed=[scenario.seed, index],
            )
            records.append(result.record)
        except (SchedulingError, ValueError) as e:
            console.display_error_panel(
                f"size={scenario.size} seed={scenario.seed} {kind.value}/{extension.value} rho={rho}", str(e)
            )
            records.append(_failed(scenario.size, scenario.seed, cell, f"{type(e).__name__}: {e}", scenario.channel.gamma0_db))
    return records


def _run_topology(task: Tuple[int, int, List[Cell], int, float]) -> List[BenchRecord]:
    size, seed, cells, trials, snr_db = task
    try:
        scenario = scheduling_service.generate(size, seed, snr_db)
    except SchedulingError as e:
        console.display_error_panel(f"size={size} seed={seed}", str(e))
        return [_failed(size, seed, cell, f"{type(e).__name__}: {e}", snr_db) for cell in cells]
    return _run_scenario(scenario, cells, trials)


def _trials(cfg: BenchConfig, size: int) -> int:
    return settings.trials_for(size) if cfg.trials is None else cfg.trials


def run_benchmark(cfg: BenchConfig) -> List[BenchRecord]:
    """
    Runs every cell of the grid. Failures are recorded with their reason and the run
    continues. The record set (runtimes aside) depends only on the configuration.
    """
    cells = expand_cells(cfg)
    snr_db = settings.CHANNEL_SNR_DB if cfg.snr_db is None else cfg.snr_db

    if cfg.scenario:
        net, Q, cp, tp = load_scenario(cfg.scenario)
        if cfg.snr_db is not None and cfg.snr_db != cp.gamma0_db:
            console.warning(f"Scenario {cfg.scenario} stores its own Q; --snr-db {cfg.snr_db} is ignored.")
        scenario = scheduling_service.prepare(net, Q, cp, tp, seed=tp.seed if tp is not None else cfg.seed)
        console.info(f"Benchmarking scenario {cfg.scenario}: {scenario.size} transceivers, {len(cells)} cells.")
        return _run_scenario(scenario, cells, _trials(cfg, scenario.size))

    tasks = [
        (size, seed, cells, _trials(cfg, size), snr_db)
        for size in cfg.sizes
        for seed in topology_seeds(cfg.seed, size, cfg.topologies)
    ]
    workers = 1 if cfg.timing_strict else cfg.workers
    console.info(f"Benchmark: {len(tasks)} topologies x {len(cells)} cells, {workers} worker(s).")

    records: List[BenchRecord] = []
    if workers == 1:
        for task in console.get_progress_tracker(tasks, description="[bold yellow]Scheduling topologies...[/bold yellow]"):
            records.extend(_run_topology(task))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = pool.map(_run_topology, tasks)
            for batch in console.get_progress_tracker(results, total=len(tasks), description="[bold yellow]Scheduling topologies...[/bold yellow]"):
                records.extend(batch)

    failed = sum(record.status == "failed" for record in records)
    if failed:
        console.warning(f"{failed} of {len(records)} records failed.")
    else:
        console.success(f"Benchmark finished: {len(records)} records.")
    return records


# --- Record I/O ---

def records_frame(records: Iterable[BenchRecord]) -> pd.DataFrame:
    frame = pd.DataFrame([record.model_dump(mode="json") for record in records], columns=RECORD_COLUMNS)
    for column in INT_COLUMNS:
        frame[column] = frame[column].astype("Int64")
    frame["valid"] = frame["valid"].astype("boolean")
    return frame


def write_records(records: List[BenchRecord], path: Union[str, Path], fmt: str = "csv") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        path.write_text(json.dumps([record.model_dump(mode="json") for record in records], indent=2), encoding="utf-8")
    else:
        records_frame(records).to_csv(path, index=False)
    console.success(f"{len(records)} records written to {path}.")
    return path


def read_records(path: Union[str, Path]) -> List[BenchRecord]:
    """Reads records written by write_records; the format follows the file suffix."""
    path = Path(path)
    if path.suffix == ".json":
        return [BenchRecord.model_validate(item) for item in json.loads(path.read_text(encoding="utf-8"))]
    frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    return [
        BenchRecord.model_validate({key: (value if value != "" else None) for key, value in row.items()})
        for row in frame.to_dict(orient="records")
    ]


# --- Summaries ---

class BenchSummary(BaseModel):
    """The grouped summary tables of a benchmark run."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    groups: pd.DataFrame
    ratios: pd.DataFrame
    distance_to_best: pd.DataFrame
    growth: pd.DataFrame


def _grouped(ok: pd.DataFrame) -> pd.DataFrame:
    stats = ok.groupby(GROUP_KEYS, dropna=False).agg(
        n=("frame_slots", "size"),
        frame_slots_mean=("frame_slots", "mean"),
        frame_slots_std=("frame_slots", "std"),
        runtime_ms_mean=("runtime_ms", "mean"),
        runtime_ms_std=("runtime_ms", "std"),
    )
    return stats.reset_index()


def _ratios(ok: pd.DataFrame) -> pd.DataFrame:
    keys = ["size", "seed", "kind", "rho"]
    columns = keys + ["runtime_ms", "frame_slots"]
    schedex = ok.loc[ok["extension"] == Extension.SCHEDEX.value, columns]
    incrementer = ok.loc[ok["extension"] == Extension.INCREMENTER.value, columns]
    pairs = schedex.merge(incrementer, on=keys, suffixes=("_schedex", "_incrementer"))
    if pairs.empty:
        return pd.DataFrame(columns=["size", "kind", "rho", "pairs", "speedup_mean", "speedup_gmean", "size_ratio_mean"])
    pairs["speedup"] = pairs["runtime_ms_incrementer"] / pairs["runtime_ms_schedex"].clip(lower=1e-6)
    pairs["size_ratio"] = pairs["frame_slots_schedex"] / pairs["frame_slots_incrementer"]

    aggregations = dict(
        pairs=("speedup", "size"),
        speedup_mean=("speedup", "mean"),
        speedup_gmean=("speedup", lambda s: float(gmean(s))),
        size_ratio_mean=("size_ratio", "mean"),
    )
    per_kind = pairs.groupby(["size", "kind", "rho"]).agg(**aggregations).reset_index()
    overall = pairs.groupby(["size", "rho"]).agg(**aggregations).reset_index()
    overall.insert(1, "kind", "all")
    table = pd.concat([per_kind, overall], ignore_index=True)
    return table


def _distance_to_best(ok: pd.DataFrame) -> pd.DataFrame:
    frame = ok.copy()
    frame["rho_key"] = frame["rho"].fillna(-1.0)
    best = frame.groupby(["size", "seed", "extension", "rho_key"])["frame_slots"].transform("min")
    frame["distance"] = frame["frame_slots"] / best - 1.0
    table = frame.groupby(GROUP_KEYS, dropna=False)["distance"].mean().reset_index()
    return table.rename(columns={"distance": "distance_to_best_mean"})


def _growth(ok: pd.DataFrame) -> pd.DataFrame:
    frame = ok.loc[ok["extension"] != Extension.NONE.value].copy()
    if frame.empty:
        return pd.DataFrame(columns=["size", "extension", "rho", "growth_mean"])
    lowest = frame.groupby(["size", "extension"])["rho"].transform("min")
    base = frame.loc[frame["rho"] == lowest, ["size", "seed", "kind", "extension", "frame_slots"]]
    merged = frame.merge(base, on=["size", "seed", "kind", "extension"], suffixes=("", "_base"))
    merged["growth"] = merged["frame_slots"] / merged["frame_slots_base"] - 1.0
    table = merged.groupby(["size", "extension", "rho"])["growth"].mean().reset_index()
    return table.rename(columns={"growth": "growth_mean"})


def summarize(records: List[BenchRecord]) -> BenchSummary:
    """
    Mean and sample standard deviation per (size, kind, extension, rho), SchedEx vs
    Incrementer ratios on matched (seed, kind, rho) pairs, each kind's distance to the
    shortest frame and the frame-size growth against the lowest rho.
    """
    if not records:
        raise ValueError("Cannot summarize an empty record list.")
    everything = records_frame(records)
    everything["rho"] = everything["rho"].astype(float)
    ok = everything.loc[everything["status"] == "ok"].copy()
    ok["frame_slots"] = ok["frame_slots"].astype(float)
    ok["runtime_ms"] = ok["runtime_ms"].astype(float)

    present = set(map(tuple, everything[GROUP_KEYS].fillna(-1.0).itertuples(index=False)))
    kept = set(map(tuple, ok[GROUP_KEYS].fillna(-1.0).itertuples(index=False)))
    for group in sorted(present - kept, key=str):
        console.warning(f"No successful records for group {dict(zip(GROUP_KEYS, group))}; omitted.")

    return BenchSummary(
        groups=_grouped(ok),
        ratios=_ratios(ok),
        distance_to_best=_distance_to_best(ok),
        growth=_growth(ok),
    )


def display_summary(summary: BenchSummary) -> None:
    console.display_dataframe(summary.groups, "Frame size and runtime (mean / std)")
    console.display_dataframe(summary.ratios, "SchedEx vs Incrementer on matched pairs")
    console.display_dataframe(summary.distance_to_best, "Relative distance to the shortest frame")
    console.display_dataframe(summary.growth, "Frame growth against the lowest rho")
