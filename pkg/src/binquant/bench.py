"""Benchmark sweep: quantized-training grid vs. a full-precision baseline.

The grid is {bc, median_bc, br} x {cold, warm} x {blend off, blend on},
each cell averaged over N seeds (cell seed = base seed + s).  One
full-precision run per seed is trained first; its checkpoint is the warm
start for that seed's warm cells and its mean accuracy is the reference
column of every row.  Cells are independent, so they can run across
processes; aggregation sorts by a canonical grid order, making the report
byte-identical regardless of worker scheduling.
"""

from __future__ import annotations

import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, resolve_model_spec
from .datasets import generate
from .reporting import ResultRow
from .training import run_experiment, train_full_precision

__all__ = ["BLEND_RHO", "GRID_ALGORITHMS", "GRID_STARTS", "run_bench"]

GRID_ALGORITHMS = ("median_bc", "bc", "br")
GRID_STARTS = ("cold", "warm")
BLEND_RHO = 1e-5


def _seed_tag(seed: int) -> str:
    return f"seed{seed}"


def _baseline_path(out_dir: Path, seed: int) -> Path:
    return out_dir / "checkpoints" / f"baseline_{_seed_tag(seed)}.qtns"


def _run_baseline(cfg: ExperimentConfig, seed: int, out_dir: str) -> float:
    train_ds, test_ds = generate(cfg.data)
    spec = resolve_model_spec(cfg, train_ds)
    config = replace(cfg.train, seed=seed)
    path = _baseline_path(Path(out_dir), seed)
    _, row = train_full_precision(config, train_ds, test_ds, spec,
                                  checkpoint_path=path)
    return row.accuracy


def _run_cell(cfg: ExperimentConfig, algorithm: str, start: str, rho: float,
              seed: int, out_dir: str) -> float:
    train_ds, test_ds = generate(cfg.data)
    spec = resolve_model_spec(cfg, train_ds)
    warm_source = str(_baseline_path(Path(out_dir), seed)) if start == "warm" else None
    config = replace(cfg.train, algorithm=algorithm, start=start,
                     warm_source=warm_source, blend_rho=rho, seed=seed)
    state, row = run_experiment(config, train_ds, test_ds, spec)
    return row.accuracy


def _mean_std(values: list[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    std = float(np.std(arr, ddof=1)) if arr.size > 1 else 0.0
    return float(np.mean(arr)), std


def run_bench(cfg: ExperimentConfig, seeds: int, jobs: int, out_dir) -> list[ResultRow]:
    """Run the full grid and return 13 aggregate rows (baseline + 12 cells)."""
    if seeds < 1:
        raise ValueError("seeds must be >= 1")
    if jobs < 1:
        raise ValueError("jobs must be >= 1")
    out_dir = Path(out_dir)
    (out_dir / "checkpoints").mkdir(parents=True, exist_ok=True)
    seed_list = [cfg.train.seed + s for s in range(seeds)]

    # Stage 1: one full-precision run per seed (checkpoints feed warm cells).
    baseline_args = [(cfg, seed, str(out_dir)) for seed in seed_list]
    baseline_acc = _map_jobs(_run_baseline, baseline_args, jobs)

    # Stage 2: the quantized grid.
    cells = [(algorithm, start, rho)
             for start in GRID_STARTS
             for rho in (0.0, BLEND_RHO)
             for algorithm in GRID_ALGORITHMS]
    cell_args = [(cfg, algorithm, start, rho, seed, str(out_dir))
                 for (algorithm, start, rho) in cells for seed in seed_list]
    cell_acc = _map_jobs(_run_cell, cell_args, jobs)

    reference, _ = _mean_std([a for a in baseline_acc if a is not None])
    seeds_label = f"{seed_list[0]}..{seed_list[-1]}" if seeds > 1 else str(seed_list[0])

    rows = [_aggregate("none", "cold", 0.0, baseline_acc, seeds_label, reference)]
    for i, (algorithm, start, rho) in enumerate(cells):
        accs = cell_acc[i * seeds:(i + 1) * seeds]
        rows.append(_aggregate(algorithm, start, rho, accs, seeds_label, reference))
    return rows


def _aggregate(algorithm: str, start: str, rho: float,
               accs: list, seeds_label: str, reference: float) -> ResultRow:
    ok = [a for a in accs if a is not None]
    if not ok:
        return ResultRow(algorithm=algorithm, start=start, blend=rho > 0.0,
                         seeds=seeds_label, accuracy=float("nan"),
                         accuracy_std=None, reference=reference)
    mean, std = _mean_std(ok)
    return ResultRow(algorithm=algorithm, start=start, blend=rho > 0.0,
                     seeds=seeds_label, accuracy=mean, accuracy_std=std,
                     reference=reference)


def _call(payload):
    fn, args = payload
    return fn(*args)


def _map_jobs(fn, args_list, jobs: int) -> list:
    """Run fn over args_list, serially or in a process pool.  A failed run
    is reported on stderr and yields None; the sweep continues."""
    results: list = [None] * len(args_list)
    if jobs == 1:
        for i, args in enumerate(args_list):
            try:
                results[i] = fn(*args)
            except Exception as e:  # noqa: BLE001 - keep the sweep alive
                print(f"warning: {fn.__name__}{_describe(args)} failed: {e}",
                      file=sys.stderr)
        return results
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(_call, (fn, args)) for args in args_list]
        for i, fut in enumerate(futures):
            try:
                results[i] = fut.result()
            except Exception as e:  # noqa: BLE001
                print(f"warning: {fn.__name__}{_describe(args_list[i])} failed: {e}",
                      file=sys.stderr)
    return results


def _describe(args) -> str:
    parts = [str(a) for a in args[1:] if not isinstance(a, str) or "/" not in a]
    return "(" + ", ".join(parts) + ")"
