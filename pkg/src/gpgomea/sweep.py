"""Multi-run sweeps over hyper-parameter grids, seeds, and datasets.

A sweep executes the full Cartesian product of the grid, writing one CSV
row per run as soon as it finishes (crash-safe append). Re-running the same
sweep skips rows already present in the results file. Per-run failures are
recorded in the row's error column and do not stop the sweep. Numeric
fields are written with ``repr`` so re-parsing reproduces them bit-exactly.
"""

from __future__ import annotations

import csv
import itertools
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from statistics import median
from typing import Optional

from .data import load_csv
from .engine import RunConfig, run
from .errors import ConfigError
from .mutation import CoeffMutConfig, MutationType, Strategy

# Flags that may take several values (the coefficient-mutation surface plus
# template depth); everything else in a sweep file must be single-valued.
GRID_KEYS = ("strategy", "prob", "mut", "tau", "decay", "patience", "depth")

_KEY_COLUMNS = ("dataset", "seed") + GRID_KEYS
_RESULT_COLUMNS = (
    "pop",
    "budget",
    "batch",
    "train_mse",
    "test_mse",
    "test_r2",
    "evaluations",
    "generations",
    "wall_time",
    "error",
)
CSV_COLUMNS = _KEY_COLUMNS + _RESULT_COLUMNS


@dataclass
class SweepSpec:
    """Parsed sweep description: grid x seeds x datasets plus fixed settings."""

    grid: dict = field(default_factory=dict)
    seeds: list = field(default_factory=lambda: [0])
    datasets: list = field(default_factory=list)
    test_datasets: Optional[list] = None
    target: str = "y"
    population_size: int = 1000
    budget: int = 1_000_000
    batch_size: int = 256
    threads: int = 1
    workers: int = 1

    def __post_init__(self):
        for key in self.grid:
            if key not in GRID_KEYS:
                raise ConfigError(f"{key!r} cannot be swept; grid keys are {GRID_KEYS}")
        if not self.datasets:
            raise ConfigError("sweep needs at least one dataset")
        if self.test_datasets is not None and len(self.test_datasets) != len(self.datasets):
            raise ConfigError("test_datasets must pair up with datasets")

    def combinations(self) -> list[dict]:
        """One dict per planned run, covering grid x seeds x datasets."""
        keys = [k for k in GRID_KEYS if k in self.grid]
        value_lists = [self.grid[k] for k in keys]
        combos = []
        for di, dataset in enumerate(self.datasets):
            test = self.test_datasets[di] if self.test_datasets else None
            for seed in self.seeds:
                for values in itertools.product(*value_lists) if keys else [()]:
                    combo = {
                        "dataset": dataset,
                        "test_dataset": test,
                        "seed": int(seed),
                        "strategy": "never",
                        "prob": 0.9,
                        "mut": "temp",
                        "tau": 0.1,
                        "decay": None,
                        "patience": None,
                        "depth": 4,
                    }
                    combo.update(dict(zip(keys, values)))
                    combos.append(combo)
        return combos


def _parse_scalar(key: str, raw: str):
    raw = raw.strip()
    lowered = raw.lower()
    if key in ("decay", "patience") and lowered in ("none", "inf", "infinite"):
        return None
    if key in ("strategy", "mut", "target"):
        return lowered if key != "target" else raw
    if key in ("seed", "patience", "depth", "pop", "budget", "batch", "threads", "workers"):
        return int(raw)
    return float(raw)


def parse_sweep_file(path) -> SweepSpec:
    """Read the flat ``key = v1,v2,...`` sweep format; '#' starts a comment."""
    entries: dict[str, list] = {}
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}: line {line_no}: expected 'key = values'")
            key, _, raw_values = line.partition("=")
            key = key.strip().lower()
            if key in ("datasets", "test_datasets"):
                values: list = [v.strip() for v in raw_values.split(",") if v.strip()]
            else:
                values = [_parse_scalar(key, v) for v in raw_values.split(",") if v.strip()]
            if not values:
                raise ConfigError(f"{path}: line {line_no}: no values for {key!r}")
            entries[key] = values

    def single(key: str, default):
        values = entries.pop(key, None)
        if values is None:
            return default
        if len(values) > 1:
            raise ConfigError(f"{key!r} must be single-valued in a sweep file")
        return values[0]

    spec = SweepSpec(
        grid={},
        seeds=entries.pop("seeds", [0]),
        datasets=entries.pop("datasets", []),
        test_datasets=entries.pop("test_datasets", None),
        target=single("target", "y"),
        population_size=single("pop", 1000),
        budget=single("budget", 1_000_000),
        batch_size=single("batch", 256),
        threads=single("threads", 1),
        workers=single("workers", 1),
    )
    for key in list(entries):
        if key in GRID_KEYS:
            spec.grid[key] = entries.pop(key)
    if entries:
        raise ConfigError(f"{path}: unknown sweep keys {sorted(entries)}")
    spec.__post_init__()
    return spec


def config_for_combo(combo: dict, spec: SweepSpec) -> RunConfig:
    coeffmut = CoeffMutConfig(
        strategy=Strategy(combo["strategy"]),
        probability=float(combo["prob"]),
        mut_type=MutationType(combo["mut"]),
        tau=float(combo["tau"]),
        decay=combo["decay"],
        patience=combo["patience"],
    )
    return RunConfig(
        population_size=spec.population_size,
        depth=int(combo["depth"]),
        budget=spec.budget,
        batch_size=spec.batch_size,
        seed=combo["seed"],
        coeffmut=coeffmut,
        threads=spec.threads,
    )


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def _combo_key(combo: dict) -> tuple:
    return tuple(_fmt(combo[k]) for k in _KEY_COLUMNS)


def _run_combo(args: tuple) -> dict:
    combo, spec = args
    row = {k: combo[k] for k in _KEY_COLUMNS}
    row.update(
        pop=spec.population_size,
        budget=spec.budget,
        batch=spec.batch_size,
        train_mse=None,
        test_mse=None,
        test_r2=None,
        evaluations=None,
        generations=None,
        wall_time=None,
        error="",
    )
    started = time.perf_counter()
    try:
        data = load_csv(combo["dataset"], spec.target)
        test = load_csv(combo["test_dataset"], spec.target) if combo["test_dataset"] else None
        report = run(config_for_combo(combo, spec), data, test)
        row.update(
            train_mse=report.best_train_mse_fullset,
            test_mse=report.test_mse,
            test_r2=report.test_r2,
            evaluations=report.evaluations_used,
            generations=report.generations,
        )
    except Exception as exc:  # per-run failures become rows, sweep continues
        row["error"] = f"{type(exc).__name__}: {exc}"
    row["wall_time"] = time.perf_counter() - started
    return row


def _existing_keys(results_path) -> set[tuple]:
    if not os.path.exists(results_path):
        return set()
    with open(results_path, newline="") as fh:
        reader = csv.DictReader(fh)
        return {tuple(r[k] for k in _KEY_COLUMNS) for r in reader}


def run_sweep(spec: SweepSpec, results_path) -> list[dict]:
    """Execute every (grid x seed x dataset) combination not already present
    in the results file; append one row per finished run."""
    done = _existing_keys(results_path)
    pending = [c for c in spec.combinations() if _combo_key(c) not in done]
    write_header = not os.path.exists(results_path) or os.path.getsize(results_path) == 0
    rows = []
    with open(results_path, "a", newline="") as fh:
        writer = csv.writer(fh)
        if write_header:
            writer.writerow(CSV_COLUMNS)
            fh.flush()

        def emit(row: dict) -> None:
            writer.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
            fh.flush()
            rows.append(row)

        if spec.workers > 1:
            with ProcessPoolExecutor(max_workers=spec.workers) as pool:
                for row in pool.map(_run_combo, [(c, spec) for c in pending]):
                    emit(row)
        else:
            for combo in pending:
                emit(_run_combo((combo, spec)))
    return rows


def load_results(results_path) -> list[dict]:
    """Re-parse a results CSV, restoring numeric fields bit-exactly."""
    out = []
    with open(results_path, newline="") as fh:
        for record in csv.DictReader(fh):
            row: dict = dict(record)
            row["seed"] = int(record["seed"])
            row["depth"] = int(record["depth"])
            for key in ("prob", "tau", "decay", "train_mse", "test_mse", "test_r2", "wall_time"):
                row[key] = float(record[key]) if record[key] else None
            for key in ("patience", "pop", "budget", "batch", "evaluations", "generations"):
                row[key] = int(record[key]) if record[key] else None
            out.append(row)
    return out


def summarize_medians(rows: list[dict]) -> list[dict]:
    """Median train/test MSE over seeds for each (dataset, configuration)."""
    config_cols = ("dataset",) + tuple(k for k in GRID_KEYS)
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        if row.get("error"):
            continue
        groups.setdefault(tuple(_fmt(row[c]) for c in config_cols), []).append(row)
    summary = []
    for key in sorted(groups):
        members = groups[key]
        entry = dict(zip(config_cols, key))
        entry["n_runs"] = len(members)
        entry["median_train_mse"] = median(r["train_mse"] for r in members)
        test_values = [r["test_mse"] for r in members if r.get("test_mse") is not None]
        entry["median_test_mse"] = median(test_values) if test_values else None
        summary.append(entry)
    return summary
