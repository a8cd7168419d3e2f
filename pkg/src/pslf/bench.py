"""Run specs, report files and mean/std benchmark rows."""
from __future__ import annotations

import json
import math
import os
import time
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .data import HdiMatrix, Partition, density, partition, write_manifest
from .trainers import TrainConfig, TrainReport, train

BENCH_COLUMNS = ("dataset", "model", "runs", "rmse_mean", "rmse_std", "time_mean_sec",
                 "time_std_sec", "epochs_mean", "epochs_std", "status")


@dataclass
class BenchRow:
    dataset: str
    model: str
    runs: int
    rmse_mean: float
    rmse_std: float
    time_mean_sec: float
    time_std_sec: float
    epochs_mean: float
    epochs_std: float
    status: str = "ok"

    def tsv(self) -> str:
        return "\t".join([
            self.dataset, self.model, str(self.runs),
            f"{self.rmse_mean:.5f}", f"{self.rmse_std:.5f}",
            f"{self.time_mean_sec:.3f}", f"{self.time_std_sec:.3f}",
            f"{self.epochs_mean:.2f}", f"{self.epochs_std:.2f}", self.status,
        ])


def aggregate(dataset: str, model: str, results: Sequence[dict | None]) -> BenchRow:
    """Mean and population std over the per-seed run summaries.

    ``None`` entries are failed runs; any failure marks the row failed.
    """
    ok = [r for r in results if r is not None]
    status = "ok" if len(ok) == len(results) and ok else "failed"
    if not ok:
        nan = math.nan
        return BenchRow(dataset, model, 0, nan, nan, nan, nan, nan, nan, status)
    rm = np.array([r["test_rmse"] for r in ok])
    tm = np.array([r["time_sec"] for r in ok])
    ep = np.array([r["epochs"] for r in ok], dtype=float)
    return BenchRow(dataset, model, len(ok), float(rm.mean()), float(rm.std()),
                    float(tm.mean()), float(tm.std()), float(ep.mean()), float(ep.std()), status)


def write_bench_table(rows: Sequence[BenchRow], path: str | os.PathLike) -> str:
    text = "\t".join(BENCH_COLUMNS) + "\n" + "".join(r.tsv() + "\n" for r in rows)
    with open(path, "w") as fh:
        fh.write(text)
    return text


def dataset_summary(matrix: HdiMatrix) -> dict:
    return {"users": matrix.num_users, "items": matrix.num_items,
            "ratings": matrix.num_entries, "density": density(matrix)}


def run_once(matrix: HdiMatrix, cfg: TrainConfig, seed: int, ratios=(0.6, 0.2, 0.2),
             clock=time.perf_counter) -> tuple[Partition, TrainReport, float]:
    """Partition with ``seed``, train with ``cfg`` seeded by ``seed``.

    Returns the partition, the report and the wall time in seconds for
    partitioning plus training.
    """
    t0 = clock()
    part = partition(matrix, ratios, seed)
    t_part = clock() - t0
    report = train(part, replace(cfg, seed=seed), clock)
    return part, report, t_part + report.time_sec


def report_document(report: TrainReport, matrix: HdiMatrix, dataset: str, seed: int,
                    total_time: float, ratios=(0.6, 0.2, 0.2), include_ids=True) -> dict:
    doc = {
        "dataset": dataset,
        "dataset_summary": dataset_summary(matrix),
        "partition": {"seed": seed, "ratios": list(ratios), "rng": "numpy PCG64"},
        "total_time_sec": total_time,
        **report.to_dict(),
    }
    if include_ids:
        doc["user_ids"] = list(matrix.user_ids)
        doc["item_ids"] = list(matrix.item_ids)
    return doc


def write_run(out_dir: str | os.PathLike, report: TrainReport, part: Partition,
              matrix: HdiMatrix, dataset: str, seed: int, total_time: float,
              ratios=(0.6, 0.2, 0.2)) -> str:
    os.makedirs(out_dir, exist_ok=True)
    write_manifest(part, os.path.join(out_dir, "manifest"))
    path = os.path.join(out_dir, "report.json")
    with open(path, "w") as fh:
        json.dump(report_document(report, matrix, dataset, seed, total_time, ratios), fh, indent=1)
    with open(os.path.join(out_dir, "epochs.tsv"), "w") as fh:
        fh.write("epoch\ttrain_rmse\tvalid_rmse\ttime_sec\tcg_iters\n")
        for r in report.records:
            fh.write(f"{r.epoch}\t{r.train_rmse:.5f}\t{r.valid_rmse:.5f}\t"
                     f"{r.time_sec:.3f}\t{r.cg_iters}\n")
    return path
