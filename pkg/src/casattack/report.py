"""Curve tables and summaries written next to an experiment's result file."""

from __future__ import annotations

import csv
import io
import os
import tempfile
from pathlib import Path

import numpy as np

from .scenario import (RESULT_FILE, SUMMARY_FILE, ExperimentResult, dump_json,
                       metadata_block)


def _csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([f"{x:.12g}" if isinstance(x, float) else x for x in row])
    return buf.getvalue()


def _success_episode(report: dict) -> list[dict]:
    """Iteration records of the episode that produced the recorded success."""
    ep = report.get("success_episode")
    if ep is None:
        return []
    return [r for r in report.get("iterations", []) if r["episode"] == ep]


def failures_vs_trips(result: ExperimentResult) -> str | None:
    per_trip: dict[int, list[float]] = {}
    for rep in result.successes:
        for k, rec in enumerate(_success_episode(rep), start=1):
            per_trip.setdefault(k, []).append(rec["impact"] - k)
    if not per_trip:
        return None
    rows = [(k, float(np.mean(v)), float(min(v)), float(max(v))) for k, v in sorted(per_trip.items())]
    return _csv(["trip_index", "mean_cascaded", "min", "max"], rows)


def fragmentation_curves(result: ExperimentResult) -> dict[str, str]:
    long_rows = []
    per_step: dict[tuple[str, int], list[float]] = {}
    for rep in result.successes:
        series = {"rl": [r["impact"] for r in _success_episode(rep)]}
        for name, seq in rep.get("baselines", {}).items():
            series[name] = [f for _, f in seq]
        for method, values in series.items():
            for step, v in enumerate(values, start=1):
                long_rows.append((step, method, rep["index"], float(v)))
                per_step.setdefault((method, step), []).append(float(v))
    if not long_rows:
        return {}
    agg = [(step, method, float(np.mean(v)), float(min(v)), float(max(v)))
           for (method, step), v in sorted(per_step.items(), key=lambda kv: (kv[0][1], kv[0][0]))]
    return {
        "fragmentation_per_step.csv": _csv(["step", "method", "repetition", "fragmentation"],
                                           sorted(long_rows, key=lambda r: (r[2], r[1], r[0]))),
        "fragmentation_summary.csv": _csv(["step", "method", "mean", "min", "max"], agg),
    }


def reward_per_epoch(result: ExperimentResult) -> str | None:
    reps = [r for r in result.reports if "perturbed" in r]
    if not reps or not result.successes:
        return None
    u = np.mean([r["unperturbed"] for r in reps], axis=0)
    p = np.mean([r["perturbed"] for r in reps], axis=0)
    rows = [(e, float(a), float(b)) for e, (a, b) in enumerate(zip(u, p), start=1)]
    return _csv(["epoch", "unperturbed", "perturbed"], rows)


def basin_table(result: ExperimentResult) -> str | None:
    reps = [r for r in result.reports if "labels" in r]
    if not reps:
        return None
    r = reps[0]
    return _csv(["x", "label"], [(float(x), int(lab)) for x, lab in zip(r["centres"], r["labels"])])


def render(result: ExperimentResult) -> dict[str, str]:
    """File name -> content for everything an experiment writes."""
    files = {RESULT_FILE: dump_json(result.to_dict())}
    summary = {"scenario": result.config.kind, "name": result.config.name,
               "seed": result.config.seed, "aggregates": result.aggregates,
               "failed_repetitions": result.failures,
               "metadata": metadata_block(result)}
    files[SUMMARY_FILE] = dump_json(summary)
    kind = result.config.kind
    if kind == "grid-cascade":
        text = failures_vs_trips(result)
        if text:
            files["failures_vs_trips.csv"] = text
    elif kind in ("net-fragmentation", "formation-destabilize"):
        files.update(fragmentation_curves(result))
    elif kind == "policy-induction":
        text = reward_per_epoch(result)
        if text:
            files["reward_per_epoch.csv"] = text
    elif kind == "dynamics-demo":
        text = basin_table(result)
        if text:
            files["basins.csv"] = text
    return files


def emit_curves(result: ExperimentResult, path) -> list[Path]:
    """Write the result, summary and curve CSVs into directory ``path``.

    Every file is first written to a temporary name; only when all of them
    exist are they renamed into place, so a failure leaves no partial set.
    """
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    files = render(result)
    staged: list[tuple[str, Path]] = []
    try:
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(dir=out, prefix=f".{name}.", suffix=".tmp")
            staged.append((tmp, out / name))
            try:
                fh = os.fdopen(fd, "w", encoding="utf-8", newline="")
            except BaseException:
                os.close(fd)
                raise
            with fh:
                fh.write(text)
    except BaseException:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)
        raise
    for tmp, final in staged:
        os.replace(tmp, final)
    return [final for _, final in staged]
