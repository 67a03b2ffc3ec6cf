"""CSV/JSON result files.

``epochs.csv``   one row per (replication, epoch, mechanism), columns ``EPOCH_COLUMNS``
``summary.csv``  long format, one row per (epoch, mechanism, metric), columns ``SUMMARY_COLUMNS``
``run.json``     resolved config, master seed, package version, optional oracle check
"""

from __future__ import annotations

import csv
import dataclasses
import json
from pathlib import Path
from typing import Any

from eswm.config import config_to_dict
from eswm.sim import MECHANISMS, METRICS, ExperimentResult

EPOCH_COLUMNS = ("replication", "epoch", "mechanism") + METRICS
SUMMARY_COLUMNS = ("epoch", "mechanism", "metric", "mean", "half_width", "replications")


def _fmt(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_epochs(result: ExperimentResult, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(EPOCH_COLUMNS)
        for rep, traces in enumerate(result.traces):
            for trace in traces:
                for mech in MECHANISMS:
                    rec = trace[mech]
                    writer.writerow([rep, trace.epoch, mech] + [_fmt(getattr(rec, m)) for m in METRICS])


def write_summary(result: ExperimentResult, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        for row in result.summary:
            writer.writerow([_fmt(getattr(row, c)) for c in SUMMARY_COLUMNS])


def run_metadata(result: ExperimentResult) -> dict[str, Any]:
    from eswm import __version__

    meta: dict[str, Any] = {
        "version": __version__,
        "seed": result.config.seed,
        "config": config_to_dict(result.config),
    }
    if result.oracle is not None:
        meta["oracle"] = dataclasses.asdict(result.oracle)
    return meta


def emit_results(result: ExperimentResult, out_dir: str | Path | None = None) -> dict[str, Path]:
    """Write the three result files and return their paths."""
    out = Path(out_dir if out_dir is not None else result.config.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        paths = {"epochs": out / "epochs.csv", "summary": out / "summary.csv", "run": out / "run.json"}
        write_epochs(result, paths["epochs"])
        write_summary(result, paths["summary"])
        paths["run"].write_text(json.dumps(run_metadata(result), indent=2) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write results to {out}: {exc}") from exc
    return paths
