"""
Field snapshots and solve results on disk.

A snapshot is a pair of files: ``<stem>.json``, a sidecar with the grid,
caller metadata and a checksum (sorted keys), and ``<stem>.f8``, the
row-major values as little-endian float64.
"""

import hashlib
import json
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

from ..grid import Field, make_grid
from ..solver import SolveResult, TraceRecord
from ..utils import get_logger, log_function_call, ChoquardError

logger = get_logger(__name__)

SNAPSHOT_FORMAT = 1
RESULT_NAME = "result.json"
FIELD_STEM = "field"


class SnapshotError(ChoquardError):
    """Snapshot files are missing, truncated or inconsistent."""


def _dump(data: Dict[str, Any]) -> str:
    return json.dumps(data, sort_keys=True, indent=2) + "\n"


class SnapshotTools:
    """Read and write fields and solve results under a run directory."""

    def write_snapshot(self, stem: Union[str, Path], field: Field,
                       metadata: Optional[Dict[str, Any]] = None) -> Path:
        stem = Path(stem)
        stem.parent.mkdir(parents=True, exist_ok=True)
        payload = np.ascontiguousarray(field.values, dtype="<f8").tobytes()
        sidecar = {
            "format": SNAPSHOT_FORMAT,
            "grid": {
                "dim": field.grid.dim,
                "points_per_axis": field.grid.points_per_axis,
                "half_extent": field.grid.half_extent,
            },
            "dtype": "<f8",
            "order": "C",
            "sha256": hashlib.sha256(payload).hexdigest(),
            "metadata": metadata or {},
        }
        stem.with_suffix(".f8").write_bytes(payload)
        stem.with_suffix(".json").write_text(_dump(sidecar), encoding="utf-8")
        logger.debug("Snapshot written", **log_function_call("write_snapshot", stem=str(stem)))
        return stem

    def read_snapshot(self, stem: Union[str, Path]) -> Tuple[Field, Dict[str, Any]]:
        stem = Path(stem)
        try:
            sidecar = json.loads(stem.with_suffix(".json").read_text(encoding="utf-8"))
            payload = stem.with_suffix(".f8").read_bytes()
        except (OSError, json.JSONDecodeError) as e:
            raise SnapshotError(f"cannot read snapshot {stem}: {e}")
        if sidecar.get("format") != SNAPSHOT_FORMAT:
            raise SnapshotError(f"unsupported snapshot format {sidecar.get('format')!r}")
        if hashlib.sha256(payload).hexdigest() != sidecar.get("sha256"):
            raise SnapshotError(f"snapshot payload {stem}.f8 does not match its checksum")
        grid = make_grid(**sidecar["grid"])
        values = np.frombuffer(payload, dtype="<f8")
        if values.size != grid.size:
            raise SnapshotError(f"snapshot has {values.size} values, grid expects {grid.size}")
        return Field(grid, values.astype(np.float64).reshape(grid.shape)), sidecar["metadata"]

    def save_result(self, directory: Union[str, Path], result: SolveResult,
                    extra: Optional[Dict[str, Any]] = None) -> Path:
        """Field snapshot plus ``result.json`` with the scalars and trace."""
        directory = Path(directory)
        self.write_snapshot(directory / FIELD_STEM, result.field,
                            {"eps": result.eps, "lam": result.lam})
        summary = {
            "energy": result.energy,
            "residual_rel": result.residual_rel,
            "iterations": result.iterations,
            "converged": result.converged,
            "critical_value": result.critical_value,
            "lam": result.lam,
            "eps": result.eps,
            "pre_clamp_min": result.pre_clamp_min,
            "trace": [[t.iteration, t.energy, t.residual, t.step] for t in result.trace],
            "extra": extra or {},
        }
        (directory / RESULT_NAME).write_text(_dump(summary), encoding="utf-8")
        logger.info("Result saved", directory=str(directory), converged=result.converged)
        return directory

    def load_result(self, directory: Union[str, Path]) -> Optional[SolveResult]:
        """The saved result, or None when the directory holds no complete result."""
        directory = Path(directory)
        if not (directory / RESULT_NAME).exists():
            return None
        try:
            summary = json.loads((directory / RESULT_NAME).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise SnapshotError(f"cannot read {directory / RESULT_NAME}: {e}")
        field, _ = self.read_snapshot(directory / FIELD_STEM)
        trace = tuple(TraceRecord(int(i), e, r, s) for i, e, r, s in summary["trace"])
        return SolveResult(
            field=field,
            energy=summary["energy"],
            residual_rel=summary["residual_rel"],
            iterations=summary["iterations"],
            converged=summary["converged"],
            trace=trace,
            critical_value=summary["critical_value"],
            lam=summary["lam"],
            eps=summary["eps"],
            pre_clamp_min=summary["pre_clamp_min"],
        )


# Global instance
snapshot_tools = SnapshotTools()


def write_snapshot(stem: Union[str, Path], field: Field, metadata: Optional[Dict[str, Any]] = None) -> Path:
    return snapshot_tools.write_snapshot(stem, field, metadata)


def read_snapshot(stem: Union[str, Path]) -> Tuple[Field, Dict[str, Any]]:
    return snapshot_tools.read_snapshot(stem)


def save_result(directory: Union[str, Path], result: SolveResult,
                extra: Optional[Dict[str, Any]] = None) -> Path:
    return snapshot_tools.save_result(directory, result, extra)


def load_result(directory: Union[str, Path]) -> Optional[SolveResult]:
    return snapshot_tools.load_result(directory)
