"""
Plot-ready CSV tables.

Numbers are written with 17 significant digits and '\\n' line endings so
tables round-trip bit for bit.
"""

import csv
import math
from dataclasses import dataclass, field as dataclass_field
from pathlib import Path
from typing import Any, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..grid import Field, as_point
from ..utils import get_logger

logger = get_logger(__name__)


def format_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.17g}"
    return str(value)


def write_csv(path: Union[str, Path], header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        count = 0
        for row in rows:
            writer.writerow([format_value(v) for v in row])
            count += 1
    logger.debug("Table written", path=str(path), rows=count)
    return path


def read_csv(path: Union[str, Path]) -> Tuple[List[str], List[List[str]]]:
    with Path(path).open(newline="", encoding="utf-8") as handle:
        rows = list(csv.reader(handle))
    return rows[0], rows[1:]


# Sweep table

SWEEP_COLUMNS = (
    "eps", "energy", "scaled_energy", "a_eps", "v_at_a", "scaled_mass",
    "sup_outside", "sup_outer_annulus", "unpenalized", "hardy_kappa", "hardy_product",
    "sup_h_outside", "residual", "iterations", "converged",
)


@dataclass(frozen=True)
class SweepRow:
    eps: float
    energy: float
    scaled_energy: float
    a_eps: Tuple[float, ...]
    v_at_a: float
    scaled_mass: float
    sup_outside: float
    sup_outer_annulus: float
    unpenalized: Optional[bool]
    hardy_kappa: Optional[float]
    hardy_product: Optional[float]
    sup_h_outside: Optional[float]
    residual: float
    iterations: int
    converged: bool


@dataclass
class SweepTable:
    """One row per eps, eps strictly decreasing down the table."""

    rows: List[SweepRow] = dataclass_field(default_factory=list)

    def append(self, row: SweepRow) -> None:
        if self.rows and not row.eps < self.rows[-1].eps:
            raise ValueError(f"sweep rows must have strictly decreasing eps ({row.eps} after {self.rows[-1].eps})")
        self.rows.append(row)

    def column(self, name: str) -> List[Any]:
        return [getattr(row, name) for row in self.rows]

    def header(self) -> List[str]:
        dim = len(self.rows[0].a_eps) if self.rows else 1
        names: List[str] = []
        for name in SWEEP_COLUMNS:
            if name == "a_eps":
                names.extend(f"a_eps_{i}" for i in range(dim))
            else:
                names.append(name)
        return names

    def records(self) -> List[List[Any]]:
        out = []
        for row in self.rows:
            record: List[Any] = []
            for name in SWEEP_COLUMNS:
                value = getattr(row, name)
                if name == "a_eps":
                    record.extend(value)
                else:
                    record.append(value)
            out.append(record)
        return out

    def write(self, path: Union[str, Path]) -> Path:
        return write_csv(path, self.header(), self.records())


# Profiles

def axis_line(field: Field, center: Union[float, Sequence[float]] = 0.0) -> Tuple[np.ndarray, np.ndarray]:
    """Values along the first axis through the grid node nearest ``center``."""
    grid = field.grid
    center = as_point(center, grid.dim)
    axis = grid.axis()
    index = [slice(None)] + [int(np.argmin(np.abs(axis - c))) for c in center[1:]]
    return axis - center[0], field.values[tuple(index)]


def radial_profile_rows(field: Field, center: Union[float, Sequence[float]] = 0.0) -> List[Tuple[float, float]]:
    """(r, value) pairs on the half line r >= 0 along the first axis."""
    offsets, values = axis_line(field, center)
    keep = offsets >= 0.0
    return list(zip(offsets[keep].tolist(), values[keep].tolist()))


def write_radial_profile(path: Union[str, Path], field: Field,
                         center: Union[float, Sequence[float]] = 0.0) -> Path:
    return write_csv(path, ("r", "value"), radial_profile_rows(field, center))


def write_overlay(path: Union[str, Path], rescaled: Field, limiting: Field) -> Path:
    """Rescaled solution against the limiting ground state, both on the limiting grid."""
    if rescaled.grid != limiting.grid:
        raise ValueError("overlay fields must share a grid")
    y, v = axis_line(rescaled)
    _, w = axis_line(limiting)
    return write_csv(path, ("y", "rescaled", "limiting"), zip(y.tolist(), v.tolist(), w.tolist()))
