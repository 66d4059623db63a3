"""
Persistence helpers for runs: field snapshots, solve results and CSV tables.
"""

from .snapshot_tools import (
    SnapshotError,
    write_snapshot,
    read_snapshot,
    save_result,
    load_result,
    snapshot_tools,
)

from .table_tools import (
    SweepRow,
    SweepTable,
    format_value,
    write_csv,
    read_csv,
    radial_profile_rows,
    write_radial_profile,
    write_overlay,
)

__all__ = [
    # Snapshot tools
    "SnapshotError",
    "write_snapshot",
    "read_snapshot",
    "save_result",
    "load_result",
    "snapshot_tools",

    # Table tools
    "SweepRow",
    "SweepTable",
    "format_value",
    "write_csv",
    "read_csv",
    "radial_profile_rows",
    "write_radial_profile",
    "write_overlay",
]
