"""Reading and validating the sweep CSV emitted by the madrop CLI."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

SCHEMA_VERSION = "1"
REQUIRED_COLUMNS = ("schema_version", "scheme", "B", "N", "theta_tar",
                    "eb_n0_db", "theta_r_star", "theta_lim", "delta_measure")


class SchemaError(ValueError):
    """CSV does not carry the sweep schema this tool understands."""


@dataclass(frozen=True)
class SweepRow:
    scheme: str
    B: int
    N: int
    theta_tar: float
    eb_n0_db: float
    theta_lim: float | None
    delta_measure: float | None


def _opt_float(value: str) -> float | None:
    return float(value) if value not in ("", None) else None


def read_sweep(path: str | Path) -> list[SweepRow]:
    """Parse and validate a sweep CSV; failed grid points are skipped."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in REQUIRED_COLUMNS if c not in header]
        if missing:
            raise SchemaError(f"{path}: missing column(s) {missing}")
        rows = []
        for i, raw in enumerate(reader, start=2):
            if raw["schema_version"] != SCHEMA_VERSION:
                raise SchemaError(
                    f"{path}:{i}: schema_version {raw['schema_version']!r}, "
                    f"this tool reads version {SCHEMA_VERSION}")
            if raw.get("error"):
                continue
            rows.append(SweepRow(
                scheme=raw["scheme"],
                B=int(raw["B"]),
                N=int(raw["N"]),
                theta_tar=float(raw["theta_tar"]),
                eb_n0_db=float(raw["eb_n0_db"]),
                theta_lim=_opt_float(raw.get("theta_lim")),
                delta_measure=_opt_float(raw.get("delta_measure")),
            ))
    if not rows:
        raise SchemaError(f"{path}: no usable data rows")
    return rows
