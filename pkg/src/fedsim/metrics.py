"""CSV metric emission with bit-stable formatting.

Reals are written with 17 significant digits so parsing the file recovers
every double exactly.  The wall-clock column is written as 0 by default:
measured timings vary between runs and would break byte-identical
reproducibility of the output, which the rest of the pipeline guarantees.
Pass ``timing=True`` to record real milliseconds instead.
"""
from __future__ import annotations

import csv
import io

from .errors import ContractError
from .fedloop import RoundRecord, Trace

CSV_HEADER = ["round", "train_loss", "grad_norm_sq", "eval_metric", "clients",
              "floor_events", "wall_ms"]


def _real(value) -> str:
    return "" if value is None else format(float(value), ".17g")


def format_metrics(trace: Trace, timing: bool = False) -> str:
    """Render a trace as CSV text (header + one row per round)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for rec in trace.records:
        writer.writerow([
            rec.t,
            _real(rec.train_loss),
            _real(rec.grad_norm_sq),
            _real(rec.eval_metric),
            ";".join(str(c) for c in rec.clients),
            rec.floor_events,
            _real(rec.wall_ms if timing else 0.0),
        ])
    return buf.getvalue()


def emit_metrics(trace: Trace, path, timing: bool = False) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(format_metrics(trace, timing=timing))


def parse_metrics(path) -> list[RoundRecord]:
    """Read an emitted CSV back into round records."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise ContractError(f"{path}: unexpected header {header}")
        records = []
        for row in reader:
            records.append(RoundRecord(
                t=int(row[0]),
                train_loss=float(row[1]),
                grad_norm_sq=float(row[2]) if row[2] else None,
                eval_metric=float(row[3]) if row[3] else None,
                clients=tuple(int(c) for c in row[4].split(";") if c),
                floor_events=int(row[5]),
                wall_ms=float(row[6]),
            ))
    return records
