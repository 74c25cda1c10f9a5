"""Atomic file output and the CSV formats of a run directory."""

from __future__ import annotations

import csv
import io
import os
import tempfile
from pathlib import Path

TIMESERIES_HEADER = ("k", "t_hours", "theta1", "theta2", "v_hat", "b_u", "bid", "f_hat",
                     "outcome", "spend", "surplus", "u", "energy")
SUMMARY_HEADER = ("total_spend", "total_surplus", "win_rate", "final_entropy", "steps")


def fmt(x) -> str:
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    return repr(float(x))  # shortest round-trip repr, up to 17 significant digits


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) if not isinstance(v, str) else v for v in row])
    return buf.getvalue()


def atomic_write_text(path: Path, text: str) -> None:
    """Write via a temp file in the same directory and rename into place."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_files_atomically(directory: Path, files: dict) -> None:
    """Stage every file first, then rename them all; nothing lands on failure."""
    directory = Path(directory)
    staged = []
    try:
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(dir=directory, prefix=f".{name}.", suffix=".tmp")
            staged.append((tmp, directory / name))
            with os.fdopen(fd, "w", newline="") as fh:
                fh.write(text)
        for tmp, final in staged:
            os.replace(tmp, final)
    except BaseException:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)
        raise


def read_csv(path: Path):
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"missing run file: {path}")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"empty run file: {path}")
    return rows[0], rows[1:]
