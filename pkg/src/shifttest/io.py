"""Reading and writing series as one-value-per-line CSV files."""

from __future__ import annotations

from pathlib import Path
from typing import Literal

import numpy as np

from .core import SeriesSegment, ShiftTestError

__all__ = ["SeriesParseError", "read_series", "write_series", "format_value"]


class SeriesParseError(ShiftTestError):
    """A series file could not be read or parsed."""

    def __init__(self, path, message: str, line: int | None = None):
        self.path = str(path)
        self.line = line
        where = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{where}: {message}")


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def read_series(
    path, kind: Literal["categorical", "real"] | None = None
) -> SeriesSegment:
    """Read a series, one value per line.

    A non-numeric first line is taken as a header and skipped.  Blank lines
    are ignored.  Without `kind`, a file of integer literals is categorical
    and anything else is real.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise SeriesParseError(path, "file not found") from None
    except (OSError, UnicodeDecodeError) as exc:
        raise SeriesParseError(path, str(exc)) from None

    rows: list[tuple[int, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        field = raw.strip().split(",")[0].strip()
        if field:
            rows.append((lineno, field))
    if rows and not _is_number(rows[0][1]):
        rows = rows[1:]
    if not rows:
        raise SeriesParseError(path, "no values")

    if kind is None:
        kind = "categorical"
        for _, f in rows:
            try:
                int(f)
            except ValueError:
                kind = "real"
                break

    values = []
    for lineno, f in rows:
        try:
            if kind == "categorical":
                values.append(int(f))
            else:
                v = float(f)
                if not np.isfinite(v):
                    raise ValueError
                values.append(v)
        except ValueError:
            expect = "an integer category code" if kind == "categorical" else "a finite real"
            raise SeriesParseError(path, f"expected {expect}, got {f!r}", lineno) from None
    dtype = np.int64 if kind == "categorical" else np.float64
    return SeriesSegment(np.array(values, dtype=dtype), kind)


def format_value(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_series(path, series) -> None:
    """Write `series` one value per line (UTF-8, LF).  Reals use their shortest round-trip repr."""
    seg = series if isinstance(series, SeriesSegment) else SeriesSegment(series)
    if seg.kind == "categorical":
        lines = [str(int(v)) for v in seg.values]
    else:
        lines = [repr(float(v)) for v in seg.values]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
