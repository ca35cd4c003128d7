"""Ingestion of Quarterly Workforce Indicators explorer exports.

Accepted long-format columns (case-insensitive header match):
  geography: one of geography_label, geography, county
  period:    either year + quarter columns, or a single period column
             formatted YYYYQn / YYYY-Qn / YYYY Qn
  measure:   the column named by the caller (exact header, case-insensitive)

The export is pivoted to one column per requested county over the complete
ascending quarter range; gaps and duplicates are hard errors.
"""

from __future__ import annotations

import csv
import re

import numpy as np

from .errors import IngestError
from .series import MultiSeries

GEOGRAPHY_COLUMNS = ("geography_label", "geography", "county")
PERIOD_RE = re.compile(r"^\s*(\d{4})\s*[-_ ]?\s*Q?(\d)\s*$", re.IGNORECASE)


def _parse_period(year: str, quarter: str) -> tuple[int, int]:
    try:
        y = int(str(year).strip())
        q = int(str(quarter).strip().lstrip("Qq"))
    except ValueError:
        raise IngestError(f"cannot parse period from year={year!r} quarter={quarter!r}")
    if not 1 <= q <= 4:
        raise IngestError(f"quarter {q} out of range in year={year!r}")
    return y, q


def _parse_combined(period: str) -> tuple[int, int]:
    m = PERIOD_RE.match(str(period))
    if not m:
        raise IngestError(f"cannot parse period value {period!r}")
    y, q = int(m.group(1)), int(m.group(2))
    if not 1 <= q <= 4:
        raise IngestError(f"quarter {q} out of range in period {period!r}")
    return y, q


def quarter_label(y: int, q: int) -> str:
    return f"{y}Q{q}"


def ingest_qwi(path, counties: list[str], measure: str) -> tuple[MultiSeries, list[str]]:
    """Pivot a long-format QWI export into a quarterly multivariate series.

    Returns the series (columns ordered as ``counties``) and the quarter
    labels. Unknown counties or measures raise with the available values;
    duplicate (county, quarter) rows and gaps in the quarter range raise.
    """
    if not counties:
        raise IngestError("at least one county is required")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestError(f"{path}: empty file") from None
        rows = list(reader)
    lower = [h.strip().lower() for h in header]

    def find(*options):
        for opt in options:
            if opt in lower:
                return lower.index(opt)
        return None

    geo_idx = find(*GEOGRAPHY_COLUMNS)
    if geo_idx is None:
        raise IngestError(
            f"no geography column among {GEOGRAPHY_COLUMNS}; found {header}"
        )
    year_idx, quarter_idx = find("year"), find("quarter")
    period_idx = find("period")
    if (year_idx is None or quarter_idx is None) and period_idx is None:
        raise IngestError(
            f"need 'year' and 'quarter' columns or a 'period' column; found {header}"
        )
    measure_idx = find(measure.strip().lower())
    if measure_idx is None:
        raise IngestError(
            f"measure {measure!r} not found; available columns: {header}"
        )

    wanted = {c: i for i, c in enumerate(counties)}
    seen_geos = set()
    cells: dict[tuple[int, int], dict[int, float]] = {}
    for lineno, row in enumerate(rows, start=2):
        if not row or all(not f.strip() for f in row):
            continue
        geo = row[geo_idx].strip()
        seen_geos.add(geo)
        if geo not in wanted:
            continue
        if period_idx is not None and (year_idx is None or quarter_idx is None):
            yq = _parse_combined(row[period_idx])
        else:
            yq = _parse_period(row[year_idx], row[quarter_idx])
        try:
            value = float(row[measure_idx])
        except ValueError:
            raise IngestError(
                f"{path}: line {lineno}: bad {measure!r} value {row[measure_idx]!r}"
            ) from None
        slot = cells.setdefault(yq, {})
        col = wanted[geo]
        if col in slot:
            raise IngestError(
                f"duplicate rows for county {geo!r} in {quarter_label(*yq)}"
            )
        slot[col] = value

    missing_geos = [c for c in counties if c not in seen_geos]
    if missing_geos:
        raise IngestError(
            f"counties not present in export: {missing_geos}; "
            f"available: {sorted(seen_geos)}"
        )
    if not cells:
        raise IngestError("no rows matched the requested counties")

    quarters = sorted(cells)
    first, last = quarters[0], quarters[-1]
    full = []
    y, q = first
    while (y, q) <= last:
        full.append((y, q))
        q += 1
        if q == 5:
            y, q = y + 1, 1
    gaps = []
    for yq in full:
        have = cells.get(yq, {})
        missing_here = [c for c, i in wanted.items() if i not in have]
        if missing_here:
            gaps.append(f"{quarter_label(*yq)}: missing {missing_here}")
    if gaps:
        raise IngestError(
            "gaps in the quarter range "
            f"{quarter_label(*first)}..{quarter_label(*last)}: " + "; ".join(gaps)
        )
    values = np.array(
        [[cells[yq][wanted[c]] for c in counties] for yq in full]
    )
    labels = [quarter_label(*yq) for yq in full]
    return MultiSeries(values, list(counties), period=4), labels
