"""Requisite delay-line rates for target logical error rates."""
from __future__ import annotations

import io
import math
from typing import Dict, List, Sequence

from .fitting import FitResult, requisite_eta

DEFAULT_TARGETS = (1e-3, 1e-5, 1e-10, 1e-15)


def requisite_table(fits: Dict[str, FitResult], targets: Sequence[float] = DEFAULT_TARGETS) -> List[dict]:
    """One row per target with one column per labelled fit; unreachable targets give ``inf``."""
    rows = []
    for t in targets:
        row = {"target": t}
        for label, fit in fits.items():
            try:
                row[label] = requisite_eta(fit, t)
            except ValueError:
                row[label] = math.inf
        rows.append(row)
    return rows


def format_table(rows: Sequence[dict], labels: Sequence[str]) -> str:
    buf = io.StringIO()
    buf.write(",".join(["target", *labels]) + "\n")
    for r in rows:
        buf.write(",".join([f"{r['target']:.0e}", *(f"{r[k]:.3e}" for k in labels)]) + "\n")
    return buf.getvalue()
