"""Diagnostics tables and report serialisation."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .operators import ConvexProfile, decomposition, energy_density_sq, p_laplacian_composition, p_tension_residual
from .profile_ode import ProfileSolution, monotone_quantity

DIAGNOSTIC_COLUMNS = (
    "s", "f", "fp", "fpp", "dF2", "residual", "Q", "DeltapHF", "K", "Ktilde", "A1", "A2", "A3",
)


def diagnostics_table(solution: ProfileSolution, h: ConvexProfile) -> dict[str, np.ndarray]:
    """One entry per node for every column of :data:`DIAGNOSTIC_COLUMNS`."""
    st = solution.states()
    g, j, params = solution.g, solution.j, solution.params
    dec = decomposition(st, h, g, j, params)
    shape = st.s.shape
    cols = {
        "s": st.s,
        "f": st.f,
        "fp": st.f1,
        "fpp": st.f2,
        "dF2": energy_density_sq(st, g, j, params.n),
        "residual": p_tension_residual(st, g, j, params),
        "Q": monotone_quantity(solution),
        "DeltapHF": p_laplacian_composition(st, h, g, j, params),
        "K": dec.K,
        "Ktilde": dec.Ktilde,
        "A1": dec.A1,
        "A2": dec.A2,
        "A3": dec.A3,
    }
    return {k: np.broadcast_to(np.asarray(v, dtype=float), shape) for k, v in cols.items()}


def _g17(x: float) -> str:
    return format(float(x), ".17g")


def write_table_csv(path, table: dict, columns=None) -> None:
    columns = list(columns or table.keys())
    rows = zip(*(table[c] for c in columns))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_g17(x) for x in row])


def read_table_csv(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        data = np.array([[float(x) for x in row] for row in r], dtype=float).reshape(-1, len(header))
    return {c: data[:, k] for k, c in enumerate(header)}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def dumps_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True)
