"""CSV / JSON emission for solutions, diagrams and run manifests.

All CSV files carry a header row, UTF-8 encoding, '.' decimal separator and
full double precision (17 significant digits) so golden files round-trip
losslessly.  Each solution is one CSV plus a JSON sidecar holding the
parameters, the energy and (once computed) the stability data.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .bulk import ModelParams
from .discretization import FieldState, Mesh, ORState, diagnostics, embed_or_state

__all__ = [
    "write_solution",
    "read_solution",
    "update_sidecar",
    "write_manifest",
]

_FMT = "%.17g"


def _fmt(x: float) -> str:
    return _FMT % x


def write_solution(outdir: str, name: str, state, params: ModelParams,
                   energy_value: float, eigenvalues=None, stability=None) -> dict:
    """Write <name>.csv (profile columns) and <name>.json (metadata)."""
    os.makedirs(outdir, exist_ok=True)
    full = state if isinstance(state, FieldState) else embed_or_state(state)
    diag = diagnostics(full)
    csv_path = os.path.join(outdir, f"{name}.csv")
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write("y,Q11,Q12,M1,M2,|Q|,|M|,theta,phi\n")
        rows = zip(full.mesh.nodes, full.q11, full.q12, full.m1, full.m2,
                   diag.q_norm, diag.m_norm, diag.theta, diag.phi)
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    meta = {
        "system": "or" if isinstance(state, ORState) else "full",
        "params": {"l1": params.l1, "l2": params.l2, "c": params.c, "xi": params.xi},
        "n_cells": full.mesh.n_cells,
        "energy": energy_value,
        "eigenvalues": None if eigenvalues is None else [float(v) for v in eigenvalues],
        "stability": stability,
    }
    json_path = os.path.join(outdir, f"{name}.json")
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")
    return {"csv": csv_path, "json": json_path}


def read_solution(csv_path: str):
    """Reload a solution CSV into a (state, mesh) pair.

    Returns an ORState when Q12 and M2 vanish identically and the sidecar (if
    present) declares a two-field system, else a FieldState.
    """
    data = np.genfromtxt(csv_path, delimiter=",", names=True)
    y = np.atleast_1d(data["y"])
    n_cells = y.size - 1
    h = (y[-1] - y[0]) / n_cells
    if not np.allclose(np.diff(y), h, rtol=0, atol=1e-12):
        raise ValueError(f"{csv_path}: mesh is not uniform")
    mesh = Mesh(n_cells=n_cells, nodes=y.copy(), h=float(h))
    q11 = np.atleast_1d(data["Q11"]).copy()
    q12 = np.atleast_1d(data["Q12"]).copy()
    m1 = np.atleast_1d(data["M1"]).copy()
    m2 = np.atleast_1d(data["M2"]).copy()

    system = "full"
    sidecar = csv_path[:-4] + ".json"
    if os.path.exists(sidecar):
        with open(sidecar, encoding="utf-8") as fh:
            system = json.load(fh).get("system", "full")
    if system == "or":
        return ORState(mesh, q11, m1)
    return FieldState(mesh, q11, q12, m1, m2)


def update_sidecar(json_path: str, **fields) -> None:
    with open(json_path, encoding="utf-8") as fh:
        meta = json.load(fh)
    meta.update(fields)
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")


def write_manifest(outdir: str, config: dict, timings: dict | None = None) -> str:
    """Run manifest: full configuration, tool version and wall-clock timings."""
    from . import __version__

    os.makedirs(outdir, exist_ok=True)
    path = os.path.join(outdir, "manifest.json")
    payload = {"tool": "ferrobvp", "version": __version__, "config": config,
               "timings": timings or {}}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
