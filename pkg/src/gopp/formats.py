"""On-disk formats: the v1 instance file, grid CSV/JSON, trace CSV, and the
run-report JSON schema.

All floating-point values are rendered as shortest round-trip decimals
(repr, at most 17 significant digits), which makes every artifact
byte-stable across runs and re-loadable without loss.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .blocks import BlockStack
from .errors import MalformedInstanceFile
from .experiments import CSV_COLUMNS, GridResult
from .model import Instance, SignalSpec, gram_matrix

SCHEMA_VERSION = 1
MAGIC = "GOPP v1"

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


def render_float(x: float) -> str:
    """Shortest decimal that round-trips to the same float64."""
    return repr(float(x))


def render_matrix(x: np.ndarray) -> str:
    return "\n".join(" ".join(render_float(v) for v in row) for row in np.atleast_2d(x))


def instance_checksum(instance: Instance) -> str:
    """FNV-1a 64 over the canonical rendering of D, a newline, then C."""
    payload = (render_matrix(instance.D) + "\n" + render_matrix(instance.C)).encode()
    return f"{fnv1a64(payload):016x}"


def save_instance(instance: Instance, path) -> None:
    spec = instance.spec
    lines = [MAGIC]
    lines.append(
        f"{spec.n} {spec.m} {spec.d} {render_float(instance.sigma)} "
        f"{spec.seed} {render_float(spec.kappa)}"
    )
    lines.append(render_matrix(instance.A))
    lines.append(render_matrix(instance.O.data))
    lines.append(render_matrix(instance.W))
    lines.append(f"fnv1a64:{instance_checksum(instance)}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _parse_matrix(lines, start, rows, cols, what):
    out = np.empty((rows, cols))
    for r in range(rows):
        lineno = start + r
        if lineno > len(lines):
            raise MalformedInstanceFile(f"file ends inside the {what} matrix", lineno)
        parts = lines[lineno - 1].split()
        if len(parts) != cols:
            raise MalformedInstanceFile(
                f"{what} row has {len(parts)} columns, expected {cols}", lineno
            )
        try:
            out[r] = [float(p) for p in parts]
        except ValueError:
            raise MalformedInstanceFile(f"non-numeric value in {what} row", lineno)
    if not np.all(np.isfinite(out)):
        raise MalformedInstanceFile(f"non-finite value in {what} matrix", start)
    return out


def load_instance(path) -> Instance:
    """Parse a v1 instance file; D and C are recomputed and verified against
    the stored checksum."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != MAGIC:
        raise MalformedInstanceFile(f"expected header {MAGIC!r}", 1)
    if len(lines) < 2:
        raise MalformedInstanceFile("missing dimension line", 2)
    parts = lines[1].split()
    if len(parts) != 6:
        raise MalformedInstanceFile(
            f"dimension line has {len(parts)} fields, expected "
            "'n m d sigma seed kappa'", 2,
        )
    try:
        n, m, d = int(parts[0]), int(parts[1]), int(parts[2])
        sigma = float(parts[3])
        seed = int(parts[4])
        kappa = float(parts[5])
    except ValueError:
        raise MalformedInstanceFile("non-numeric dimension field", 2)
    if n < 2 or d < 1 or m < d:
        raise MalformedInstanceFile(f"invalid dimensions n={n} m={m} d={d}", 2)
    if sigma < 0:
        raise MalformedInstanceFile(f"negative sigma {sigma}", 2)

    row = 3
    a = _parse_matrix(lines, row, d, m, "A")
    row += d
    o_data = _parse_matrix(lines, row, n * d, d, "O")
    row += n * d
    w = _parse_matrix(lines, row, n * d, m, "W")
    row += n * d
    if row > len(lines):
        raise MalformedInstanceFile("missing checksum line", row)
    checksum_line = lines[row - 1]
    if not checksum_line.startswith("fnv1a64:"):
        raise MalformedInstanceFile("expected 'fnv1a64:<hex>' checksum line", row)
    stored = checksum_line.split(":", 1)[1].strip()

    try:
        o = BlockStack(n, d, o_data, orthogonal=True)
    except ValueError:
        raise MalformedInstanceFile("O blocks are not orthogonal", 3 + d)
    identity = np.tile(np.eye(d), (n, 1))
    planted = "identity" if np.array_equal(o_data, identity) else "random-orthogonal"
    spec = SignalSpec(n=n, m=m, d=d, kappa=kappa, seed=seed, planted=planted)
    d_mat = (o.blocks() @ a).reshape(n * d, m) + sigma * w
    instance = Instance(spec=spec, A=a, O=o, sigma=sigma, W=w, D=d_mat,
                        C=gram_matrix(d_mat))
    actual = instance_checksum(instance)
    if actual != stored:
        raise MalformedInstanceFile(
            f"checksum mismatch: stored {stored}, recomputed {actual}", row
        )
    return instance


# ---------------------------------------------------------------------------
# grid CSV / JSON
# ---------------------------------------------------------------------------


def _render_cell_value(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return render_float(v)


def grid_csv(result: GridResult) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for cell in result.cells:
        row = cell.as_row()
        lines.append(",".join(_render_cell_value(row[c]) for c in CSV_COLUMNS))
    return "\n".join(lines) + "\n"


def _json_safe(value):
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
    return value


def grid_json(result: GridResult) -> str:
    payload = {
        "schema_version": SCHEMA_VERSION,
        "cells": [
            {k: _json_safe(v) for k, v in cell.as_row().items()}
            for cell in result.cells
        ],
        "crossings": [
            {k: _json_safe(v) for k, v in crossing.items()}
            for crossing in result.crossings
        ],
    }
    return json.dumps(payload, indent=2) + "\n"


def trace_csv(trace) -> str:
    lines = ["iteration,step_residual,distance_to_final,objective"]
    for t in trace.iterations:
        resid = trace.step_residuals[t]
        resid_s = "" if math.isnan(resid) else render_float(resid)
        lines.append(
            f"{t},{resid_s},{render_float(trace.distances_to_final[t])},"
            f"{render_float(trace.objectives[t])}"
        )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# run report
# ---------------------------------------------------------------------------


def run_report(instance, solve_report, certificate, errors, timings) -> dict:
    """Assemble the schema-versioned report emitted by the solve command."""
    spec = instance.spec
    return {
        "schema_version": SCHEMA_VERSION,
        "instance": {
            "n": spec.n,
            "m": spec.m,
            "d": spec.d,
            "kappa": spec.kappa,
            "sigma": instance.sigma,
            "seed": spec.seed,
            "planted": spec.planted,
        },
        "solve": {
            "iters": solve_report.iters,
            "converged": solve_report.converged,
            "final_objective": solve_report.objectives[-1],
            "final_step_residual": solve_report.step_residuals[-1]
            if solve_report.step_residuals else 0.0,
            "n_degenerate_blocks": len(solve_report.degenerate_blocks),
            "S_final": solve_report.S_final.data.tolist(),
        },
        "certificate": {
            "verdict": certificate.verdict,
            "stationarity_residual": certificate.stationarity_residual,
            "min_eig": certificate.min_eig,
            "gap_eig": certificate.gap_eig,
            "opnorm_c": certificate.opnorm_c,
            "tolerances": {
                "stationarity": certificate.tolerances.stationarity,
                "psd": certificate.tolerances.psd,
                "gap": certificate.tolerances.gap,
            },
        },
        "errors": {
            "df_to_truth": errors.df_to_truth,
            "blockwise_max": errors.blockwise_max,
            "blockwise_max_fro": errors.blockwise_max_fro,
            "cloud_error": errors.cloud_error,
            "objective": errors.objective,
        },
        "timings": timings,
    }
