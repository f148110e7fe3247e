"""Monte-Carlo harness: tightness curves, phase-transition grids,
condition-number sweeps and convergence traces.

Reproducibility contract: every trial's instance seed is derived from
SeedSequence(base_seed, spawn_key=(cell_index, trial_index)), trials are
independent, and results are reduced in (cell, trial) order, so a grid is a
pure function of its config regardless of the worker count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .certify import VERDICT_CERTIFIED, VERDICT_CERTIFIED_UNIQUE, check_global_optimality
from .errors import NotConverged
from .linalg import df_distance
from .metrics import blockwise_error, cloud_error, reconstruct_cloud
from .model import SignalSpec, eta_from_sigma, generate, sigma_from_eta
from .solver import SolveOptions, solve, spectral_init


@dataclass(frozen=True)
class GridConfig:
    """One experiment grid: dimension tuples x noise axis x condition numbers."""

    dims: tuple[tuple[int, int, int], ...]  # (n, m, d) per cell column
    etas: tuple[float, ...] = ()
    kappas: tuple[float, ...] = (1.0,)
    trials: int = 20
    base_seed: int = 0
    parallelism: int = 1
    planted: str = "identity"
    max_iters: int = 1000
    stop_tol: float = 1e-10

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(tuple(t) for t in self.dims))
        object.__setattr__(self, "etas", tuple(self.etas))
        object.__setattr__(self, "kappas", tuple(self.kappas))
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if any(eta < 0 for eta in self.etas):
            raise ValueError("etas must be nonnegative")


@dataclass
class CellResult:
    n: int
    m: int
    d: int
    kappa: float
    eta: float
    sigma: float
    trials: int
    n_certified_unique: int
    n_certified: int
    n_converged: int
    n_failed: int
    mean_iters: float
    mean_blockwise_error: float
    mean_cloud_error: float

    @property
    def freq_certified_unique(self) -> float:
        return self.n_certified_unique / self.trials

    def as_row(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "d": self.d,
            "kappa": self.kappa,
            "eta": self.eta,
            "sigma": self.sigma,
            "trials": self.trials,
            "n_certified_unique": self.n_certified_unique,
            "n_certified": self.n_certified,
            "n_converged": self.n_converged,
            "n_failed": self.n_failed,
            "mean_iters": self.mean_iters,
            "mean_blockwise_error": self.mean_blockwise_error,
            "mean_cloud_error": self.mean_cloud_error,
        }


CSV_COLUMNS = tuple(
    CellResult(0, 0, 0, 0.0, 0.0, 0.0, 1, 0, 0, 0, 0, 0.0, 0.0, 0.0).as_row().keys()
)


@dataclass
class GridResult:
    cells: list[CellResult]
    crossings: list[dict] = field(default_factory=list)


def _trial_seed(base_seed: int, cell_index: int, trial_index: int) -> int:
    ss = np.random.SeedSequence(base_seed, spawn_key=(cell_index, trial_index))
    return int(ss.generate_state(1, np.uint64)[0])


def _run_trial(task: tuple) -> dict:
    (cell_index, trial_index, n, m, d, kappa, sigma, base_seed, planted,
     max_iters, stop_tol) = task
    out = {
        "cell": cell_index,
        "trial": trial_index,
        "converged": False,
        "certified_unique": False,
        "certified": False,
        "iters": 0,
        "blockwise_error": math.nan,
        "cloud_error": math.nan,
        "failure": None,
    }
    try:
        seed = _trial_seed(base_seed, cell_index, trial_index)
        spec = SignalSpec(n=n, m=m, d=d, kappa=kappa, seed=seed, planted=planted)
        inst = generate(spec, sigma)
        s0 = spectral_init(inst.D, n, d)
        report = solve(
            inst.C, n, d, s0, SolveOptions(max_iters=max_iters, stop_tol=stop_tol)
        )
        out["converged"] = report.converged
        out["iters"] = report.iters
        _, fro = blockwise_error(report.S_final, inst.O)
        out["blockwise_error"] = fro
        ahat = reconstruct_cloud(report.S_final, inst.D)
        out["cloud_error"] = cloud_error(ahat, inst.A)
        if report.converged:
            cert = check_global_optimality(inst.C, report.S_final)
            out["certified_unique"] = cert.verdict == VERDICT_CERTIFIED_UNIQUE
            out["certified"] = cert.verdict in (
                VERDICT_CERTIFIED_UNIQUE, VERDICT_CERTIFIED,
            )
    except Exception as exc:  # record, never abort the grid
        out["failure"] = f"{type(exc).__name__}: {exc}"
    return out


def _worker_count(config: GridConfig) -> int:
    env = os.environ.get("GOPP_THREADS")
    if env:
        return max(1, int(env))
    return max(1, config.parallelism)


def _reduce_cell(config: GridConfig, cell: dict, recs: list[dict]) -> CellResult:
    ok = [r for r in recs if r["failure"] is None]
    blockwise = [r["blockwise_error"] for r in ok if math.isfinite(r["blockwise_error"])]
    clouds = [r["cloud_error"] for r in ok if math.isfinite(r["cloud_error"])]
    return CellResult(
        n=cell["n"], m=cell["m"], d=cell["d"], kappa=cell["kappa"],
        eta=cell["eta"], sigma=cell["sigma"], trials=config.trials,
        n_certified_unique=sum(r["certified_unique"] for r in recs),
        n_certified=sum(r["certified"] for r in recs),
        n_converged=sum(r["converged"] for r in recs),
        n_failed=len(recs) - len(ok),
        mean_iters=float(np.mean([r["iters"] for r in ok])) if ok else math.nan,
        mean_blockwise_error=float(np.mean(blockwise)) if blockwise else math.nan,
        mean_cloud_error=float(np.mean(clouds)) if clouds else math.nan,
    )


def _run_cells(config: GridConfig, cells: list[dict], sink=None) -> list[CellResult]:
    """Execute trials for explicit cell descriptors, reducing in (cell, trial)
    order as results stream in.

    When a list is passed as sink, each finished CellResult is appended to it
    immediately, so partially completed grids survive an interrupt.
    """
    tasks = []
    for idx, cell in enumerate(cells):
        for trial in range(config.trials):
            tasks.append((
                idx, trial, cell["n"], cell["m"], cell["d"], cell["kappa"],
                cell["sigma"], config.base_seed, config.planted,
                config.max_iters, config.stop_tol,
            ))
    workers = _worker_count(config)
    results: list[CellResult] = []
    buffer: list[dict] = []

    def consume(record_iter):
        nonlocal buffer
        for rec in record_iter:
            buffer.append(rec)
            if len(buffer) == config.trials:
                cell_result = _reduce_cell(config, cells[len(results)], buffer)
                results.append(cell_result)
                if sink is not None:
                    sink.append(cell_result)
                buffer = []

    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            consume(pool.map(_run_trial, tasks, chunksize=4))
    else:
        consume(map(_run_trial, tasks))
    return results


def _cell(n, m, d, kappa, eta=None, sigma=None):
    if sigma is None:
        sigma = sigma_from_eta(eta, n, m, d)
    elif eta is None:
        eta = eta_from_sigma(sigma, n, m, d)
    return {"n": n, "m": m, "d": d, "kappa": float(kappa),
            "eta": float(eta), "sigma": float(sigma)}


def fifty_percent_crossing(axis: list[float], freqs: list[float]) -> float:
    """Linear interpolation between the last frequency >= 0.5 and the first
    below it.

    Returns +inf when the curve never drops below 0.5 and 0.0 when it starts
    below (crossing outside the measured axis).
    """
    above = [i for i, f in enumerate(freqs) if f >= 0.5]
    below = [i for i, f in enumerate(freqs) if f < 0.5]
    if not below:
        return math.inf
    if not above:
        return 0.0
    i, j = max(above), min(below)
    xi, fi = axis[i], freqs[i]
    xj, fj = axis[j], freqs[j]
    if fi == fj:
        return 0.5 * (xi + xj)
    return xi + (0.5 - fi) * (xj - xi) / (fj - fi)


def run_tightness_curve(config: GridConfig, sink=None) -> GridResult:
    """Certified-uniqueness frequency over the (dims x kappas x etas) grid."""
    cells = [
        _cell(n, m, d, kappa, eta=eta)
        for (n, m, d) in config.dims
        for kappa in config.kappas
        for eta in config.etas
    ]
    return GridResult(cells=_run_cells(config, cells, sink=sink))


def run_phase_grid(config: GridConfig, sigma_axis, axis_kind: str = "sigma", sink=None) -> GridResult:
    """2-D certification grid: dimension tuples x noise axis.

    axis_kind selects whether sigma_axis holds absolute noise levels or
    rescaled eta values.  Emits one 50%-crossing sigma* per dimension column.
    """
    if axis_kind not in ("sigma", "eta"):
        raise ValueError("axis_kind must be 'sigma' or 'eta'")
    sigma_axis = list(sigma_axis)
    cells = []
    for (n, m, d) in config.dims:
        for kappa in config.kappas:
            for value in sigma_axis:
                if axis_kind == "sigma":
                    cells.append(_cell(n, m, d, kappa, sigma=value))
                else:
                    cells.append(_cell(n, m, d, kappa, eta=value))
    results = _run_cells(config, cells, sink=sink)
    crossings = []
    per_column = len(sigma_axis)
    for col in range(len(results) // per_column):
        chunk = results[col * per_column : (col + 1) * per_column]
        sigmas = [c.sigma for c in chunk]
        freqs = [c.freq_certified_unique for c in chunk]
        crossings.append({
            "n": chunk[0].n, "m": chunk[0].m, "d": chunk[0].d,
            "kappa": chunk[0].kappa,
            "sigma_star": fifty_percent_crossing(sigmas, freqs),
        })
    return GridResult(cells=results, crossings=crossings)


def run_kappa_sweep(config: GridConfig, sink=None) -> GridResult:
    """Certification grid over (kappa, eta) with a 50%-crossing eta* per kappa."""
    if len(config.kappas) < 2:
        raise ValueError("kappa sweep needs a nontrivial kappas list")
    cells = [
        _cell(n, m, d, kappa, eta=eta)
        for (n, m, d) in config.dims
        for kappa in config.kappas
        for eta in config.etas
    ]
    results = _run_cells(config, cells, sink=sink)
    crossings = []
    per_column = len(config.etas)
    for col in range(len(results) // per_column):
        chunk = results[col * per_column : (col + 1) * per_column]
        etas = [c.eta for c in chunk]
        freqs = [c.freq_certified_unique for c in chunk]
        crossings.append({
            "n": chunk[0].n, "m": chunk[0].m, "d": chunk[0].d,
            "kappa": chunk[0].kappa,
            "eta_star": fifty_percent_crossing(etas, freqs),
        })
    return GridResult(cells=results, crossings=crossings)


@dataclass
class TraceRecord:
    iterations: list[int]
    step_residuals: list[float]  # residual of the step leaving each iterate
    distances_to_final: list[float]
    objectives: list[float]
    fitted_ratio: float


def run_convergence_trace(instance, opts: SolveOptions | None = None) -> TraceRecord:
    """Post-hoc distance-to-final trace with a fitted per-iteration decay ratio.

    Raises NotConverged when the solver hits max_iters first.
    """
    if opts is None:
        opts = SolveOptions(trace=True)
    elif not opts.trace:
        opts = SolveOptions(max_iters=opts.max_iters, stop_tol=opts.stop_tol, trace=True)
    n, d = instance.O.n, instance.O.d
    s0 = spectral_init(instance.D, n, d)
    report = solve(instance.C, n, d, s0, opts)
    if not report.converged:
        raise NotConverged(f"no convergence within {opts.max_iters} iterations")
    final = report.S_final
    distances = [df_distance(s, final) for s in report.iterates]
    residuals = report.step_residuals + [math.nan]
    # Fit log-linear decay over the informative part of the trace.
    floor = max(distances[0] * 1e-12, 1e-14)
    pts = [(t, dist) for t, dist in enumerate(distances) if dist > floor]
    if len(pts) >= 2:
        ts = np.array([p[0] for p in pts], dtype=float)
        logs = np.log([p[1] for p in pts])
        slope = np.polyfit(ts, logs, 1)[0]
        ratio = float(np.exp(slope))
    else:
        ratio = 0.0
    return TraceRecord(
        iterations=list(range(len(distances))),
        step_residuals=residuals,
        distances_to_final=distances,
        objectives=report.objectives,
        fitted_ratio=ratio,
    )
