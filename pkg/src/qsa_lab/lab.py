"""Experiment orchestration: SA vs QSA comparison tables and gap-scaling studies.

Costs compared here are the schedule-mandated operation counts: m transition
applications for SA versus the expected m * r * (Q - 1) / 2 walk applications
for QSA.  The scaling study sweeps the spectral gap at fixed n, gamma and
E_max bound (weak-link chains with a shared e_max), so the fitted log-log
slopes isolate the 1/Delta versus 1/sqrt(Delta) separation while the per-point
success probabilities confirm the cheaper schedule still meets the 1 - eps
output contract.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .anneal_classical import build_sa_schedule, propagate_exact, sa_cost
from .anneal_quantum import (
    average_cost,
    build_qsa_schedule,
    run_qsa_ensemble,
    terminal_beta_details,
)
from .chains import schedule_gap
from .errors import DomainError, NumericalError
from .instances import (
    ProblemInstance,
    generate_ising_chain,
    generate_weak_link_chain,
    two_state,
)

# Weak-link ratios spanning a bit over two decades of spectral gap at n = 6.
DEFAULT_FAMILY_RATIOS = (1.0, 1.15, 1.3, 1.45, 1.6)

CSV_COLUMNS = (
    "instance_id", "n", "delta", "epsilon", "sa_cost", "qsa_cost_expected",
    "sa_success", "qsa_success_mean", "qsa_success_stderr", "seeds",
)


@dataclass(frozen=True)
class ComparisonRow:
    instance_id: str
    n: int
    delta: float
    epsilon: float
    sa_cost: int
    qsa_cost_expected: float
    sa_success: float | None
    qsa_success_mean: float
    qsa_success_stderr: float
    seeds: int


def bundled_instances() -> list[ProblemInstance]:
    """The standard desk-scale comparison set."""
    return [
        two_state(),
        generate_ising_chain(3, [1.0, 1.0], name="ising_n3"),
        generate_ising_chain(6, [1.0] * 5, name="ising_n6"),
    ]


def weak_link_family(
    n: int = 6,
    ratios=DEFAULT_FAMILY_RATIOS,
    shared_e_max: float | None = None,
) -> list[ProblemInstance]:
    """Weak-link chains sharing one e_max bound so only the gap varies."""
    ratios = list(ratios)
    if shared_e_max is None:
        shared_e_max = 1.0 + max(ratios) * (n - 2)
    return [generate_weak_link_chain(n, r, e_max=shared_e_max) for r in ratios]


def schedule_grid_gap(
    instance: ProblemInstance,
    epsilon: float,
    beta_m_formula: str = "energy_scaled",
) -> float:
    """Spectral-gap lower bound over the schedule's own beta grid.

    Raises NumericalError when the gap underflows to zero: that happens on
    instances whose cost gap is so small that beta_m drives the chain's
    slowest rate below double precision, leaving no schedule to build.
    """
    beta_m, _ = terminal_beta_details(instance, epsilon, formula=beta_m_formula)
    delta_beta = epsilon / (2.0 * instance.e_max)
    m = math.ceil(beta_m / delta_beta)
    grid = np.minimum(np.arange(1, m + 1) * delta_beta, beta_m)
    delta = schedule_gap(instance, grid)
    if delta <= 0.0:
        raise NumericalError(
            f"spectral gap underflowed to {delta:g} on the schedule grid of "
            f"{instance.name} (cost gap {instance.gamma:g} forces "
            f"beta_m = {beta_m:.3g}); this instance/epsilon pair is beyond "
            f"double-precision reach"
        )
    return delta


def _one_row(
    instance: ProblemInstance,
    epsilon: float,
    seeds: list[int],
    walk_variant: str,
    c_sa: float,
    r: int,
    run_sa_exact: bool,
) -> ComparisonRow:
    delta = schedule_grid_gap(instance, epsilon)
    qsa_schedule = build_qsa_schedule(instance, delta, epsilon, r=r)
    sa_schedule = build_sa_schedule(instance, delta, epsilon, c_sa=c_sa)
    sa_success = None
    if run_sa_exact:
        sa_success = propagate_exact(instance, sa_schedule).success_probability
    traces = run_qsa_ensemble(instance, qsa_schedule, seeds, walk_variant)
    succ = np.array([t.exact_success for t in traces])
    stderr = float(succ.std(ddof=1) / math.sqrt(len(succ))) if len(succ) > 1 else 0.0
    return ComparisonRow(
        instance_id=instance.name,
        n=instance.n,
        delta=delta,
        epsilon=epsilon,
        sa_cost=sa_cost(sa_schedule),
        qsa_cost_expected=average_cost(qsa_schedule),
        sa_success=sa_success,
        qsa_success_mean=float(succ.mean()),
        qsa_success_stderr=stderr,
        seeds=len(seeds),
    )


def compare(
    instances,
    epsilon: float,
    seeds,
    walk_variant: str = "two_reflection",
    c_sa: float = 1.0,
    r: int = 1,
    threads: int = 1,
    run_sa_exact: bool = True,
) -> list[ComparisonRow]:
    """One ComparisonRow per instance; deterministic given the seed list."""
    seeds = [int(s) for s in seeds]
    instances = list(instances)
    if threads > 1 and len(instances) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [
                pool.submit(_one_row, inst, epsilon, seeds, walk_variant, c_sa, r, run_sa_exact)
                for inst in instances
            ]
            return [f.result() for f in futures]
    return [
        _one_row(inst, epsilon, seeds, walk_variant, c_sa, r, run_sa_exact)
        for inst in instances
    ]


def loglog_slope(x, y) -> float:
    """Least-squares slope of log(y) against log(x)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size < 3:
        raise DomainError(f"slope fit needs at least 3 points, got {x.size}")
    if np.any(x <= 0) or np.any(y <= 0):
        raise DomainError("log-log fit needs positive data")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


@dataclass(frozen=True)
class ScalingResult:
    rows: list[ComparisonRow]
    sa_slope: float
    qsa_slope: float


def scaling_study(
    instances,
    epsilon: float,
    seeds,
    walk_variant: str = "two_reflection",
    r: int = 1,
    threads: int = 1,
) -> ScalingResult:
    """Cost-versus-gap study over an instance family.

    SA costs are audited by formula only (exact propagation at the smallest
    gaps would need ~1/Delta steps); QSA runs at every point so the success
    column certifies the schedule that the slope fit is scoring.
    """
    rows = compare(
        instances, epsilon, seeds, walk_variant=walk_variant,
        r=r, threads=threads, run_sa_exact=False,
    )
    inv_delta = [1.0 / row.delta for row in rows]
    sa_slope = loglog_slope(inv_delta, [row.sa_cost for row in rows])
    qsa_slope = loglog_slope(inv_delta, [row.qsa_cost_expected for row in rows])
    return ScalingResult(rows=rows, sa_slope=sa_slope, qsa_slope=qsa_slope)


# --- report emission ----------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def rows_to_csv_text(rows) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for row in rows:
        lines.append(",".join(_fmt(getattr(row, col)) for col in CSV_COLUMNS))
    return "\n".join(lines) + "\n"


def rows_to_json_obj(rows, config: dict | None = None) -> dict:
    out_rows = []
    for row in rows:
        rec = {}
        for col in CSV_COLUMNS:
            value = getattr(row, col)
            if isinstance(value, float):
                value = float(f"{value:.12g}")
            rec[col] = value
        out_rows.append(rec)
    obj = {"rows": out_rows}
    if config is not None:
        obj["config"] = config
    return obj


def emit_report(rows, fmt: str, path: str, config: dict | None = None) -> None:
    """Write rows as CSV or JSON with a stable column order and 12 significant
    digits; reruns with identical inputs reproduce the file byte for byte."""
    try:
        if fmt == "csv":
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(rows_to_csv_text(rows))
        elif fmt == "json":
            with open(path, "w", encoding="utf-8") as fh:
                json.dump(rows_to_json_obj(rows, config), fh, indent=2)
                fh.write("\n")
        else:
            raise DomainError(f"unknown report format {fmt!r}")
    except OSError as exc:
        raise DomainError(f"cannot write report to {path}: {exc}") from exc
