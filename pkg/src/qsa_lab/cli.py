"""Command-line frontend: spectrum, gibbs, sa, qsa, compare, scaling.

Configuration comes from an optional JSON config file plus flags; flags win.
Every JSON report embeds the resolved configuration, and a fixed --seed makes
every subcommand reproducible (byte-identical reruns with --threads 1).

Exit codes: 0 ok, 2 usage/domain error, 3 instance data or schema error,
4 numerical failure or size cap.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import anneal_classical, anneal_quantum, chains, lab, walk
from .errors import (
    CapExceededError,
    DomainError,
    InstanceFormatError,
    NumericalError,
)
from .instances import ProblemInstance, load_instance
from .lab import bundled_instances, weak_link_family

_VARIANTS = {"two-reflection": "two_reflection", "literal": "literal_product"}
_BUNDLED = {"two_state": 0, "ising_n3": 1, "ising_n6": 2}


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InstanceFormatError(f"config: cannot read {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise InstanceFormatError("config: top level must be a JSON object")
    return cfg


def _resolve(args: argparse.Namespace, cfg: dict, key: str, default):
    value = getattr(args, key, None)
    if value is not None:
        return value
    return cfg.get(key, default)


def _get_instance(args, cfg) -> ProblemInstance:
    path = _resolve(args, cfg, "instance", None)
    bundled = _resolve(args, cfg, "bundled", None)
    if path:
        return load_instance(path)
    if bundled:
        if bundled not in _BUNDLED:
            raise DomainError(
                f"unknown bundled instance {bundled!r}; choose from {sorted(_BUNDLED)}"
            )
        return bundled_instances()[_BUNDLED[bundled]]
    raise DomainError("an instance is required: pass --instance FILE or --bundled NAME")


def _parse_betas(args, cfg) -> np.ndarray:
    betas = _resolve(args, cfg, "betas", None)
    if betas is not None:
        if isinstance(betas, str):
            parts = [p for p in betas.split(",") if p.strip()]
            values = [float(p) for p in parts]
        else:
            values = [float(b) for b in betas]
        if not values:
            raise DomainError("beta grid is empty")
        return np.asarray(values)
    points = int(_resolve(args, cfg, "beta_points", 0) or 0)
    if points < 1:
        raise DomainError("pass --betas or a positive --beta-points")
    beta_max = float(_resolve(args, cfg, "beta_max", 2.0))
    return np.linspace(0.0, beta_max, points)


def _seed_list(base_seed: int, count: int) -> list[int]:
    return [int(base_seed) + k for k in range(count)]


def _config_echo(**kv) -> dict:
    out = {}
    for key, value in kv.items():
        if isinstance(value, float):
            value = float(f"{value:.12g}")
        out[key] = value
    return out


def _write_json(path: str, obj: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


# --- subcommands --------------------------------------------------------------


def _cmd_spectrum(args, cfg) -> None:
    instance = _get_instance(args, cfg)
    betas = _parse_betas(args, cfg)
    variant = _VARIANTS[_resolve(args, cfg, "variant", "two-reflection")]
    out = _resolve(args, cfg, "out", None) or "spectrum.csv"
    deltas = chains.flip_energy_deltas(instance)
    rows = []
    for beta in betas:
        S = chains.metropolis(instance, float(beta), _deltas=deltas)
        report = chains.spectral_report(S)
        spec = walk.walk_spectrum(walk.build_walk(S, variant), method="shortcut")
        rows.append((float(beta), report, spec))
    with open(out, "w", encoding="utf-8") as fh:
        d = instance.d
        lam_cols = ",".join(f"lambda_{j}" for j in range(d))
        phi_cols = ",".join(f"phi_{j}" for j in range(d))
        fh.write(f"beta,gap,phase_gap,{lam_cols},{phi_cols}\n")
        for beta, report, spec in rows:
            vals = [f"{beta:.12g}", f"{report.gap:.12g}", f"{spec.phase_gap:.12g}"]
            vals += [f"{v:.12g}" for v in report.eigenvalues]
            vals += [f"{p:.12g}" for p in spec.phases]
            fh.write(",".join(vals) + "\n")
    print(f"spectrum: wrote {len(rows)} rows to {out}")


def _cmd_gibbs(args, cfg) -> None:
    instance = _get_instance(args, cfg)
    betas = _parse_betas(args, cfg)
    out = _resolve(args, cfg, "out", None) or "gibbs.csv"
    with open(out, "w", encoding="utf-8") as fh:
        cols = ",".join(f"p_{j}" for j in range(instance.d))
        fh.write(f"beta,optimal_mass,{cols}\n")
        for beta in betas:
            dist = chains.gibbs(instance, float(beta))
            mass = float(dist.probabilities[instance.optimal_array].sum())
            vals = [f"{float(beta):.12g}", f"{mass:.12g}"]
            vals += [f"{p:.12g}" for p in dist.probabilities]
            fh.write(",".join(vals) + "\n")
    print(f"gibbs: wrote {betas.size} rows to {out}")


def _cmd_sa(args, cfg) -> None:
    instance = _get_instance(args, cfg)
    epsilon = float(_resolve(args, cfg, "epsilon", 0.2))
    seed = int(_resolve(args, cfg, "seed", 0))
    c_sa = float(_resolve(args, cfg, "c_sa", 1.0))
    trials = int(_resolve(args, cfg, "trials", 0) or 0)
    out = _resolve(args, cfg, "out", None) or "sa_report.json"
    delta = lab.schedule_grid_gap(instance, epsilon)
    schedule = anneal_classical.build_sa_schedule(instance, delta, epsilon, c_sa=c_sa)
    print(f"sa: schedule has m = {schedule.m} steps (delta = {delta:.3g})", flush=True)
    result = anneal_classical.propagate_exact(instance, schedule)
    report = {
        "config": _config_echo(
            subcommand="sa", instance=instance.name, epsilon=epsilon, seed=seed,
            c_sa=c_sa, trials=trials, delta=delta,
        ),
        "schedule": {
            "delta_beta": float(f"{schedule.delta_beta:.12g}"),
            "beta_m": float(f"{schedule.beta_m:.12g}"),
            "m": schedule.m,
            "beta_m_adjusted": schedule.beta_m_adjusted,
        },
        "exact": {
            "success_probability": float(f"{result.success_probability:.12g}"),
            "tv_to_gibbs": float(f"{result.tv_to_gibbs:.12g}"),
            "cost": anneal_classical.sa_cost(schedule),
        },
    }
    if trials:
        finals = anneal_classical.run_sa_trials(instance, schedule, _seed_list(seed, trials))
        hits = sum(1 for c in finals if int(c) in instance.optimal_set)
        report["trials"] = {"count": trials, "success_frequency": hits / trials}
    _write_json(out, report)
    print(f"sa: exact success {result.success_probability:.4f}, report in {out}")


def _cmd_qsa(args, cfg) -> None:
    instance = _get_instance(args, cfg)
    epsilon = float(_resolve(args, cfg, "epsilon", 0.2))
    seed = int(_resolve(args, cfg, "seed", 0))
    count = int(_resolve(args, cfg, "seeds", 1))
    r = int(_resolve(args, cfg, "r", 1))
    variant = _VARIANTS[_resolve(args, cfg, "variant", "two-reflection")]
    max_n = int(_resolve(args, cfg, "max_n", walk.DEFAULT_MAX_N))
    with_traces = bool(_resolve(args, cfg, "traces", False))
    out = _resolve(args, cfg, "out", None) or "qsa_report.json"
    delta = lab.schedule_grid_gap(instance, epsilon)
    schedule = anneal_quantum.build_qsa_schedule(instance, delta, epsilon, r=r)
    print(
        f"qsa: schedule has m = {schedule.m}, Q = {schedule.Q}, expected "
        f"{anneal_quantum.average_cost(schedule):.0f} walk applications per seed",
        flush=True,
    )
    traces = anneal_quantum.run_qsa_ensemble(
        instance, schedule, _seed_list(seed, count), variant, max_n=max_n
    )
    exact = np.array([t.exact_success for t in traces])
    sampled = np.array([t.measured in instance.optimal_set for t in traces])
    report = {
        "config": _config_echo(
            subcommand="qsa", instance=instance.name, epsilon=epsilon, seed=seed,
            seeds=count, r=r, walk_variant=variant, max_n=max_n, delta=delta,
        ),
        "schedule": {
            "delta_beta": float(f"{schedule.delta_beta:.12g}"),
            "beta_m": float(f"{schedule.beta_m:.12g}"),
            "m": schedule.m,
            "Q": schedule.Q,
            "r": schedule.r,
            "expected_cost": float(f"{anneal_quantum.average_cost(schedule):.12g}"),
            "beta_m_adjusted": schedule.beta_m_adjusted,
        },
        "summary": {
            "mean_exact_success": float(f"{exact.mean():.12g}"),
            "measured_success_frequency": float(f"{sampled.mean():.12g}"),
            "mean_total_applications": float(f"{np.mean([t.total_applications for t in traces]):.12g}"),
        },
    }
    if with_traces:
        report["traces"] = [
            anneal_quantum.trace_to_document(t, schedule) for t in traces
        ]
    _write_json(out, report)
    print(f"qsa: mean exact success {exact.mean():.4f} over {count} seeds, report in {out}")


def _collect_instances(args, cfg) -> list[ProblemInstance]:
    paths = _resolve(args, cfg, "instances", None)
    if paths:
        if isinstance(paths, str):
            paths = [p for p in paths.split(",") if p.strip()]
        return [load_instance(p) for p in paths]
    path = _resolve(args, cfg, "instance", None)
    if path:
        return [load_instance(path)]
    return bundled_instances()[:2]  # two_state + ising_n3 demo set


def _cmd_compare(args, cfg) -> None:
    instances = _collect_instances(args, cfg)
    epsilon = float(_resolve(args, cfg, "epsilon", 0.2))
    seed = int(_resolve(args, cfg, "seed", 0))
    count = int(_resolve(args, cfg, "seeds", 12))
    threads = int(_resolve(args, cfg, "threads", 1))
    variant = _VARIANTS[_resolve(args, cfg, "variant", "two-reflection")]
    fmt = _resolve(args, cfg, "format", "csv")
    out = _resolve(args, cfg, "out", None) or f"compare.{fmt}"
    rows = lab.compare(
        instances, epsilon, _seed_list(seed, count),
        walk_variant=variant, threads=threads,
    )
    config = _config_echo(
        subcommand="compare", instances=[i.name for i in instances], epsilon=epsilon,
        seed=seed, seeds=count, walk_variant=variant, threads=threads,
    )
    lab.emit_report(rows, fmt, out, config=config if fmt == "json" else None)
    print(f"compare: wrote {len(rows)} rows to {out}")


def _cmd_scaling(args, cfg) -> None:
    epsilon = float(_resolve(args, cfg, "epsilon", 0.25))
    seed = int(_resolve(args, cfg, "seed", 0))
    count = int(_resolve(args, cfg, "seeds", 6))
    threads = int(_resolve(args, cfg, "threads", 1))
    n = int(_resolve(args, cfg, "family_n", 6))
    ratios_arg = _resolve(args, cfg, "ratios", None)
    if ratios_arg is None:
        ratios = lab.DEFAULT_FAMILY_RATIOS
    elif isinstance(ratios_arg, str):
        ratios = [float(p) for p in ratios_arg.split(",") if p.strip()]
    else:
        ratios = [float(p) for p in ratios_arg]
    variant = _VARIANTS[_resolve(args, cfg, "variant", "two-reflection")]
    out = _resolve(args, cfg, "out", None) or "scaling.csv"
    summary_out = _resolve(args, cfg, "summary_out", None) or (out + ".summary.json")
    family = weak_link_family(n, ratios)
    result = lab.scaling_study(
        family, epsilon, _seed_list(seed, count), walk_variant=variant, threads=threads
    )
    lab.emit_report(result.rows, "csv", out)
    _write_json(
        summary_out,
        {
            "config": _config_echo(
                subcommand="scaling", family_n=n, ratios=list(ratios), epsilon=epsilon,
                seed=seed, seeds=count, walk_variant=variant, threads=threads,
            ),
            "sa_slope": float(f"{result.sa_slope:.12g}"),
            "qsa_slope": float(f"{result.qsa_slope:.12g}"),
        },
    )
    print(
        f"scaling: sa_slope={result.sa_slope:.3f} qsa_slope={result.qsa_slope:.3f}, "
        f"rows in {out}, summary in {summary_out}"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qsa-lab",
        description="Classical and quantum simulated annealing laboratory",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file; flags override its values")
        p.add_argument("--instance", help="instance JSON document")
        p.add_argument("--bundled", help="bundled instance name (two_state, ising_n3, ising_n6)")
        p.add_argument("--epsilon", type=float, help="error probability budget")
        p.add_argument("--seed", type=int, help="master seed (default 0)")
        p.add_argument("--variant", choices=sorted(_VARIANTS), help="walk variant")
        p.add_argument("--out", help="output path")
        p.add_argument("--threads", type=int, help="row-level parallelism (default 1)")
        p.add_argument("--max-n", dest="max_n", type=int, help="state-vector size cap")

    p = sub.add_parser("spectrum", help="chain eigenvalues, gap, and walk phases over a beta grid")
    common(p)
    p.add_argument("--betas", help="comma-separated beta grid")
    p.add_argument("--beta-points", dest="beta_points", type=int, help="linear grid point count")
    p.add_argument("--beta-max", dest="beta_max", type=float, help="linear grid upper end")
    p.set_defaults(func=_cmd_spectrum)

    p = sub.add_parser("gibbs", help="Gibbs distributions over a beta grid")
    common(p)
    p.add_argument("--betas", help="comma-separated beta grid")
    p.add_argument("--beta-points", dest="beta_points", type=int)
    p.add_argument("--beta-max", dest="beta_max", type=float)
    p.set_defaults(func=_cmd_gibbs)

    p = sub.add_parser("sa", help="classical annealing: exact propagation plus optional trials")
    common(p)
    p.add_argument("--c-sa", dest="c_sa", type=float, help="SA schedule constant (default 1)")
    p.add_argument("--trials", type=int, help="Monte Carlo trajectory count")
    p.set_defaults(func=_cmd_sa)

    p = sub.add_parser("qsa", help="quantum annealing runs and success summary")
    common(p)
    p.add_argument("--seeds", type=int, help="number of seeded runs (default 1)")
    p.add_argument("--r", type=int, help="randomization draws per step (default 1)")
    p.add_argument("--traces", action="store_true", default=None, help="embed per-run traces")
    p.set_defaults(func=_cmd_qsa)

    p = sub.add_parser("compare", help="SA vs QSA cost/success table")
    common(p)
    p.add_argument("--instances", help="comma-separated instance files (default: demo bundle)")
    p.add_argument("--seeds", type=int, help="QSA seeds per instance (default 12)")
    p.add_argument("--format", choices=["csv", "json"], help="report format (default csv)")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("scaling", help="cost-versus-gap study over the weak-link family")
    common(p)
    p.add_argument("--family-n", dest="family_n", type=int, help="chain length (default 6)")
    p.add_argument("--ratios", help="comma-separated strong/weak coupling ratios")
    p.add_argument("--seeds", type=int, help="QSA seeds per point (default 6)")
    p.add_argument("--summary-out", dest="summary_out", help="slopes summary path")
    p.set_defaults(func=_cmd_scaling)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    stage = args.command
    try:
        cfg = _load_config(getattr(args, "config", None))
        args.func(args, cfg)
        return 0
    except InstanceFormatError as exc:
        print(f"{stage}: {exc}", file=sys.stderr)
        return 3
    except (CapExceededError, NumericalError) as exc:
        print(f"{stage}: {exc}", file=sys.stderr)
        return 4
    except DomainError as exc:
        print(f"{stage}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
