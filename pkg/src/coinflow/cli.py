"""Command line entry point: ``coinflow {simulate,exact,limits,validate}``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path


from . import exact, limits
from .config import (RunConfig, alpha_for_json, build_config, parse_int_list,
                     parse_scales)
from .configspace import Configuration, omega_count, sample_uniform_composition
from .dynamics import ChainState, is_ergodic, run
from .errors import BudgetError
from .groups import is_connected
from .limits import LimitLaw
from .rng import Stream
from .stats import histogram, histogram_csv, ks_distance, moments
from .weights import CONSTANT, format_weight

log = logging.getLogger("coinflow")


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _csv_text(header: list[str], columns: list[str], rows) -> str:
    buf = io.StringIO()
    for line in header:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows(rows)
    return buf.getvalue()


def _fmt(x) -> str:
    return "" if x is None else f"{x:.12g}"


# -- simulate -------------------------------------------------------------


def _initial_config(cfg: RunConfig, rng: Stream) -> Configuration:
    if cfg.init == "random":
        return Configuration(sample_uniform_composition(cfg.n, cfg.L, rng), cfg.L)
    return Configuration.near_constant(cfg.n, cfg.L)


def simulate_replica(cfg: RunConfig, replica: int) -> dict:
    """Run one replica and write its artifacts; returns the JSON summary."""
    seed = cfg.seed + replica
    spec = cfg.weight_spec()
    rho = cfg.group_distribution()
    model = cfg.model_kind
    law = LimitLaw.for_weight(spec, cfg.T) if cfg.T > 0 else None
    out = Path(cfg.out)
    header = [f"replica={replica}", f"replica_seed={seed}"] + cfg.header_lines()

    rng = Stream(seed)
    state = ChainState(_initial_config(cfg, rng), rng)

    def snapshot(st: ChainState):
        hist = histogram(st.config, cfg.a_N, cfg.bin_width)
        text = histogram_csv(hist, law, header + [f"step={st.step_count}"])
        _write(out / "snapshots" / f"hist_r{replica}_{st.step_count:012d}.csv", text)

    every = max(1, cfg.steps // cfg.snapshots) if cfg.snapshots else max(1, cfg.steps)
    observers = [snapshot] if cfg.snapshots else []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        run(model, state, rho, spec, cfg.steps, observers, every=every, lazy=cfg.lazy)

    hist = histogram(state.config, cfg.a_N, cfg.bin_width)
    _write(out / f"hist_r{replica}_final.csv",
           histogram_csv(hist, law, header + [f"step={state.step_count}"]))
    m = moments(state.config, cfg.a_N, 4)
    summary = {
        "seed": seed,
        "model": model.value,
        "weight": format_weight(spec),
        "alpha": alpha_for_json(spec),
        "N": cfg.n,
        "L": cfg.L,
        "a_N": cfg.a_N,
        "T": cfg.T,
        "n_steps": cfg.steps,
        "ks": ks_distance(hist, law) if law is not None else None,
        "m1": m[0], "m2": m[1], "m3": m[2], "m4": m[3],
        "limit_law": None if law is None else
        {"kind": law.kind, "shape": law.shape, "rate": law.rate},
        "replica": replica,
        "config": cfg.as_dict(),
    }
    _write(out / f"summary_r{replica}.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def _workers(n_jobs: int) -> int:
    cap = os.environ.get("COINFLOW_THREADS")
    limit = int(cap) if cap else (os.cpu_count() or 1)
    return max(1, min(n_jobs, limit))


def cmd_simulate(cfg: RunConfig, echo: bool = True) -> int:
    cfg.resolve()
    rho = cfg.group_distribution()
    cfg.weight_spec()
    if not is_connected(rho):
        log.warning("group hypergraph is disconnected; no ergodicity guarantee")
    workers = _workers(cfg.replicas)
    if workers == 1:
        summaries = [simulate_replica(cfg, r) for r in range(cfg.replicas)]
    else:
        with ProcessPoolExecutor(workers) as pool:
            summaries = list(pool.map(simulate_replica, [cfg] * cfg.replicas,
                                      range(cfg.replicas)))
    for s in summaries if echo else ():
        print(f"replica {s['replica']}: seed={s['seed']} L={s['L']} ks={_fmt(s['ks'])} "
              f"m1={s['m1']:.6g} m2={s['m2']:.6g}")
    return 0


# -- exact ----------------------------------------------------------------


def cmd_exact(cfg: RunConfig) -> int:
    cfg.resolve()
    spec = cfg.weight_spec()
    rho = cfg.group_distribution()
    model = cfg.model_kind
    N, L = cfg.n, cfg.L
    out = Path(cfg.out)
    header = cfg.header_lines()

    table = exact.partition_table(spec, N, L)
    pmf = exact.marginal_pmf(table, N, L)
    rows = []
    max_diff = None
    for k, p in enumerate(pmf):
        lr = diff = None
        if spec.kind == CONSTANT:
            lr = exact.lr_marginal_constant_g(N, L, k)
            diff = abs(p - lr)
            max_diff = diff if max_diff is None else max(max_diff, diff)
        rows.append([k, _fmt(p), _fmt(lr), _fmt(diff)])
    _write(out / "exact_marginal.csv",
           _csv_text(header, ["k", "marginal", "lr_formula", "abs_diff"], rows))

    report = [("states", omega_count(N, L)), ("connected", int(is_connected(rho))),
              ("ergodic", int(is_ergodic(model, spec, rho))), ("max_marginal_lr_diff", max_diff)]
    try:
        kernel = exact.build_kernel(model, spec, rho, N, L)
    except BudgetError as exc:
        log.warning("skipping kernel checks: %s", exc)
    else:
        mu = exact.stationary_probs(model, spec, kernel.states)
        report += [
            ("max_row_sum_error", exact.row_sum_error(kernel)),
            ("max_detailed_balance_violation", exact.check_detailed_balance(kernel, mu)),
            ("stationarity_residual", exact.stationarity_residual(kernel, mu)),
        ]
        _write(out / "exact_stationary.csv",
               _csv_text(header, ["state", "prob"],
                         [[" ".join(map(str, s)), _fmt(p)] for s, p in zip(kernel.states, mu)]))
    _write(out / "exact_balance.csv",
           _csv_text(header, ["metric", "value"],
                     [[k, v if isinstance(v, int) else _fmt(v)] for k, v in report]))
    for k, v in report:
        print(f"{k}: {v}")
    return 0


# -- limits ---------------------------------------------------------------


def cmd_limits(cfg: RunConfig) -> int:
    spec = cfg.weight_spec()
    out = Path(cfg.out)
    header = [f"weight={format_weight(spec)}"]
    c = spec.regularity.alpha + 2 if spec.regularity.alpha > -1 else 1.0

    rows = []
    for K in parse_int_list(cfg.ks):
        s = limits.solve_s_star(spec, K)
        var = limits.tilted_variance(spec, s, K)
        rows.append([K, _fmt(s), _fmt((1 - s) * K), _fmt(c), _fmt(var / K**2), _fmt(1 / c)])
    _write(out / "limits_sstar.csv",
           _csv_text(header, ["K", "s_star", "one_minus_s_times_K", "asymptote",
                              "variance_over_K2", "variance_target"], rows))

    rows = []
    for N in parse_int_list(cfg.llt_n):
        rep = limits.llt_error(spec, N, cfg.llt_b)
        rows.append([N, cfg.llt_b, _fmt(rep.error), _fmt(rep.lost_mass)])
    _write(out / "limits_llt.csv", _csv_text(header, ["N", "b_N", "error", "lost_mass"], rows))

    rows = []
    T = cfg.temp or 1.0
    for N, a in parse_scales(cfg.ensemble):
        rep = limits.ensemble_marginal_vs_limit(spec, N, a, T)
        rows.append([N, _fmt(a), _fmt(T), rep.L, _fmt(rep.tv)])
    _write(out / "limits_ensemble.csv", _csv_text(header, ["N", "a_N", "T", "L", "tv"], rows))
    print(f"wrote limits tables to {out}")
    return 0


# -- validate -------------------------------------------------------------


def cmd_validate(cfg: RunConfig | None, only: list[int] | None = None, quick: bool = False) -> int:
    from . import acceptance

    status = 0
    if cfg is not None:
        spec = cfg.weight_spec()
        if cfg.n is not None:
            rho = cfg.group_distribution()
            if not is_connected(rho):
                log.warning("group hypergraph is disconnected; skipping ergodicity checks")
            elif cfg.coins is not None and omega_count(cfg.n, cfg.coins) <= exact.KERNEL_CAP:
                model = cfg.model_kind
                kernel = exact.build_kernel(model, spec, rho, cfg.n, cfg.coins)
                mu = exact.stationary_probs(model, spec, kernel.states)
                res = exact.stationarity_residual(kernel, mu)
                ok = res <= 1e-10
                print(f"[{'PASS' if ok else 'FAIL'}] config: stationarity residual {res:.3e} <= 1e-10")
                status |= not ok
    results = acceptance.run_all(only=only, quick=quick, echo=True)
    if not all(r.passed for r in results):
        status = 1
    return status


# -- argument parsing -----------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--model", help="immediate | saving | saving_offer | reshuffle")
    p.add_argument("--weight", help="constant:<g> | power:<alpha> | delta0 | table:<v,...>:<zero|const>")
    p.add_argument("--groups", help="pair_complete | pair_edges:<file> | ksubsets:<m> | custom:<file>")
    p.add_argument("--n", type=int, help="number of agents N")
    p.add_argument("--coins", type=int, help="total coins L")
    p.add_argument("--temp", type=float, help="money temperature T (with --scale)")
    p.add_argument("--scale", type=float, help="scale a_N (with --temp); L = round(N a_N T)")
    p.add_argument("--steps", type=int, help="number of group updates")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--replicas", type=int)
    p.add_argument("--snapshots", type=int, help="number of histogram snapshots (0: final only)")
    p.add_argument("--init", choices=["constant", "random"])
    p.add_argument("--bin-width", type=float, dest="bin_width")


def _config_from(args) -> RunConfig:
    keys = ["model", "weight", "groups", "n", "coins", "temp", "scale", "steps", "seed",
            "out", "replicas", "snapshots", "init", "bin_width"]
    return build_config(args.config, **{k: getattr(args, k) for k in keys})


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="coinflow", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in [("simulate", "run the exchange chain and write histograms"),
                       ("exact", "exact marginals and detailed-balance report"),
                       ("limits", "tilted-family asymptotics, LLT and ensemble checks")]:
        _common(sub.add_parser(name, help=text))
    pv = sub.add_parser("validate", help="run the acceptance suite")
    _common(pv)
    pv.add_argument("--only", help="comma-separated criterion numbers")
    pv.add_argument("--quick", action="store_true", help="skip the long simulation criteria")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s: %(message)s")

    try:
        cfg = _config_from(args)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "exact":
            return cmd_exact(cfg)
        if args.command == "limits":
            return cmd_limits(cfg)
        given = args.config or any(getattr(args, k) is not None
                                   for k in ("model", "weight", "groups", "n", "coins"))
        only = parse_int_list(args.only) if args.only else None
        return cmd_validate(cfg if given else None, only=only, quick=args.quick)
    except ValueError as exc:
        print(f"coinflow: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
