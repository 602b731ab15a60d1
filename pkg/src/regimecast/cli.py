"""Command-line front end.

Subcommands:
    run               train, stream one strategy, write trace + report
    compare           run several strategies (and model variants) side by side
    inspect-clusters  cluster the validation windows and dump plot data
    synth             generate a synthetic multi-regime series as CSV

Exit codes: 0 ok, 1 config error, 2 data error, 3 numeric/pool error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .clustering import clustering_to_dict, inter_cluster_distance, mean_within_cluster_distance
from .config import EngineConfig, config_echo, parse_config_file, resolve_config
from .engine import RunTrace, STRATEGIES, StrategyConfig, build_pool, run, train_base, write_trace
from .errors import ConfigError, RegimecastError
from .evaluation import aggregate, emit_report, row_from_trace, \
    write_cluster_traces, write_error_curves
from .pool import cluster_windows, load_pool, save_pool
from .series import TimeSeries, fit_scaler, load_csv, make_synthetic, segment_nonoverlapping, split

DEFAULT_OUT = "regimecast_out"
OUT_ENV = "REGIMECAST_OUT"


@dataclass(frozen=True)
class CommandResult:
    """What a subcommand produced: status, output location, console text."""

    exit_code: int = 0
    out_dir: Path | None = None
    written: tuple[Path, ...] = ()
    message: str = ""


def _parse_overrides(pairs: list[str] | None) -> dict[str, str]:
    out: dict[str, str] = {}
    for raw in pairs or []:
        key, sep, value = raw.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"--set expects KEY=VALUE, got {raw!r}")
        out[key.strip()] = value.strip()
    return out


def _resolve(args: argparse.Namespace, extra: dict[str, str] | None = None) -> EngineConfig:
    file_values = parse_config_file(args.config) if args.config else None
    overrides = _parse_overrides(getattr(args, "set", None))
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = str(args.seed)
    if extra:
        overrides.update(extra)
    return resolve_config(file_values, overrides)


def _out_dir(args: argparse.Namespace) -> Path:
    return Path(args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT)


def _parse_column(raw: str) -> str | int:
    try:
        return int(raw)
    except ValueError:
        return raw


def _load_series(path: str | None, column: str, cfg: EngineConfig) -> TimeSeries:
    if path is None:
        return make_synthetic(cfg.synthetic_spec(), window_len=cfg.window_len)
    return load_csv(path, column=_parse_column(column), name=Path(path).stem)


def _parse_variant(raw: str) -> tuple[str, dict[str, str]]:
    """NAME:key=value,key=value (use '/' inside tuple values, commas separate pairs)."""
    name, _, rest = raw.partition(":")
    name = name.strip()
    if not name:
        raise ConfigError(f"--variant needs a name before ':', got {raw!r}")
    overrides: dict[str, str] = {}
    if rest.strip():
        for pair in rest.split(","):
            key, sep, value = pair.partition("=")
            if not sep or not key.strip():
                raise ConfigError(f"--variant {name!r}: expected key=value, got {pair!r}")
            overrides[key.strip()] = value.strip()
    return name, overrides


def cmd_run(args: argparse.Namespace) -> CommandResult:
    cfg = _resolve(args)
    series = _load_series(args.data, args.column, cfg)
    series_split = split(series, cfg.fractions, window_len=cfg.window_len)
    strategy_cfg = cfg.strategy_config(args.strategy)

    pool = None
    base_weights = None
    if args.load_pool:
        if args.strategy == "base":
            raise ConfigError("--load-pool needs a pool strategy, not 'base'")
        pool = load_pool(args.load_pool)
        if pool.model_spec != strategy_cfg.model:
            raise ConfigError(
                f"loaded pool was built for {pool.model_spec.kind} with "
                f"input_len={pool.model_spec.input_len}; config asks for "
                f"{strategy_cfg.model.kind} with input_len={strategy_cfg.model.input_len}"
            )
        base_weights = pool.base_weights
    if args.save_pool:
        if args.strategy == "base":
            raise ConfigError("--save-pool needs a pool strategy, not 'base'")
        if pool is None:
            base_weights, pool, _ = build_pool(series, series_split, strategy_cfg)
        save_pool(pool, args.save_pool)

    trace = run(series, series_split, strategy_cfg, base_weights=base_weights, pool=pool)

    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(config_echo(cfg))
    write_trace(trace, out)
    report = aggregate([row_from_trace(trace)])
    written = emit_report(report, out, zero_timings=args.zero_timings)
    row = report.rows[0]
    lines = [
        f"{row.dataset} {row.model} {row.strategy}: rmse={row.rmse:.6f} "
        f"nrmse={row.nrmse:.6f} forecasts={row.n_forecasts} "
        f"adaptations={trace.adaptation_count} pool_size={trace.pool_size_final}",
        f"wrote {out}",
    ]
    return CommandResult(out_dir=out, written=tuple(written), message="\n".join(lines))


def _compare_task(task: tuple[TimeSeries, object, list[StrategyConfig], str]
                  ) -> tuple[list[RunTrace], str]:
    """One dataset/variant cell: all strategies over a shared base fit."""
    series, series_split, strategy_cfgs, label = task
    cache: dict = {}
    traces = []
    for scfg in strategy_cfgs:
        key = (scfg.model, scfg.train, scfg.seed, scfg.scale)
        if key not in cache:
            cache[key] = train_base(series, series_split, scfg)
        traces.append(run(series, series_split, scfg, base_weights=cache[key]))
    return traces, label


def cmd_compare(args: argparse.Namespace) -> CommandResult:
    strategies = [s.strip() for s in args.strategies.split(",") if s.strip()]
    if len(strategies) < 2:
        raise ConfigError("compare needs at least two strategies")
    if len(set(strategies)) != len(strategies):
        raise ConfigError("duplicate strategy in --strategies")
    for s in strategies:
        if s not in STRATEGIES:
            raise ConfigError(f"unknown strategy {s!r}; choose from {', '.join(STRATEGIES)}")

    variants = [_parse_variant(v) for v in args.variant] if args.variant else [("", {})]
    names = [n for n, _ in variants]
    if len(set(names)) != len(names):
        raise ConfigError("duplicate --variant names")

    data_paths: list[str | None] = list(args.data) if args.data else [None]
    stems = [Path(p).stem if p else None for p in data_paths]
    if len(set(stems)) != len(stems):
        raise ConfigError("two --data files share a stem; dataset names must be unique")

    tasks = []
    for path in data_paths:
        for name, overrides in variants:
            cfg = _resolve(args, extra=overrides)
            series = _load_series(path, args.column, cfg)
            series_split = split(series, cfg.fractions, window_len=cfg.window_len)
            label = name or cfg.model_kind
            tasks.append((series, series_split,
                          [cfg.strategy_config(s) for s in strategies], label))
    labels = [t[3] for t in tasks[: len(variants)]]
    if len(set(labels)) != len(labels):
        raise ConfigError("variants resolve to the same model label; name them explicitly")

    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as executor:
            results = list(executor.map(_compare_task, tasks))
    else:
        results = [_compare_task(t) for t in tasks]

    all_traces = []
    trace_labels = []
    rows = []
    for traces, label in results:
        for trace in traces:
            all_traces.append(trace)
            trace_labels.append(label)
            rows.append(row_from_trace(trace, model_label=label))
    report = aggregate(rows)

    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    echo = config_echo(_resolve(args))
    if args.variant:
        variant_notes = "".join(
            f"# variant {name}: " + ", ".join(f"{k}={v}" for k, v in sorted(ov.items())) + "\n"
            for name, ov in variants
        )
        echo = echo + variant_notes
    (out / "config.txt").write_text(echo)
    written = list(emit_report(report, out, zero_timings=args.zero_timings))
    if args.plot_data:
        written += write_error_curves(all_traces, out / "plot_data", labels=trace_labels)

    lines = [_summary_line(e) for e in report.summary]
    lines.append(f"wrote {out}")
    return CommandResult(out_dir=out, written=tuple(written), message="\n".join(lines))


def _summary_line(entry) -> str:
    return (f"{entry.model}/{entry.strategy}: avg_nrmse={entry.avg_nrmse:.6f} "
            f"(sd {entry.std_nrmse:.6f}) local_rank={entry.local_rank:.2f} "
            f"global_rank={entry.global_rank_avg:.2f}")


def cmd_inspect_clusters(args: argparse.Namespace) -> CommandResult:
    cfg = _resolve(args)
    series = _load_series(args.data, args.column, cfg)
    series_split = split(series, cfg.fractions, window_len=cfg.window_len)
    scaled = fit_scaler(series, series_split) if cfg.scale else series
    windows = segment_nonoverlapping(scaled, series_split.val, cfg.window_len)
    clustering = cluster_windows(windows, cfg.xmeans_config(), cfg.pool_config())

    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    written = list(write_cluster_traces(clustering, out))
    pool_cfg = cfg.pool_config()
    if clustering.k >= 2:
        spread = inter_cluster_distance(clustering, pool_cfg.inter_stat)
    else:
        spread = mean_within_cluster_distance(clustering)
    payload = {
        "dataset": series.name,
        "window_len": cfg.window_len,
        "n_windows": len(windows),
        "novelty_threshold": pool_cfg.novelty_fraction * spread,
        "clustering": clustering_to_dict(clustering),
    }
    json_path = out / "clusters.json"
    json_path.write_text(json.dumps(payload, indent=2) + "\n")
    written.append(json_path)

    sizes = [c.size for c in clustering.clusters]
    lines = [
        f"{series.name}: {clustering.k} clusters over {len(windows)} validation "
        f"windows, sizes={sizes}, inertia={clustering.inertia:.6f}",
        f"wrote {out}",
    ]
    return CommandResult(out_dir=out, written=tuple(written), message="\n".join(lines))


def cmd_synth(args: argparse.Namespace) -> CommandResult:
    cfg = _resolve(args)
    series = make_synthetic(cfg.synthetic_spec(), window_len=cfg.window_len)
    path = Path(args.path)
    if path.parent != Path(""):
        path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["value"] + [repr(float(v)) for v in series.values]
    path.write_text("\n".join(lines) + "\n")
    return CommandResult(written=(path,),
                         message=f"wrote {len(series.values)} values to {path}")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument("--set", action="append", metavar="KEY=VALUE", default=[],
                        help="override one config key (repeatable)")
    parser.add_argument("--seed", type=int, help="shorthand for --set seed=N")
    parser.add_argument("--out", help=f"output directory (default ${OUT_ENV} or {DEFAULT_OUT})")


def _add_data(parser: argparse.ArgumentParser, repeatable: bool = False) -> None:
    if repeatable:
        parser.add_argument("--data", action="append", metavar="CSV",
                            help="input series CSV (repeatable); omit for a synthetic series")
    else:
        parser.add_argument("--data", metavar="CSV",
                            help="input series CSV; omit for a synthetic series")
    parser.add_argument("--column", default="0",
                        help="CSV column to read, by index or header name (default 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="regimecast",
        description="Adaptive forecasting with drift-triggered specialist pools.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p_run = sub.add_parser("run", help="stream one strategy and write its trace")
    _add_common(p_run)
    _add_data(p_run)
    p_run.add_argument("--strategy", choices=STRATEGIES, default="online_tune")
    p_run.add_argument("--save-pool", metavar="JSON",
                       help="write the offline specialist pool to this path before streaming")
    p_run.add_argument("--load-pool", metavar="JSON",
                       help="reuse a saved pool (same data and scaling expected)")
    p_run.add_argument("--zero-timings", action="store_true",
                       help="zero runtime columns in the report for reproducible bytes")
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser("compare", help="benchmark strategies side by side")
    _add_common(p_cmp)
    _add_data(p_cmp, repeatable=True)
    p_cmp.add_argument("--strategies", default=",".join(STRATEGIES),
                       help="comma-separated strategies (default: all)")
    p_cmp.add_argument("--variant", action="append", metavar="NAME:KEY=VALUE,...",
                       help="add a model variant, e.g. mlp16:model.kind=mlp,model.hidden=16 "
                            "(use '/' inside tuple values)")
    p_cmp.add_argument("--workers", type=int, default=1,
                       help="parallel worker processes for dataset/variant cells")
    p_cmp.add_argument("--zero-timings", action="store_true",
                       help="zero runtime columns in the report for reproducible bytes")
    p_cmp.add_argument("--plot-data", action="store_true",
                       help="also write per-step absolute-error CSVs under plot_data/")
    p_cmp.set_defaults(func=cmd_compare)

    p_ins = sub.add_parser("inspect-clusters",
                           help="cluster validation windows and dump their traces")
    _add_common(p_ins)
    _add_data(p_ins)
    p_ins.set_defaults(func=cmd_inspect_clusters)

    p_syn = sub.add_parser("synth", help="write a synthetic multi-regime series to CSV")
    _add_common(p_syn)
    p_syn.add_argument("path", help="output CSV path")
    p_syn.set_defaults(func=cmd_synth)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        result: CommandResult = args.func(args)
    except RegimecastError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    if result.message:
        print(result.message)
    return result.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
