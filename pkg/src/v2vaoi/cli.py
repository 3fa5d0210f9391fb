"""Command-line entry point: reproducible experiments over the simulator.

Four commands:
  solve    - one scene, one strategy; prints power/SNR/delay matrices.
  compare  - repeated trials of every strategy with summary statistics.
  aoi      - information-age and proxy perception report per mode.
  verify   - heuristics against the exhaustive grid oracle on small scenes.

Every report embeds the fully resolved configuration.  Machine-readable
output is line-delimited JSON; with a fixed master seed it is byte-identical
across runs regardless of --jobs.
"""

import argparse
import json
import sys

import numpy as np

from .allocator import (
    AllocationProblem,
    GeneticConfig,
    GreedyConfig,
    default_pa,
    genetic_pa,
    greedy_pa,
    oracle_pa,
)
from .aoi import AoiConfig, aoi_summary, build_aoi_records
from .channel import ChannelParams
from .errors import DomainError, SimulationError
from .metrics import ComparisonConfig, run_comparison
from .proxy import estimate_scene_ap
from .scenario import ScenarioSpec, generate_scene, load_distance_matrix
from .seeds import derive_seed

_CHANNEL_DEFAULTS = {
    "alpha": 3.0,
    "bandwidth": 1.0e7,
    "noise": 4.14e-14,
    "p_min": 1.0e-6,
    "p_max": 23.0,
    "payload": 8.48e6,
}

_COMMON_DEFAULTS = {
    "scene": None,
    "seed": 0,
    "box_side": 100.0,
    "min_sep": 5.0,
    "rate_factor": 1.0,
    "out": None,
    "format": "records",
    "config": None,
    "learn_rate": 0.05,
    "epochs": 5000,
    "generations": 100_000,
    "population": 50,
    **_CHANNEL_DEFAULTS,
}

_DEFAULTS = {
    "solve": {**_COMMON_DEFAULTS, "n": 3, "strategy": "greedy"},
    "compare": {
        **_COMMON_DEFAULTS,
        "n": "3,4,5",
        "trials": 15,
        "jobs": 1,
        "epochs": None,  # None keeps the 5000/500/50 ablation ladder
        "plot_out": None,
    },
    "aoi": {
        **_COMMON_DEFAULTS,
        "n": 3,
        "looptime": 0.1,
        "period": 0.1,
        "compute_delay": 0.0,
    },
    "verify": {
        **_COMMON_DEFAULTS,
        "n": 3,
        "instances": 10,
        "grid": 20,
        "gap_threshold": 0.05,
    },
}


def _add_common(p: argparse.ArgumentParser) -> None:
    s = argparse.SUPPRESS
    p.add_argument("--scene", default=s, help="distance-matrix or coords file")
    p.add_argument("--seed", type=int, default=s, help="master seed (u64)")
    p.add_argument("--box-side", type=float, default=s, dest="box_side")
    p.add_argument("--min-sep", type=float, default=s, dest="min_sep")
    p.add_argument("--rate-factor", type=float, default=s, dest="rate_factor",
                   help="payload scale in (0, 1]; delays scale exactly with it")
    p.add_argument("--out", default=s, help="write a machine-readable report here")
    p.add_argument("--format", choices=("text", "records"), default=s)
    p.add_argument("--config", default=s, help="JSON file with flag defaults; flags win")
    p.add_argument("--learn-rate", type=float, default=s, dest="learn_rate")
    p.add_argument("--epochs", type=int, default=s, help="greedy epoch budget")
    p.add_argument("--generations", type=int, default=s, help="GA generation cap")
    p.add_argument("--population", type=int, default=s, help="GA population size")
    p.add_argument("--alpha", type=float, default=s)
    p.add_argument("--bandwidth", type=float, default=s, help="channel bandwidth [Hz]")
    p.add_argument("--noise", type=float, default=s, help="noise power [W]")
    p.add_argument("--p-min", type=float, default=s, dest="p_min")
    p.add_argument("--p-max", type=float, default=s, dest="p_max")
    p.add_argument("--payload", type=float, default=s, help="payload size [bits]")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="v2vaoi",
        description="V2V channel simulator with max-min-SNR power allocation",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    s = argparse.SUPPRESS

    p = sub.add_parser("solve", help="solve one scene with one strategy")
    _add_common(p)
    p.add_argument("--n", type=int, default=s)
    p.add_argument("--strategy", choices=("default", "greedy", "genetic"), default=s)

    p = sub.add_parser("compare", help="strategy comparison over repeated trials")
    _add_common(p)
    p.add_argument("--n", default=s, help="comma-separated vehicle counts, e.g. 3,4,5")
    p.add_argument("--trials", type=int, default=s)
    p.add_argument("--jobs", type=int, default=s, help="worker threads over trials")
    p.add_argument("--plot-out", default=s, dest="plot_out",
                   help="write x/y series for external plotting")

    p = sub.add_parser("aoi", help="information-age and proxy perception report")
    _add_common(p)
    p.add_argument("--n", type=int, default=s)
    p.add_argument("--looptime", type=float, default=s, help="perception cycle [s]")
    p.add_argument("--period", type=float, default=s, help="sensor sampling period [s]")
    p.add_argument("--compute-delay", type=float, default=s, dest="compute_delay")

    p = sub.add_parser("verify", help="check heuristics against the grid oracle")
    _add_common(p)
    p.add_argument("--n", type=int, default=s)
    p.add_argument("--instances", type=int, default=s)
    p.add_argument("--grid", type=int, default=s, help="oracle grid points per link")
    p.add_argument("--gap-threshold", type=float, default=s, dest="gap_threshold")
    return parser


def _resolve(args: argparse.Namespace) -> dict:
    """defaults < config file < explicit flags."""
    explicit = {k: v for k, v in vars(args).items() if k != "command"}
    defaults = dict(_DEFAULTS[args.command])
    config_path = explicit.get("config", defaults["config"])
    from_file = {}
    if config_path:
        try:
            with open(config_path, encoding="utf-8") as fh:
                from_file = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise DomainError(f"cannot read config file {config_path}: {exc}") from exc
        unknown = set(from_file) - set(defaults)
        if unknown:
            raise DomainError(f"unknown config keys: {sorted(unknown)}")
    merged = {**defaults, **from_file, **explicit}
    merged["command"] = args.command
    return merged


def _channel_params(cfg: dict) -> ChannelParams:
    return ChannelParams(
        alpha=cfg["alpha"],
        bandwidth_hz=cfg["bandwidth"],
        noise_w=cfg["noise"],
        p_min_w=cfg["p_min"],
        p_max_w=cfg["p_max"],
        payload_bits=cfg["payload"],
    )


def _greedy_cfg(cfg: dict, epochs: int | None = None) -> GreedyConfig:
    return GreedyConfig(
        learn_rate=cfg["learn_rate"],
        max_epochs=epochs if epochs is not None else cfg["epochs"],
    )


def _genetic_cfg(cfg: dict, seed: int) -> GeneticConfig:
    return GeneticConfig(
        population_size=cfg["population"],
        max_generations=cfg["generations"],
        rng_seed=seed,
    )


def _make_scene(cfg: dict, n: int):
    if cfg["scene"]:
        dist = load_distance_matrix(cfg["scene"])
        return dist, f"file {cfg['scene']}"
    spec = ScenarioSpec(
        n_vehicles=n,
        box_side_m=cfg["box_side"],
        min_separation_m=cfg["min_sep"],
        rng_seed=derive_seed(cfg["seed"], 0),
    )
    dist, _ = generate_scene(spec)
    return dist, f"generated (n={n}, seed={cfg['seed']})"


def _fmt_matrix(m: np.ndarray, title: str) -> str:
    lines = [title]
    for row in m:
        lines.append("  " + "  ".join(f"{v:>12.6g}" for v in row))
    return "\n".join(lines)


def _fmt_table(headers, rows) -> str:
    cells = [[str(h) for h in headers]] + [[str(c) for c in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(headers))]
    out = []
    for r in cells:
        out.append("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
    return "\n".join(out)


def _write_output(cfg: dict, text: str, records: list) -> None:
    print(text)
    if cfg["out"]:
        with open(cfg["out"], "w", encoding="utf-8") as fh:
            if cfg["format"] == "records":
                for rec in records:
                    fh.write(json.dumps(rec) + "\n")
            else:
                fh.write(text + "\n")


# execution details that cannot change any computed number; keeping them out
# of the echoed config lets runs that differ only in I/O or worker count
# produce byte-identical record files
_NON_EXPERIMENT_KEYS = frozenset({"out", "format", "plot_out", "jobs", "config"})


def _config_record(cfg: dict) -> dict:
    keys = sorted(k for k in cfg if k not in _NON_EXPERIMENT_KEYS)
    return {"type": "config", **{k: cfg[k] for k in keys}}


def cmd_solve(cfg: dict) -> int:
    params = _channel_params(cfg)
    dist, scene_desc = _make_scene(cfg, cfg["n"])
    problem = AllocationProblem(params, dist)
    strategy = cfg["strategy"]
    if strategy == "default":
        result = default_pa(problem)
    elif strategy == "greedy":
        result = greedy_pa(problem, _greedy_cfg(cfg))
    else:
        result = genetic_pa(problem, _genetic_cfg(cfg, derive_seed(cfg["seed"], 1)))
    delay = result.metrics.delay_s * cfg["rate_factor"]
    max_delay = float(np.max(delay)) if dist.n else 0.0

    text = "\n".join(
        [
            f"scene: {scene_desc}",
            f"strategy: {strategy} (epochs used {result.epochs_used}, "
            f"converged {result.converged})",
            f"objective: min SNR {result.objective_min_snr:.6g}, "
            f"max delay {max_delay:.6g} s (rate factor {cfg['rate_factor']})",
            "",
            _fmt_matrix(result.power.p, "power matrix [W]:"),
            "",
            _fmt_matrix(result.metrics.snr, "SNR matrix:"),
            "",
            _fmt_matrix(delay, "delay matrix [s]:"),
        ]
    )
    records = [
        _config_record(cfg),
        {
            "type": "solve_result",
            "strategy": strategy,
            "scene": scene_desc,
            "objective_min_snr": result.objective_min_snr,
            "objective_max_delay_s": max_delay,
            "epochs_used": result.epochs_used,
            "converged": result.converged,
            "distances_m": dist.d.tolist(),
            "power_w": result.power.p.tolist(),
            "snr": result.metrics.snr.tolist(),
            "delay_s": delay.tolist(),
        },
    ]
    _write_output(cfg, text, records)
    return 0


def cmd_compare(cfg: dict) -> int:
    params = _channel_params(cfg)
    counts = [int(tok) for tok in str(cfg["n"]).split(",") if tok.strip()]
    ladder = (cfg["epochs"],) if cfg["epochs"] is not None else (5000, 500, 50)
    comparison_cfg = ComparisonConfig(
        params=params,
        greedy=_greedy_cfg(cfg, epochs=max(ladder)),
        genetic=GeneticConfig(
            population_size=cfg["population"], max_generations=cfg["generations"]
        ),
        greedy_epoch_ladder=ladder,
        rate_factor=cfg["rate_factor"],
    )
    blocks = []
    records = [_config_record(cfg)]
    plot_series = {}
    for n in counts:
        spec = ScenarioSpec(
            n_vehicles=n,
            box_side_m=cfg["box_side"],
            min_separation_m=cfg["min_sep"],
            rng_seed=derive_seed(cfg["seed"], n),
        )
        comparison = run_comparison(spec, cfg["trials"], comparison_cfg, jobs=cfg["jobs"])
        rows = [
            (
                agg.strategy_name,
                f"{agg.rmse_vs_reference:.6g}",
                f"{agg.delay_variance:.6g}",
                f"{agg.delay_mean:.6g}",
            )
            for agg in comparison.aggregates
        ]
        blocks.append(
            f"n={n} ({cfg['trials']} trials, reference {comparison.reference_strategy}, "
            f"{comparison.variance_convention})\n"
            + _fmt_table(
                ("strategy", "rmse_vs_genetic [s]", "variance [s^2]", "mean [s]"), rows
            )
        )
        records.append(
            {
                "type": "comparison",
                "n": n,
                "trials": cfg["trials"],
                "reference_strategy": comparison.reference_strategy,
                "variance_convention": comparison.variance_convention,
                "aggregates": [
                    {
                        "strategy": agg.strategy_name,
                        "rmse_vs_reference": agg.rmse_vs_reference,
                        "delay_variance": agg.delay_variance,
                        "delay_mean": agg.delay_mean,
                    }
                    for agg in comparison.aggregates
                ],
                "per_trial": [
                    {
                        "trial_index": rec.trial_index,
                        "scene_seed": rec.scene_seed,
                        "strategies": [
                            {
                                "strategy": s.strategy_name,
                                "min_snr": s.min_snr,
                                "epochs_used": s.epochs_used,
                                "rmse_vs_reference": s.rmse_vs_reference,
                            }
                            for s in rec.strategies
                        ],
                    }
                    for rec in comparison.trials
                ],
            }
        )
        for agg in comparison.aggregates:
            for metric, value in (
                ("rmse_vs_genetic", agg.rmse_vs_reference),
                ("variance", agg.delay_variance),
                ("mean", agg.delay_mean),
            ):
                plot_series.setdefault(f"{metric}.{agg.strategy_name}", []).append(
                    (n, value)
                )
    if cfg["plot_out"]:
        with open(cfg["plot_out"], "w", encoding="utf-8") as fh:
            for name in sorted(plot_series):
                fh.write(f"# series {name}\n")
                for x, y in plot_series[name]:
                    fh.write(f"{x} {y!r}\n")
    _write_output(cfg, "\n\n".join(blocks), records)
    return 0


def cmd_aoi(cfg: dict) -> int:
    params = _channel_params(cfg)
    dist, scene_desc = _make_scene(cfg, cfg["n"])
    problem = AllocationProblem(params, dist)
    aoi_cfg = AoiConfig(
        compute_delay_s=cfg["compute_delay"],
        sample_period_s=cfg["period"],
        looptime_s=cfg["looptime"],
        rng_seed=derive_seed(cfg["seed"], 2),
    )
    n = dist.n
    modes = [
        ("zero_delay", np.zeros((n, n))),
        ("default", default_pa(problem).metrics.delay_s * cfg["rate_factor"]),
        ("greedy", greedy_pa(problem, _greedy_cfg(cfg)).metrics.delay_s * cfg["rate_factor"]),
    ]
    rows = []
    records = [_config_record(cfg)]
    for mode, delays in modes:
        recs = build_aoi_records(delays, aoi_cfg)
        summary = aoi_summary(recs, aoi_cfg.looptime_s)
        estimate = estimate_scene_ap(recs)
        rows.append(
            (
                mode,
                f"{summary.max_age_s:.4g}",
                f"{summary.mean_age_s:.4g}",
                f"{summary.age_variance:.4g}",
                summary.stale_count,
                f"{estimate.ap30:.3f}",
                f"{estimate.ap50:.3f}",
                f"{estimate.ap70:.3f}",
            )
        )
        records.append(
            {
                "type": "aoi_mode",
                "mode": mode,
                "scene": scene_desc,
                "max_age_s": summary.max_age_s,
                "mean_age_s": summary.mean_age_s,
                "age_variance": summary.age_variance,
                "stale_count": summary.stale_count,
                "effective_max_age_s": summary.effective_max_age_s,
                "effective_mean_age_s": summary.effective_mean_age_s,
                "proxy_ap30": estimate.ap30,
                "proxy_ap50": estimate.ap50,
                "proxy_ap70": estimate.ap70,
                "proxy_label": estimate.label,
            }
        )
    text = (
        f"scene: {scene_desc}; looptime {aoi_cfg.looptime_s} s, "
        f"period {aoi_cfg.sample_period_s} s, compute delay "
        f"{aoi_cfg.compute_delay_s} s\n"
        f"(AP columns are proxy estimates; effective ages add the looptime)\n"
        + _fmt_table(
            (
                "mode",
                "max_age [s]",
                "mean_age [s]",
                "variance",
                "stale",
                "ap30*",
                "ap50*",
                "ap70*",
            ),
            rows,
        )
    )
    _write_output(cfg, text, records)
    return 0


def cmd_verify(cfg: dict) -> int:
    params = _channel_params(cfg)
    rows = []
    records = [_config_record(cfg)]
    worst_greedy_gap = 0.0
    for k in range(cfg["instances"]):
        if cfg["scene"]:
            if cfg["instances"] != 1:
                raise DomainError("use --instances 1 with a fixed --scene file")
            dist, _ = _make_scene(cfg, cfg["n"])
        else:
            spec = ScenarioSpec(
                n_vehicles=cfg["n"],
                box_side_m=cfg["box_side"],
                min_separation_m=cfg["min_sep"],
                rng_seed=derive_seed(cfg["seed"], k, 0),
            )
            dist, _ = generate_scene(spec)
        problem = AllocationProblem(params, dist)
        oracle = oracle_pa(problem, cfg["grid"])
        greedy = greedy_pa(problem, _greedy_cfg(cfg))
        genetic = genetic_pa(problem, _genetic_cfg(cfg, derive_seed(cfg["seed"], k, 1)))
        gaps = {
            name: max(0.0, (oracle.objective_min_snr - obj) / oracle.objective_min_snr)
            for name, obj in (
                ("greedy", greedy.objective_min_snr),
                ("genetic", genetic.objective_min_snr),
            )
        }
        worst_greedy_gap = max(worst_greedy_gap, gaps["greedy"])
        rows.append(
            (
                k,
                f"{oracle.objective_min_snr:.6g}",
                f"{greedy.objective_min_snr:.6g}",
                f"{gaps['greedy']:.4%}",
                f"{genetic.objective_min_snr:.6g}",
                f"{gaps['genetic']:.4%}",
            )
        )
        records.append(
            {
                "type": "verify_instance",
                "instance": k,
                "oracle_min_snr": oracle.objective_min_snr,
                "greedy_min_snr": greedy.objective_min_snr,
                "greedy_gap": gaps["greedy"],
                "genetic_min_snr": genetic.objective_min_snr,
                "genetic_gap": gaps["genetic"],
            }
        )
    verdict = worst_greedy_gap <= cfg["gap_threshold"]
    text = (
        _fmt_table(
            ("instance", "oracle", "greedy", "greedy_gap", "genetic", "genetic_gap"),
            rows,
        )
        + f"\nworst greedy gap {worst_greedy_gap:.4%} vs threshold "
        f"{cfg['gap_threshold']:.4%}: {'OK' if verdict else 'EXCEEDED'}"
    )
    records.append(
        {
            "type": "verify_verdict",
            "worst_greedy_gap": worst_greedy_gap,
            "gap_threshold": cfg["gap_threshold"],
            "ok": verdict,
        }
    )
    _write_output(cfg, text, records)
    return 0 if verdict else 2


_COMMANDS = {
    "solve": cmd_solve,
    "compare": cmd_compare,
    "aoi": cmd_aoi,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _resolve(args)
        return _COMMANDS[args.command](cfg)
    except SimulationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def app() -> None:
    sys.exit(main())
