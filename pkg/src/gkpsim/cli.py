"""Command-line entry point.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from typing import Any, Callable, Sequence

import numpy as np

from gkpsim import __version__
from gkpsim.analytics import (
    RatePair,
    average_success,
    conditional_success,
    outcome_density,
    postselect_rate,
    rate_variance,
)
from gkpsim.core import HALF_SQRT_PI, ParameterError
from gkpsim.harness import ConfigError, ExperimentConfig, SweepSummary, default_threads, run_sweep

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2

SUBCOMMAND_EXPERIMENTS = {
    "steane-stats": ("steane_stats",),
    "double-measure": ("double_measurement",),
    "repetition": ("repetition",),
    "toric-threshold": ("toric_ideal", "mld_compare"),
    "noisy-syndrome": ("toric_noisy",),
}


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _str_list(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def _add_sweep_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("sweep")
    g.add_argument("--config", help="JSON config file (a previous run's JSON output also works)")
    g.add_argument("--sigma-grid", type=_float_list, help="comma-separated sigma values")
    g.add_argument("--sigma2", type=float, help="ancilla shift width")
    g.add_argument("--sigma2-ratio", type=float, help="ancilla width as a multiple of sigma")
    g.add_argument("--trials", type=int, help="trials per grid cell")
    g.add_argument("--seed", type=int, help="master seed")
    g.add_argument("--k", type=int, help="comb truncation |n| <= k")
    g.add_argument("--block-size", type=int, help="trials per work unit (fixes the random layout)")
    g.add_argument("--threads", type=int, help="worker processes (default: $GKP_MC_THREADS or CPU count)")
    g.add_argument("--out", help="CSV output path (default: stdout)")
    g.add_argument("--json", dest="json_out", help="JSON output path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gkpsim", description="GKP shift-error simulations and analytics.")
    parser.add_argument("--version", action="version", version=f"gkpsim {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="SUBCOMMAND")
    sub.required = True

    p = sub.add_parser("steane-stats", help="conditional and average Steane success rates")
    p.add_argument("--sigma", type=float, help="data shift width (analytic mode)")
    p.add_argument("--points", type=int, default=200, help="grid points for the analytic table")
    p.add_argument("--q-sel", type=_float_list, help="post-selection cut-offs for the summary")
    _add_sweep_flags(p)
    p.set_defaults(handler=_cmd_steane_stats)

    p = sub.add_parser("double-measure", help="second-measurement parity decision curves")
    p.add_argument("--q1-grid", type=_float_list, help="first outcomes in [0, sqrt(pi)/2]")
    _add_sweep_flags(p)
    p.set_defaults(handler=_cmd_sweep("double_measurement"))

    p = sub.add_parser("repetition", help="three-qubit code, likelihood vs majority decoding")
    _add_sweep_flags(p)
    p.set_defaults(handler=_cmd_sweep("repetition"))

    p = sub.add_parser("toric-threshold", help="toric-code logical error rates and crossing")
    p.add_argument("--decoder", type=_str_list, help="uniform, weighted, mld (comma-separated)")
    p.add_argument("--L-grid", dest="L_grid", type=_int_list, help="comma-separated lattice sizes")
    _add_sweep_flags(p)
    p.set_defaults(handler=_cmd_sweep("toric_ideal"))

    p = sub.add_parser("noisy-syndrome", help="defect pre-correction statistics under noisy readout")
    p.add_argument("--pc-grid", dest="p_c_grid", type=_float_list, help="comma-separated thresholds")
    p.add_argument("--L-grid", dest="L_grid", type=_int_list, help="comma-separated lattice sizes")
    _add_sweep_flags(p)
    p.set_defaults(handler=_cmd_sweep("toric_noisy"))

    p = sub.add_parser("validate", help="run the oracle suites")
    p.add_argument("--seed", type=int, default=12345, help="seed for the random instances")
    p.set_defaults(handler=_cmd_validate)
    return parser


def _load_config_file(path: str) -> dict[str, Any]:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON in {path}: {exc.msg}") from exc
    if isinstance(data, dict) and isinstance(data.get("config"), dict):
        data = data["config"]
    if not isinstance(data, dict):
        raise ConfigError("config: top level must be an object")
    return data


_FLAG_FIELDS = {
    "sigma_grid": "sigma_grid",
    "sigma2": "sigma2",
    "sigma2_ratio": "sigma2_ratio",
    "trials": "trials",
    "seed": "master_seed",
    "k": "k",
    "block_size": "block_size",
    "L_grid": "L_grid",
    "p_c_grid": "p_c_grid",
    "q1_grid": "q1_grid",
    "decoder": "decoder",
}


def effective_config(args: argparse.Namespace, default_experiment: str) -> ExperimentConfig:
    data: dict[str, Any] = _load_config_file(args.config) if args.config else {}
    allowed = SUBCOMMAND_EXPERIMENTS[args.command]
    data.setdefault("experiment", default_experiment)
    if data["experiment"] not in allowed:
        raise ConfigError(f"experiment: {args.command} runs {' or '.join(allowed)}, config has {data['experiment']!r}")
    for attr, name in _FLAG_FIELDS.items():
        val = getattr(args, attr, None)
        if val is not None:
            data[name] = val
    if args.sigma2 is not None:
        data.pop("sigma2_ratio", None)
    if args.sigma2_ratio is not None:
        data.pop("sigma2", None)
    return ExperimentConfig.from_dict(data)


def _resolve_threads(args: argparse.Namespace) -> int:
    if args.threads is not None:
        if args.threads < 1:
            raise ConfigError("threads: must be >= 1")
        return args.threads
    return default_threads()


def _emit(summary: SweepSummary, args: argparse.Namespace) -> None:
    text = summary.to_csv()
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.json_out:
        with open(args.json_out, "w", encoding="utf-8") as fh:
            fh.write(summary.to_json())
    info = sys.stderr if not args.out else sys.stdout
    for key in ("crossing", "averaged_improvement"):
        if key in summary.extras:
            print(f"# {key}: {json.dumps(summary.extras[key])}", file=info)


def _cmd_sweep(experiment: str) -> Callable[[argparse.Namespace], int]:
    def handler(args: argparse.Namespace) -> int:
        cfg = effective_config(args, experiment)
        summary = run_sweep(cfg, threads=_resolve_threads(args))
        _emit(summary, args)
        return EXIT_OK

    return handler


def _cmd_steane_stats(args: argparse.Namespace) -> int:
    if args.config or args.trials is not None:
        if args.sigma is not None and args.sigma_grid is None:
            args.sigma_grid = [args.sigma]
        return _cmd_sweep("steane_stats")(args)
    if args.sigma is None:
        raise ConfigError("sigma: required in analytic mode (or pass --trials/--config to simulate)")
    if args.points < 2:
        raise ConfigError("points: must be >= 2")
    rp = RatePair(args.sigma, args.sigma2 or 0.0, args.k or 1)
    q = np.linspace(-HALF_SQRT_PI, HALF_SQRT_PI, args.points, endpoint=False)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["schema_version", "q_cor", "conditional_success", "outcome_density"])
    for qi, cs, dens in zip(q, conditional_success(q, rp), outcome_density(q, rp)):
        writer.writerow([1, repr(float(qi)), repr(float(cs)), repr(float(dens))])
    summary = {
        "sigma1": rp.sigma1,
        "sigma2": rp.sigma2,
        "k": rp.k,
        "average_success": average_success(rp),
        "rate_spread": rate_variance(rp),
        "postselection": [
            {"q_sel": s, "keep_fraction": kf, "min_success": ms}
            for s in (args.q_sel or [0.0, 0.25 * HALF_SQRT_PI, 0.5 * HALF_SQRT_PI, 0.75 * HALF_SQRT_PI, HALF_SQRT_PI])
            for kf, ms in [postselect_rate(rp, min(s, HALF_SQRT_PI))]
        ],
    }
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
        info = sys.stdout
    else:
        sys.stdout.write(buf.getvalue())
        info = sys.stderr
    print(f"# average_success={summary['average_success']:.6f} rate_spread={summary['rate_spread']:.6f}", file=info)
    if args.json_out:
        with open(args.json_out, "w", encoding="utf-8") as fh:
            json.dump({"software": "gkpsim", "version": __version__, **summary}, fh, indent=2)
            fh.write("\n")
    return EXIT_OK


def _cmd_validate(args: argparse.Namespace) -> int:
    from gkpsim.validation import run_all

    results = run_all(seed=args.seed)
    width = max(len(name) for name, _, _ in results)
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name:<{width}}  {detail}")
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_RUNTIME


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.handler(args)
    except (ConfigError, ParameterError) as exc:
        print(f"gkpsim: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - the CLI reports every failure as exit 1
        print(f"gkpsim: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
