"""Command line entry point: ``apsm-sic {run,sweep,gen}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from .config import ConfigError, ExperimentConfig, load_config
from .harness import (cell_name, run_experiment, run_sweep, summary_row, write_curve_csv,
                      write_summary_csv)
from .si_signal import MalformedFileError, generate_si, generate_tx, save_iq

log = logging.getLogger("apsm_sic")


def _floats(text: str) -> List[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> List[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _strs(text: str) -> List[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="apsm-sic", description="Kernel APSM self-interference cancellation experiments.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment from a config file")
    run.add_argument("--config", required=True, help="key = value config file")
    run.add_argument("--out", help="learning-curve CSV (overrides 'out' in the config)")
    run.add_argument("--seed", type=int, help="base seed (overrides the config)")

    sweep = sub.add_parser("sweep", help="grid over mu / q / kernel")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--out", required=True, help="output directory")
    sweep.add_argument("--seed", type=int)
    sweep.add_argument("--mu", type=_floats, help="comma separated step sizes")
    sweep.add_argument("--q", type=_ints, help="comma separated window sizes")
    sweep.add_argument("--kernel", type=_strs, help="comma separated kernels")

    gen = sub.add_parser("gen", help="write synthetic transmit (and received) IQ files")
    gen.add_argument("--out", required=True, help="transmit IQ file")
    gen.add_argument("--n", type=int, required=True, help="number of samples")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--config", help="channel parameters; defaults otherwise")
    gen.add_argument("--rx-out", help="also write the received SI to this file")
    return p


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else ExperimentConfig()
    if getattr(args, "seed", None) is not None:
        cfg = cfg.replace(seed=args.seed)
    return cfg


def _cmd_run(args) -> int:
    cfg = _load(args)
    out = args.out or cfg.out
    if not out:
        raise ConfigError("out: no output path (use --out or set 'out' in the config)")
    curve = run_experiment(cfg)
    write_curve_csv(out, curve)
    summary = Path(out).with_suffix(".summary.csv")
    write_summary_csv(summary, [summary_row(cfg, curve)])
    print(f"{cell_name(cfg)}: test MSE {curve.test_mse_db:.2f} dB, dictionary {curve.dict_report()}")
    return 0


def _cmd_sweep(args) -> int:
    cfg = _load(args)
    changes = {}
    if args.mu:
        changes["sweep_mu"] = args.mu
    if args.q:
        changes["sweep_q"] = args.q
    if args.kernel:
        changes["sweep_kernel"] = args.kernel
    if changes:
        cfg = cfg.replace(**changes)
    files = run_sweep(cfg, args.out)
    for f in files:
        print(f)
    return 0


def _cmd_gen(args) -> int:
    if args.n < 1:
        raise ConfigError(f"n: must be >= 1 (got {args.n})")
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    tx = generate_tx(args.n, cfg.tx_power, seed=2 * args.seed)
    save_iq(args.out, tx)
    if args.rx_out:
        save_iq(args.rx_out, generate_si(cfg.channel_model(seed=2 * args.seed + 1), tx))
    return 0


def cli_main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": _cmd_run, "sweep": _cmd_sweep, "gen": _cmd_gen}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (OSError, MalformedFileError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
