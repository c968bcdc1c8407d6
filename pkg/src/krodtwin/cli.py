"""Command-line entry point: ``krodtwin run|plot|validate``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .errors import ConfigError
from .pipeline import (
    EXIT_CONFIG,
    EXIT_IO,
    EXIT_NUMERICAL,
    EXIT_OK,
    load_config,
    preset_config,
    replot,
    run_pipeline,
    validate_manifest,
)


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="krodtwin", description="Randomized Koopman twin models for Burgers flows.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute the full pipeline")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="JSON or TOML run configuration")
    src.add_argument("--preset", choices=["exp1", "exp2", "exp3"])
    run.add_argument("--out", help="output directory (overrides the config's output_dir)")
    run.add_argument("--seed", type=_u64, default=None, help="master seed (default 0)")
    run.add_argument("--offline-only", action="store_true", help="skip the surrogate fit and validation")

    plot = sub.add_parser("plot", help="regenerate plot-data CSVs of a finished run")
    plot.add_argument("--manifest", required=True)

    val = sub.add_parser("validate", help="re-check checksums and stored invariants")
    val.add_argument("--manifest", required=True)
    return p


def _run(args) -> int:
    if args.config:
        cfg = load_config(args.config, args.out)
        if args.seed is not None:
            cfg.master_seed = args.seed
    else:
        if not args.out:
            raise ConfigError("--preset needs --out")
        cfg = preset_config(args.preset, args.out, args.seed or 0)
    if args.offline_only:
        cfg.folds = "offline_only"
    status, manifest = run_pipeline(cfg)
    if status == EXIT_OK:
        s = manifest["summary"]
        print(f"N_DTM={s['n_dtm']} front={s['front']} offline rho={s['offline']['pearson']:.10f} "
              f"mae={s['offline']['mae']:.3e}")
        if "online" in s:
            print(f"online rho(train window)={s['online']['pearson_training_window']:.10f} "
                  f"rho(full)={s['online']['pearson']:.6f}")
        print(f"manifest: {cfg.output_dir / 'manifest.json'}")
    else:
        err = manifest.get("error", {})
        print(f"FAILED at stage {err.get('stage')}: {err.get('message')}", file=sys.stderr)
    return status


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            return _run(args)
        if args.command == "plot":
            manifest = replot(args.manifest)
            print(f"{len(manifest['artifacts'])} artifacts listed")
            return EXIT_OK
        problems = validate_manifest(args.manifest)
        for p in problems:
            print(p, file=sys.stderr)
        print("OK" if not problems else f"{len(problems)} problem(s)")
        return EXIT_OK if not problems else EXIT_NUMERICAL
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, json.JSONDecodeError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
