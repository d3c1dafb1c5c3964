"""Command-line interface: run, oracle, sweep-sigma, compare.

Exit codes: 0 success, 1 validation problem, 2 numerical failure, 3 I/O
failure. TDQMC_NUM_THREADS caps the BLAS/FFT thread pools and must be
applied before numpy is imported, so heavy imports stay inside main().
"""

from __future__ import annotations

import argparse
import os
import sys


class _Parser(argparse.ArgumentParser):
    """argparse that exits with the validation code on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="tdqmc",
                     description="Walker-ensemble ground-state runs with "
                                 "spatially resolved entanglement and coherence maps.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="relax, measure and export artifacts",
                           parents=[], add_help=True)
    p_run.add_argument("config", nargs="?", help="INI configuration file")
    p_run.add_argument("--from-manifest", dest="manifest",
                       help="replay a previously written manifest.json")
    p_run.add_argument("--out", help="override the output directory")
    p_run.add_argument("--seed", type=int, help="override the configured seed")

    p_oracle = sub.add_parser("oracle", help="exact baselines for the same config")
    p_oracle.add_argument("config", help="INI configuration file")
    p_oracle.add_argument("--out", help="override the output directory")
    p_oracle.add_argument("--seed", type=int, help="override the configured seed")

    p_sweep = sub.add_parser("sweep-sigma", help="variational scan of the nonlocal length")
    p_sweep.add_argument("config", help="INI configuration file")
    p_sweep.add_argument("--out", help="override the output directory")
    p_sweep.add_argument("--seed", type=int, help="override the configured seed")

    p_cmp = sub.add_parser("compare", help="diff two exported artifacts of the same schema")
    p_cmp.add_argument("file_a")
    p_cmp.add_argument("file_b")
    p_cmp.add_argument("-o", "--out", help="write the summary statistics as JSON")
    return parser


def _apply_thread_env() -> None:
    threads = os.environ.get("TDQMC_NUM_THREADS")
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                    "NUMEXPR_NUM_THREADS"):
            os.environ.setdefault(var, threads)


def main(argv=None) -> int:
    _apply_thread_env()
    args = _build_parser().parse_args(argv)

    from .errors import ConfigError, NumericalError

    try:
        from . import runner
        from .config import load_config

        if args.command == "run":
            if args.manifest:
                result = runner.replay_manifest(args.manifest, out_dir=args.out)
            elif args.config:
                cfg = load_config(args.config)
                result = runner.run(cfg, out_dir=args.out, seed_override=args.seed)
            else:
                raise ConfigError("run needs a config file or --from-manifest")
            report = result.get("report")
            if report is not None:
                status = "converged" if report.converged else "max steps reached"
                print(f"relaxed in {report.steps_taken} steps ({status}), "
                      f"energy {report.final_energy:.6f}")
            print(f"artifacts written to {result['out_dir']}")
        elif args.command == "oracle":
            cfg = load_config(args.config)
            result = runner.run_oracle(cfg, out_dir=args.out, seed_override=args.seed)
            print(f"oracle artifacts written to {result['out_dir']}")
        elif args.command == "sweep-sigma":
            cfg = load_config(args.config)
            result = runner.run_sweep(cfg, out_dir=args.out, seed_override=args.seed)
            print(f"sigma_best = {result['sigma_best']}")
            print(f"artifacts written to {result['out_dir']}")
        elif args.command == "compare":
            stats = runner.compare_files(args.file_a, args.file_b)
            for key in sorted(stats):
                print(f"{key} = {stats[key]}")
            if args.out:
                import json

                with open(args.out, "w", encoding="utf-8") as fh:
                    json.dump(stats, fh, indent=2, sort_keys=True)
                    fh.write("\n")
        return 0
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
