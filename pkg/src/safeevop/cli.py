"""Command-line entry points: batch runs, oracle certification, and the service.

    safeevop run --plant quad-linear --delta-e 0.05 --cycles 40 \
        --seed 1 --replicates 50 --out results/
    safeevop oracle --plant quad-circle --resolution 1e-3
    safeevop serve --port 8731 --state-dir campaign-state/

Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import InvalidConfigError, SafeEvopError
from .harness import RunSpec, export_run
from .plants import get_plant, grid_oracle

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="safeevop", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run seeded trajectories on a simulated plant")
    run.add_argument("--plant", required=True, help="catalog name or JSON plant file")
    run.add_argument("--delta-e", type=float, default=0.05, help="excitation radius (scaled)")
    run.add_argument("--cycles", type=int, default=40, help="number of EVOP cycles")
    run.add_argument("--seed", type=int, default=0, help="base seed; replicate r uses seed+r")
    run.add_argument("--replicates", type=int, default=1)
    run.add_argument("--anneal", action="store_true", help="shrink radius and noise by 1/sqrt(k)")
    run.add_argument("--no-backoff", action="store_true", help="ablation: zero back-off threshold")
    run.add_argument("--auto-shrink", action="store_true", help="halve radius when the back-off fails")
    run.add_argument("--out", required=True, help="output directory for CSV/JSON exports")

    oracle = sub.add_parser("oracle", help="certify a plant optimum by exhaustive grid")
    oracle.add_argument("--plant", required=True)
    oracle.add_argument("--resolution", type=float, default=1e-3)

    serve = sub.add_parser("serve", help="start the ask-tell session service")
    serve.add_argument("--port", type=int, default=8731)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--state-dir", default="safeevop-state")
    return parser


def _cmd_run(args) -> int:
    spec = RunSpec(
        plant=args.plant,
        delta_e=args.delta_e,
        anneal=args.anneal,
        backoff_enabled=not args.no_backoff,
        auto_shrink=args.auto_shrink,
        max_cycles=args.cycles,
        seed=args.seed,
        replicates=args.replicates,
    )
    written = export_run(spec, args.out)
    print(f"wrote {len(written)} files to {args.out}")
    return EXIT_OK


def _cmd_oracle(args) -> int:
    plant = get_plant(args.plant)
    result = grid_oracle(plant, args.resolution)
    print(
        json.dumps(
            {
                "plant": plant.name,
                "u_opt": [float(v) for v in result.u_opt],
                "phi_opt": result.phi_opt,
                "resolution": result.grid_resolution,
                "feasible_count": result.feasible_count,
            },
            indent=2,
        )
    )
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(args.state_dir), host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "oracle":
            return _cmd_oracle(args)
        if args.command == "serve":
            return _cmd_serve(args)
        raise SafeEvopError(f"unknown command {args.command!r}")
    except (InvalidConfigError, KeyError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SafeEvopError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
