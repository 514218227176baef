"""Command-line entry point ``nsmild``.

Exit codes: 0 success, 1 validation error, 2 contraction or blow-up failure,
3 internal invariant violation (including failed acceptance criteria).
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONTRACTION = 2
EXIT_INVARIANT = 3


def _parser():
    p = argparse.ArgumentParser(prog="nsmild", description="Mild Navier-Stokes solutions on a periodic box.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="verb", required=True)

    run = sub.add_parser("run", help="run an experiment from a YAML/JSON config")
    run.add_argument("config")
    run.add_argument("--out", help="override outputs.directory")

    acc = sub.add_parser("accept", help="run the acceptance suite")
    acc.add_argument("--level", choices=("quick", "full"), default="quick")
    acc.add_argument("--only", nargs="*", help="criterion keys or names to run")
    acc.add_argument("--json", help="also write the summary to this file")

    data = sub.add_parser("data", help="write initial data as a one-node trajectory file")
    data.add_argument("choice", choices=("taylor_green", "random_divfree", "singular_ld"))
    data.add_argument("--out", required=True)
    data.add_argument("--d", type=int, default=2)
    data.add_argument("--grid-points", type=int, default=32)
    data.add_argument("--box-length", type=float, default=2 * math.pi)
    data.add_argument("--amplitude", type=float, default=1.0)
    data.add_argument("--spectral-decay", type=float, default=2.0)
    data.add_argument("--seed", type=int, default=0)
    data.add_argument("--alpha", type=float, default=0.9)
    data.add_argument("--mollification-radius", type=float, default=0.5)

    nrm = sub.add_parser("norms", help="weighted mixed norms of a stored trajectory")
    nrm.add_argument("trajectory")
    nrm.add_argument("--spec", action="append", required=True, help="p,q,m,n[,delta]; repeatable")
    return p


def _cmd_run(args):
    from dataclasses import replace

    from .experiment import ExperimentConfig, run_experiment

    cfg = ExperimentConfig.from_file(args.config)
    if args.out:
        cfg = replace(cfg, output_directory=args.out, base_dir=".")
    report = run_experiment(cfg)
    print(f"status: {report['status']}  output: {cfg.output_path}")
    for line in report["diagnostics"]:
        print(f"  {line}")
    if report["status"] == "failed":
        return EXIT_CONTRACTION
    if report["status"] == "invariant_violation":
        return EXIT_INVARIANT
    return EXIT_OK


def _cmd_accept(args):
    from .acceptance import acceptance_suite

    summary = acceptance_suite(args.level, echo=print, only=args.only)
    if args.json:
        from .experiment import _clean

        with open(args.json, "w") as fh:
            json.dump(_clean(summary.as_dict()), fh, indent=2)
    return EXIT_OK if summary.passed else EXIT_INVARIANT


def _cmd_data(args):
    from .data import make_initial_data
    from .spectral import Domain
    from .trajio import write_trajectory

    dom = Domain(args.d, args.box_length, args.grid_points)
    if args.choice == "taylor_green":
        params = {"amplitude": args.amplitude}
    elif args.choice == "random_divfree":
        params = {"amplitude": args.amplitude, "spectral_decay": args.spectral_decay, "seed": args.seed}
    else:
        params = {
            "alpha": args.alpha,
            "mollification_radius": args.mollification_radius,
            "amplitude": args.amplitude,
        }
    a = make_initial_data(args.choice, dom, **params)
    write_trajectory(args.out, dom, [0.0], a.coeffs[None])
    print(f"wrote {args.out}: {args.choice} on {dom}, l2 = {a.l2():.6g}")
    return EXIT_OK


def _cmd_norms(args):
    from .norms import MixedNormSpec, weighted_mixed_norm
    from .trajio import load_trajectory

    traj = load_trajectory(args.trajectory)
    out = []
    for text in args.spec:
        spec = MixedNormSpec.parse(text)
        out.append({"spec": text, "value": weighted_mixed_norm(traj, spec)})
    print(json.dumps(out, indent=2))
    return EXIT_OK


_COMMANDS = {"run": _cmd_run, "accept": _cmd_accept, "data": _cmd_data, "norms": _cmd_norms}


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    from .mild import ContractionError

    try:
        return _COMMANDS[args.verb](args)
    except ContractionError as exc:
        print(f"nsmild: contraction failure: {exc}", file=sys.stderr)
        return EXIT_CONTRACTION
    except (ValueError, OSError) as exc:
        print(f"nsmild: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (AssertionError, ArithmeticError) as exc:
        print(f"nsmild: internal invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
