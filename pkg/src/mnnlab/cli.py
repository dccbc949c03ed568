"""Command-line entry point ``mnn-lab``.

Exit codes: 0 on success, 2 for invalid input (configuration, topology,
characteristic or hypothesis failures), 3 for numerical failures.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .errors import MnnLabError, NumericalError, ValidationError
from .scenario import check_network, load_scenario, run_scenario

log = logging.getLogger("mnnlab")

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3


def _load(args, kind=None):
    scn = load_scenario(args.config)
    if kind is not None and scn.experiment != kind:
        raise ValidationError(f"config declares {scn.experiment!r}, command needs {kind!r}",
                              "experiment")
    if getattr(args, "output", None):
        scn.output = args.output
    if getattr(args, "seed", None) is not None:
        scn.seed = args.seed
    return scn


def _emit(obj):
    print(json.dumps(obj, indent=2, sort_keys=True, default=str))


def cmd_atlas(args):
    scn = _load(args, "atlas")
    if args.case is not None and scn.case != args.case:
        raise ValidationError(f"config holds case {scn.case}, --case asked for {args.case}",
                              "manifold.case")
    manifest = run_scenario(scn)
    for row in manifest["summary"]["rows"]:
        if "error" in row:
            print(f"{row['param']}: {row['error']}")
        else:
            print(f"{row['param']}\tPi={row['regions']}\tn_as={row['n_as']}\tn_u={row['n_u']}")
    return EXIT_OK


def cmd_trajectories(args):
    manifest = run_scenario(_load(args, "trajectories"))
    for k, run in enumerate(manifest["summary"]["runs"]):
        print(f"run {k}: converged={run['converged']} |v|={run['terminal_v']:.3g} "
              f"switches={run['segment_switches']}")
    return EXIT_OK


def cmd_ensemble(args):
    manifest = run_scenario(_load(args, "ensemble"), runs=args.runs)
    _emit(manifest["summary"])
    return EXIT_OK


def cmd_holefill(args):
    manifest = run_scenario(_load(args, "hole-fill"), image=args.image)
    _emit(manifest["summary"])
    return EXIT_OK if manifest["summary"]["matches_oracle"] else EXIT_NUMERICAL


def cmd_check(args):
    scn = _load(args)
    reports = []
    for param in scn.sweep:
        net = scn.build_network(param)
        q0 = scn.build_manifold(net, param)
        reports.append({"param": param, **check_network(net, q0, samples=args.samples,
                                                         seed=scn.seed)})
    _emit(reports)
    return EXIT_OK if all(r["passed"] for r in reports) else EXIT_INVALID


def build_parser():
    p = argparse.ArgumentParser(prog="mnn-lab", description="Memristor neural network lab.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", required=True, help="scenario JSON file")
        sp.add_argument("--output", help="override the output directory")
        sp.set_defaults(func=func)
        return sp

    sp = add("atlas", cmd_atlas, "enumerate and classify equilibria")
    sp.add_argument("--case", type=int, choices=(1, 2, 3), help="expected case recipe")
    sp = add("trajectories", cmd_trajectories, "integrate trajectories and export CSV series")
    sp.add_argument("--seed", type=int, help="override the scenario seed")
    sp = add("ensemble", cmd_ensemble, "convergence statistics over random starts")
    sp.add_argument("--runs", type=int, help="number of runs")
    sp.add_argument("--seed", type=int, help="override the scenario seed")
    sp = add("holefill", cmd_holefill, "run the hole-filling task on a PGM image")
    sp.add_argument("--image", help="input PGM (overrides the config)")
    sp = add("check", cmd_check, "check boundedness, cooperativity and irreducibility")
    sp.add_argument("--samples", type=int, default=1000, help="Jacobian sample count")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except MnnLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
