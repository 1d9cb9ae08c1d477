"""Command-line entry points.

Subcommands: run, profile, dynamics, surface (simulation sweeps),
fit-powerlaw, fit-collapse, fit-dynamic (analysis over emitted CSVs) and
validate (oracle-equivalence battery).  Exit codes: 0 success, 1 usage,
2 validation failure, 3 capacity.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import CapacityError, ConfigError


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_spec_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("-c", "--config", help="flat key=value config file")
    p.add_argument("--backend", choices=["clifford", "haar"])
    p.add_argument("--L", help="system sizes, e.g. '16 32 64'")
    p.add_argument("--p", help="measurement rates, e.g. '0.08:0.24:0.02'")
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--boundary", choices=["periodic", "open"])
    p.add_argument("--t-max", dest="t_max")
    p.add_argument("--record", help="steady|all|early|log or explicit times")
    p.add_argument("--positions", choices=["fixed_origin", "translation_average"])
    p.add_argument("--workers", type=int)
    p.add_argument("--k-max", dest="k_max", type=int)
    p.add_argument("--r-metric", dest="r_metric", choices=["ring", "index"])
    p.add_argument("--keep-samples", dest="keep_samples", action="store_const", const="true")
    p.add_argument("--fits", help="space/comma list of powerlaw collapse dynamic surface")
    p.add_argument("--bulk-eta", dest="bulk_eta", type=float)
    p.add_argument("--out", help="output directory")


_FLAG_TO_KEY = {
    "backend": "backend", "L": "L", "p": "p", "samples": "samples", "seed": "seed",
    "boundary": "boundary", "t_max": "t_max", "record": "record",
    "positions": "positions", "workers": "workers", "k_max": "k_max",
    "r_metric": "r_metric", "keep_samples": "keep_samples", "fits": "fits",
    "bulk_eta": "bulk_eta", "out": "out",
}


def _build_spec(args, presets: dict | None = None):
    from .experiment import parse_config_text, spec_from_config

    cfg: dict = dict(presets or {})
    if args.config:
        cfg.update(parse_config_text(Path(args.config).read_text()))
    for flag, key in _FLAG_TO_KEY.items():
        val = getattr(args, flag, None)
        if val is not None:
            cfg[key] = str(val)
    return spec_from_config(cfg)


def _cmd_run(args, presets=None) -> int:
    from .experiment import run_experiment

    spec = _build_spec(args, presets)
    out = run_experiment(spec)
    print(f"wrote {out}/manifest.json")
    return 0


def _cmd_profile(args) -> int:
    return _cmd_run(args, presets={"record": "steady"})


def _cmd_dynamics(args) -> int:
    return _cmd_run(args, presets={"record": "early", "fits": "dynamic"})


def _cmd_surface(args) -> int:
    return _cmd_run(args, presets={"boundary": "open", "record": "steady"})


def _cmd_fit_powerlaw(args) -> int:
    from .experiment import read_profiles, write_report
    from .scaling import fit_power_law

    rows = read_profiles(args.profiles)
    rows = [r for r in rows if r["L"] == args.L and abs(r["p"] - args.p) < 1e-9]
    if args.t is not None:
        rows = [r for r in rows if r["t"] == args.t]
    else:
        t_last = max(r["t"] for r in rows)
        rows = [r for r in rows if r["t"] == t_last]
    rs = np.array([r["r"] for r in rows], dtype=float)
    ys = np.array([r["eae_mean"] for r in rows])
    rmax = args.rmax if args.rmax else args.L / 4
    fit = fit_power_law(rs, ys, (args.rmin, rmax))
    out = Path(args.out or "fit_powerlaw.json")
    write_report(out, "powerlaw", fit, {"L": args.L, "p": args.p})
    print(json.dumps(fit.params))
    return 0


def _cmd_fit_collapse(args) -> int:
    from .experiment import read_moments, read_samples, write_report
    from .scaling import CollapseCurve, fit_collapse

    moments = read_moments(args.moments)
    Ls = sorted({r["L"] for r in moments})
    curves = []
    sample_rows = read_samples(args.samples) if args.samples else None
    for L in Ls:
        rows = [r for r in moments if r["L"] == L and r["k"] == args.k]
        t_pick = args.t if args.t is not None else max(r["t"] for r in rows)
        rows = [r for r in rows if r["t"] == t_pick]
        rows.sort(key=lambda r: r["p"])
        ps = [r["p"] for r in rows]
        samples = None
        if sample_rows:
            per_p = []
            for p in ps:
                vals = [s["value"] for s in sample_rows
                        if s["L"] == L and abs(s["p"] - p) < 1e-12
                        and s["t"] == t_pick and s["k"] == args.k]
                per_p.append(vals)
            if all(per_p) and len({len(v) for v in per_p}) == 1:
                samples = np.array(per_p).T
        curves.append(CollapseCurve(
            L, np.array(ps), np.array([r["value"] for r in rows]),
            np.array([r["stderr"] for r in rows]), samples=samples))
    fit = fit_collapse(curves, seed=args.seed)
    out = Path(args.out or "fit_collapse.json")
    write_report(out, "collapse", fit, {"Ls": Ls, "k": args.k})
    print(json.dumps(fit.params))
    return 0


def _cmd_fit_dynamic(args) -> int:
    from .ensemble import MomentSeries
    from .experiment import read_moments, write_report
    from .scaling import fit_dynamic_exponents

    moments = read_moments(args.moments)
    rows_lp = [r for r in moments if r["L"] == args.L and abs(r["p"] - args.p) < 1e-9]
    if not rows_lp:
        print(f"error: no rows for L={args.L} p={args.p}", file=sys.stderr)
        return 2
    kmax = args.kmax if args.kmax is not None else max(r["k"] for r in rows_lp)
    series = []
    for k in range(kmax + 1):
        rows = sorted((r for r in rows_lp if r["k"] == k), key=lambda r: r["t"])
        series.append(MomentSeries(k, [r["t"] for r in rows],
                                   [r["value"] for r in rows],
                                   [r["stderr"] for r in rows]))
    tmax = args.tmax if args.tmax else args.L / 4
    fit = fit_dynamic_exponents(series, (args.tmin, tmax))
    out = Path(args.out or "fit_dynamic.json")
    write_report(out, "dynamic", fit, {"L": args.L, "p": args.p})
    print(json.dumps(fit.params))
    return 0


def _cmd_validate(args) -> int:
    from .validate import run_battery

    results = run_battery(quick=not args.full, seed=args.seed)
    print(json.dumps(results, indent=2, default=str))
    return 0 if results["ok"] else 2


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bpesim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    for name, fn, doc in [
        ("run", _cmd_run, "simulate a sweep and aggregate observables"),
        ("profile", _cmd_profile, "steady-state EAE profiles"),
        ("dynamics", _cmd_dynamics, "k-moment time series and dynamic fits"),
        ("surface", _cmd_surface, "open-boundary edge observables"),
    ]:
        p = sub.add_parser(name, help=doc)
        _add_spec_flags(p)
        p.set_defaults(fn=fn)

    p = sub.add_parser("fit-powerlaw", help="decay exponent of an EAE profile")
    p.add_argument("--profiles", required=True)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--t", type=int)
    p.add_argument("--rmin", type=float, default=2.0)
    p.add_argument("--rmax", type=float, default=0.0)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_fit_powerlaw)

    p = sub.add_parser("fit-collapse", help="finite-size collapse of the integrated EAE")
    p.add_argument("--moments", required=True)
    p.add_argument("--samples", help="samples.csv for trajectory bootstrap")
    p.add_argument("--k", type=int, default=0)
    p.add_argument("--t", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_fit_collapse)

    p = sub.add_parser("fit-dynamic", help="dynamic exponents from k-moment growth")
    p.add_argument("--moments", required=True)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--kmax", type=int)
    p.add_argument("--tmin", type=float, default=4.0)
    p.add_argument("--tmax", type=float, default=0.0)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_fit_dynamic)

    p = sub.add_parser("validate", help="run the oracle-equivalence suite")
    p.add_argument("--full", action="store_true", help="acceptance-scale sizes")
    p.add_argument("--seed", type=int, default=5)
    p.set_defaults(fn=_cmd_validate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
