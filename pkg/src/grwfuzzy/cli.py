"""Command-line entry point: ``grwfuzzy <subcommand> [flags]``.

Exit codes: 0 success, 2 validation error, 3 capacity error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .config import parse_config
from .errors import CapacityError, ValidationError
from .lattice import LatticeWavefunction, apply_lattice_hit, region_mass, sample_hit_center
from .output import RunManifest, counting_row, emit_results, write_event_log
from .rng import trial_rng
from .scenarios import monte_carlo, run_counting_anomaly
from .semantics import FuzzyConfig

EXIT_OK, EXIT_VALIDATION, EXIT_CAPACITY, EXIT_IO = 0, 2, 3, 4

MC_COMMANDS = {
    "single-marble": "single-marble",
    "gb-persistence": "gb-persistence",
    "measure-chain": "measure-chain",
    "aaad": "aaad",
}


def _int_list(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    return out


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", metavar="PATH", help="INI config file")
    p.add_argument("--seed", type=int, help="root seed (non-negative)")
    p.add_argument("--trials", type=int)
    p.add_argument("--n", type=int, help="number of marbles")
    p.add_argument("--p", type=float, help="fuzzy-link threshold")
    p.add_argument("--a2", type=float, help="|a|^2, the 'in' mass of each marble")
    p.add_argument("--epsilon", type=float, help="leakage factor of a hit")
    p.add_argument("--order", choices=["individual", "collective"])
    p.add_argument("--duration", type=float, help="simulated time in seconds")
    p.add_argument("--out", metavar="PATH", help="output file (default stdout)")
    p.add_argument("--format", choices=["json", "csv"], default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="grwfuzzy", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    for name in MC_COMMANDS:
        p = sub.add_parser(name)
        _add_common(p)
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--log", metavar="PATH", help="write per-hit JSON-lines event log")
        p.add_argument("--include-logs", action="store_true", help="embed event logs in JSON output")
        if name == "measure-chain":
            p.add_argument("--observer", action="store_true", help="add an observer reading the apparatuses")
            p.add_argument("--post-collapse-hits", type=int)

    p = sub.add_parser("counting", help="enumeration check on n identical marbles")
    _add_common(p)

    p = sub.add_parser("sweep", help="anomaly-threshold table over n, a_sq and p")
    _add_common(p)
    p.add_argument("--ns", type=_int_list, default="1-60", help="e.g. 1-60 or 2,3,45")
    p.add_argument("--a2s", type=_float_list, default=None)
    p.add_argument("--ps", type=_float_list, default=None)

    p = sub.add_parser("lattice-demo", help="GRW hits on a two-bump wavefunction")
    _add_common(p)
    p.add_argument("--points", type=int, default=1024)
    p.add_argument("--hits", type=int, default=1)
    return parser


def _overrides(args) -> dict:
    keys = ("n", "p", "a2", "epsilon", "seed", "trials", "order", "duration")
    out = {k: getattr(args, k, None) for k in keys}
    if getattr(args, "observer", False):
        out["scenario.observer"] = True
    if getattr(args, "post_collapse_hits", None) is not None:
        out["scenario.post_collapse_hits"] = args.post_collapse_hits
    return out


def _emit(args, result, manifest, **kw):
    manifest.finish()
    text = emit_results(result, manifest, args.format, args.out, **kw)
    if args.out is None:
        sys.stdout.write(text)


def _cmd_monte_carlo(args, cfg):
    scenario = MC_COMMANDS[args.command]
    if scenario == "single-marble" and args.n is None:
        cfg = cfg.with_(n_marbles=1)
    manifest = RunManifest.start(scenario, cfg, workers=args.workers)
    summary = monte_carlo(scenario, cfg, workers=args.workers, keep_logs=bool(args.log or args.include_logs))
    if args.log:
        write_event_log(summary, manifest, args.log)
    _emit(args, summary, manifest, include_logs=args.include_logs)


def _cmd_counting(args, cfg):
    manifest = RunManifest.start("counting", cfg)
    report = run_counting_anomaly(cfg)
    row = counting_row(report, cfg.n_marbles, cfg.a_sq, cfg.fuzzy.p)
    if args.format == "json":
        row["report"] = report.to_dict()
    _emit(args, row, manifest)


def _cmd_sweep(args, cfg):
    ns = args.ns if isinstance(args.ns, list) else _int_list(args.ns)
    a2s = args.a2s or [cfg.a_sq]
    ps = args.ps or [cfg.fuzzy.p]
    manifest = RunManifest.start("sweep", cfg, ns=ns, a2s=a2s, ps=ps)
    rows, thresholds = [], []
    for a_sq in a2s:
        for p in ps:
            first_weak = first_strong = None
            for n in ns:
                c = cfg.with_(n_marbles=n, a_sq=a_sq, fuzzy=FuzzyConfig(p, cfg.fuzzy.p_all))
                row = counting_row(run_counting_anomaly(c), n, a_sq, p)
                rows.append(row)
                if row["weak"] and first_weak is None:
                    first_weak = n
                if row["strong"] and first_strong is None:
                    first_strong = n
            thresholds.append({"a_sq": a_sq, "p": p, "first_weak_n": first_weak, "first_strong_n": first_strong})
    _emit(args, {"rows": rows, "thresholds": thresholds}, manifest)


def lattice_demo(cfg, points: int = 1024, hits: int = 1):
    """Two bumps 32 sigma apart with masses (a_sq, 1 - a_sq), then ``hits`` hits."""
    sigma = cfg.grw.sigma
    dx = 64.0 * sigma / points
    origin = -32.0 * sigma
    centers = (-16.0 * sigma, 16.0 * sigma)
    psi = LatticeWavefunction.two_bump(points, dx, centers, sigma / 4.0, (cfg.a_sq, 1.0 - cfg.a_sq), origin)
    rng = trial_rng(cfg.seed, 0)
    left = (origin, 0.0)
    history = [{"hit": 0, "center": None, "left_mass": region_mass(psi, left)}]
    for k in range(hits):
        x = sample_hit_center(psi, rng, cfg.grw)
        psi = apply_lattice_hit(psi, x, cfg.grw)
        history.append({"hit": k + 1, "center": x, "left_mass": region_mass(psi, left)})
    return psi, history


def _cmd_lattice(args, cfg):
    manifest = RunManifest.start("lattice-demo", cfg, points=args.points, hits=args.hits)
    psi, history = lattice_demo(cfg, args.points, args.hits)
    if args.format == "csv":
        _emit(args, psi, manifest)
    else:
        _emit(args, {"history": history, "snapshot": {"x": psi.x, "density": psi.density()}}, manifest)


COMMANDS = {
    "counting": _cmd_counting,
    "sweep": _cmd_sweep,
    "lattice-demo": _cmd_lattice,
    **{name: _cmd_monte_carlo for name in MC_COMMANDS},
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = parse_config(args.config, _overrides(args))
        COMMANDS[args.command](args, cfg)
    except ValidationError as exc:
        print(f"grwfuzzy: validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except CapacityError as exc:
        print(f"grwfuzzy: capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except OSError as exc:
        print(f"grwfuzzy: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
