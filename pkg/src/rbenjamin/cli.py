"""Command-line interface.

Every subcommand reads a ``key = value`` configuration file, validates it in
full, and only then computes. Exit codes: 0 success, 1 I/O failure,
2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import analysis
from .config import EVOLVE_KEYS, MODEL_KEYS, ConfigError, describe_keys, load_config
from .evolution import Method, NumericalError, estimate_bilinear_constant, estimate_local_time, solve
from .io import OutputError, build_initial_condition, write_json, write_outputs, write_table
from .propagator import solve_linear
from .spectral import sobolev_norm
from .symbols import ParameterError, symbol_table

log = logging.getLogger("rbenjamin")

EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def _base_summary(command, cfg, params, grid):
    K1, K2 = analysis.norm_equivalence_constants(params, grid)
    return {
        "command": command,
        "config": dict(cfg.raw),
        "resolved": cfg.resolved(),
        "norms": "truncated to retained modes |k| <= n_points/2 - 1",
        "constants": {"K1": K1, "K2": K2},
        "assertions": [],
    }


def _assert(summary, name, value, bound, passed=None):
    passed = bool(value <= bound) if passed is None else bool(passed)
    summary["assertions"].append({"name": name, "value": float(value), "bound": float(bound), "passed": passed})


def _finish(summary):
    summary["passed"] = all(a["passed"] for a in summary["assertions"])
    return summary


def _bilinear(cfg, params, grid):
    s = cfg.sobolev_s
    if cfg.bilinear_constant is not None:
        return cfg.bilinear_constant
    return estimate_bilinear_constant(s, s, cfg.bilinear_trials, grid, params, seed=cfg.seed)


def cmd_simulate(cfg, out):
    params, grid = cfg.params(), cfg.grid()
    eta0 = build_initial_condition(cfg.ic, grid)
    scfg = cfg.solver()
    C = _bilinear(cfg, params, grid)
    scfg = cfg.solver(bilinear_constant=C)
    traj = solve(eta0, params, scfg)
    summary = _base_summary("simulate", cfg, params, grid)
    summary["constants"].update({
        "C_ss": C,
        "T_local": estimate_local_time(sobolev_norm(eta0, cfg.sobolev_s), C, params.alpha),
    })
    if "picard" in traj.metadata:
        summary["picard"] = traj.metadata["picard"]
    r0, r1 = traj.records[0], traj.records[-1]
    mass_drift = abs(r1.mass - r0.mass) / max(abs(r0.mass), np.finfo(float).tiny)
    triple_drift = abs(r1.triple_norm1 / r0.triple_norm1 - 1) if r0.triple_norm1 else 0.0
    _assert(summary, "mass_relative_drift", mass_drift if r0.mass else abs(r1.mass), 1e-13)
    _assert(summary, "triple_norm_relative_drift", triple_drift, cfg.conservation_tol)
    write_outputs(traj, out, _finish(summary), cfg.snapshot_every)
    return summary


def cmd_linear(cfg, out):
    params, grid = cfg.params(), cfg.grid()
    eta0 = build_initial_condition(cfg.ic, grid)
    times = cfg.times if cfg.times is not None else sorted({0.0, cfg.t_end})
    traj = solve_linear(eta0, times, symbol_table(grid, params), cfg.sobolev_s)
    summary = _base_summary("linear", cfg, params, grid)
    for s, name in ((0.0, "norm0"), (0.5, "norm_half"), (1.0, "norm1")):
        ref = sobolev_norm(eta0, s)
        dev = max(abs(getattr(r, name) - ref) for r in traj.records)
        _assert(summary, f"isometry_{name}", dev, 1e-12 * max(ref, 1e-300))
    write_outputs(traj, out, _finish(summary), snapshot_every=1)
    return summary


def cmd_split(cfg, out):
    params, grid = cfg.params(), cfg.grid()
    eta0 = build_initial_condition(cfg.ic, grid)
    scfg = cfg.solver()
    ref = solve(eta0, params, scfg)
    summary = _base_summary("split", cfg, params, grid)
    summary["splits"] = []
    Path(out).mkdir(parents=True, exist_ok=True)
    for N in cfg.split_cutoffs:
        report, _ref, v, w = analysis.split_experiment(eta0, N, params, scfg, reference=ref)
        summary["splits"].append(report.to_dict())
        _assert(summary, f"reconstruction_H1[N={N}]", report.max_reconstruction_1, 1e-12)
        rows = [(t, es, e1, lo.triple_norm1, hi.triple_norm1)
                for t, es, e1, lo, hi in zip(report.times, report.reconstruction_s, report.reconstruction_1,
                                             report.low_records, report.high_records)]
        write_table(Path(out) / f"split_N{N}.csv",
                    ("t", "reconstruction_s", "reconstruction_1", "low_triple_norm1", "high_triple_norm1"), rows)
    tails = analysis.tail_norms(eta0, cfg.sobolev_s)
    write_table(Path(out) / "tail_norms.csv", ("N", "tail_norm_s"), list(enumerate(tails)))
    _assert(summary, "tail_norms_nonincreasing", float(np.max(np.diff(tails))), 0.0)
    write_outputs(ref, out, _finish(summary), cfg.snapshot_every)
    return summary


def cmd_probe_contraction(cfg, out):
    params, grid = cfg.params(), cfg.grid()
    eta0 = build_initial_condition(cfg.ic, grid)
    s = cfg.sobolev_s
    C = _bilinear(cfg, params, grid)
    T_local = estimate_local_time(sobolev_norm(eta0, s), C, params.alpha)
    if not np.isfinite(T_local):
        raise ConfigError("ic", "zero data (or alpha = 0) gives an unbounded local time; nothing to probe")
    report = analysis.contraction_probe(eta0, cfg.probe_T_fraction * T_local, cfg.probe_trials, params,
                                        seed=cfg.seed, s=s, C=C, nodes=cfg.probe_nodes)
    summary = _base_summary("probe-contraction", cfg, params, grid)
    summary["constants"].update(report.constants)
    summary["report"] = report.to_dict()
    summary["assertions"] = [a for a in report.to_dict()["assertions"]]
    Path(out).mkdir(parents=True, exist_ok=True)
    write_table(Path(out) / "contraction_ratios.csv", ("trial", "ratio"), list(enumerate(report.series["ratios"])))
    write_outputs(None, out, _finish(summary))
    return summary


def cmd_probe_continuity(cfg, out):
    params, grid = cfg.params(), cfg.grid()
    eta0 = build_initial_condition(cfg.ic, grid)
    C = _bilinear(cfg, params, grid)
    scfg = cfg.solver(bilinear_constant=C)
    report = analysis.continuity_probe(eta0, cfg.epsilons, cfg.t_end, params, scfg, seed=cfg.seed, C=C)
    summary = _base_summary("probe-continuity", cfg, params, grid)
    # the envelope's K2, K3 are unrelated to the norm-equivalence K1, K2
    summary["constants"]["envelope"] = report.constants
    summary["report"] = report.to_dict()
    summary["assertions"] = report.to_dict()["assertions"]
    Path(out).mkdir(parents=True, exist_ok=True)
    cols = ["t"] + [k for k in report.series if k != "t"]
    write_table(Path(out) / "continuity.csv", cols, zip(*(report.series[c] for c in cols)))
    write_outputs(None, out, _finish(summary))
    return summary


def cmd_convergence(cfg, out):
    params, grid = cfg.params(), cfg.grid()
    eta0 = build_initial_condition(cfg.ic, grid)
    report = analysis.convergence_study(eta0, params, cfg.conv_dts, cfg.conv_grids, t_end=cfg.t_end,
                                        method=Method(cfg.method), ref_dt=cfg.conv_ref_dt)
    summary = _base_summary("convergence", cfg, params, grid)
    summary["constants"].update(report.constants)
    summary["series"] = report.series
    Path(out).mkdir(parents=True, exist_ok=True)
    orders = list(report.series["time_orders"]) + [float("nan")]
    write_table(Path(out) / "convergence_time.csv", ("dt", "error_H1", "order_to_next"),
                zip(report.series["dts"], report.series["time_errors"], orders))
    write_table(Path(out) / "convergence_space.csv", ("n_points", "error_H1"),
                zip(report.series["grids"], report.series["space_errors"]))
    write_outputs(None, out, _finish(summary))
    return summary


def cmd_symbols(cfg, out):
    params, grid = cfg.params(), cfg.grid()
    table = symbol_table(grid, params)
    rows = list(zip(grid.wavenumbers.tolist(), table.m, table.phi))
    if out is None:
        w = sys.stdout
        w.write("k,m,phi\n")
        for k, m, phi in rows:
            w.write(f"{k},{m:.17g},{phi:.17g}\n")
        return None
    Path(out).mkdir(parents=True, exist_ok=True)
    write_table(Path(out) / "symbols.csv", ("k", "m", "phi"), rows)
    return None


COMMANDS = {
    "simulate": (cmd_simulate, EVOLVE_KEYS, "evolve the nonlinear equation"),
    "linear": (cmd_linear, MODEL_KEYS + ("ic",), "exact linear propagation at the listed times"),
    "split": (cmd_split, EVOLVE_KEYS, "low/high frequency splitting, v + w against the direct solve"),
    "probe-contraction": (cmd_probe_contraction, MODEL_KEYS + ("ic",), "sample the Duhamel map's Lipschitz ratio"),
    "probe-continuity": (cmd_probe_continuity, EVOLVE_KEYS, "perturbation growth against its envelope"),
    "convergence": (cmd_convergence, EVOLVE_KEYS, "temporal and spatial convergence study"),
    "symbols": (cmd_symbols, MODEL_KEYS, "dump the k, m(k), phi(k) table as CSV"),
}


def build_parser() -> argparse.ArgumentParser:
    epilog = "configuration keys (key = value, one per line, # comments):\n" + describe_keys()
    parser = argparse.ArgumentParser(
        prog="rbenjamin",
        description="Pseudospectral solver and verification probes for regularized Benjamin-type equations.",
        epilog=epilog,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_fn, required, help_) in COMMANDS.items():
        p = sub.add_parser(name, help=help_, description=help_, epilog=epilog,
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        p.add_argument("config", help="configuration file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a configuration key (repeatable)")
        p.add_argument("--out", help="output directory (overrides output_dir)")
    return parser


def _overrides(items):
    out = {}
    for item in items:
        if "=" not in item:
            raise ConfigError(item, "--set expects KEY=VALUE")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    fn, required, _ = COMMANDS[args.command]
    try:
        cfg = load_config(args.config, required=required, overrides=_overrides(args.set))
        out = args.out if args.out is not None else (None if args.command == "symbols" else cfg.output_dir)
        if args.command == "symbols" and args.out is None and "output_dir" in cfg.raw:
            out = cfg.output_dir
        if fn is not cmd_symbols and cfg.ic is not None:
            # fail on unreadable or asymmetric coefficient files before computing
            build_initial_condition(cfg.ic, cfg.grid())
        start = time.perf_counter()
        summary = fn(cfg, out)
        elapsed = time.perf_counter() - start
        if out is not None and summary is not None:
            write_json({"wall_clock_seconds": elapsed}, Path(out) / "timing.json")
            log.info("%s finished in %.2fs, passed=%s", args.command, elapsed, summary.get("passed"))
            if not summary.get("passed", True):
                failed = [a["name"] for a in summary["assertions"] if not a["passed"]]
                print(f"warning: failed assertions: {', '.join(failed)}", file=sys.stderr)
    except (ConfigError, ParameterError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OutputError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
