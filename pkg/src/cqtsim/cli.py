"""Command-line front end: run experiments, scans, fits and tomography.

Subcommands: run, scan-werner, fit-spdc, tomo, reproduce.  Every command
accepts ``--config PATH`` (INI file, one section per subcommand, keys named
after the long options; angles are written in degrees there), ``--out``,
``--format {csv,json}`` and ``--full-precision``.  Relative output paths are
resolved against $CQTSIM_OUT_DIR when it is set.  Outputs carry a schema
version line and contain nothing non-deterministic, so identical inputs and
seeds give byte-identical files.

Exit codes: 0 success, 1 simulation/runtime failure, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import os
import sys

import numpy as np

from .channels import werner_scan
from .estimation import (corrected_fidelity, correct_for_background,
                         ml_reconstruct, poisson_uncertainty, read_counts_csv)
from .fock import NAMED_KETS, fidelity
from .protocol import (InputQubit, ProtocolConfig, ProtocolError,
                       emulate_mixture, run_protocol)
from .spdc import SourceParams, fit_source_ratio

SCHEMA_VERSION = "cqtsim.v1"

ENV_OUT_DIR = "CQTSIM_OUT_DIR"

# Bundled reference dataset: raw fidelities (percent), background weights
# (percent) and the corrected values they must reproduce.
REFERENCE_TABLE = [
    ("reference", "allowed", 78.8, 13.0, 83.1),
    ("g1", "allowed", 62.4, 55.4, 77.9),
    ("g1", "denied", 55.0, 30.1, 57.2),
    ("g2", "allowed", 64.7, 55.4, 83.0),
    ("g2", "denied", 51.2, 30.1, 51.8),
    ("mix", "allowed", 63.5, 55.4, 80.2),
    ("mix", "denied", 53.5, 30.1, 55.1),
]

DEFAULT_FIT_TARGETS = {"uncontrolled": 0.130, "allowed": 0.554, "denied": 0.301}


class UsageError(Exception):
    """Bad flags, bad config values, malformed input files."""


# --- formatting and output -------------------------------------------------------

def _fmt(value, full_precision: bool) -> str:
    if isinstance(value, float):
        if full_precision:
            return repr(value)
        return f"{value:.4g}"
    if value is None:
        return ""
    return str(value)


def _resolve_out(path):
    if path is None:
        return None
    out_dir = os.environ.get(ENV_OUT_DIR)
    if out_dir and not os.path.isabs(path):
        path = os.path.join(out_dir, path)
    return path


def _emit(text: str, out_path):
    out_path = _resolve_out(out_path)
    if out_path is None:
        sys.stdout.write(text)
    else:
        os.makedirs(os.path.dirname(os.path.abspath(out_path)), exist_ok=True)
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _json_value(value, full_precision):
    if isinstance(value, float) and not full_precision:
        return float(f"{value:.4g}")
    return value


def _render_table(columns, rows, fmt, full_precision, comments=()):
    if fmt == "csv":
        buf = io.StringIO()
        buf.write(f"# schema={SCHEMA_VERSION}\n")
        for c in comments:
            buf.write(f"# {c}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v, full_precision) for v in row])
        return buf.getvalue()
    payload = {
        "schema": SCHEMA_VERSION,
        "comments": list(comments),
        "columns": list(columns),
        "rows": [[_json_value(v, full_precision) for v in row] for row in rows],
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


# --- shared argument plumbing -------------------------------------------------------

def _add_common(parser):
    parser.add_argument("--config", help="INI config file with per-command sections")
    parser.add_argument("--out", help="output file (default: stdout)")
    parser.add_argument("--format", choices=("csv", "json"), default="csv",
                        dest="fmt", help="output format")
    parser.add_argument("--full-precision", action="store_true",
                        help="print full float precision instead of 4 significant digits")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cqtsim",
        description="Linear-optical simulation of controlled quantum teleportation")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one teleportation configuration")
    p_run.add_argument("--channel", choices=("g1", "g2", "reference", "mix"),
                       default="g1")
    p_run.add_argument("--action", choices=("allow", "deny", "none"), default="allow")
    p_run.add_argument("--input", default="plus",
                       help="named state (h/v/plus/minus/r/l), 'linear:DEG', or 'a,b'")
    p_run.add_argument("--ideal", action="store_true",
                       help="one ideal photon per mode (no emission background)")
    p_run.add_argument("--kappa-forward", type=float, default=None)
    p_run.add_argument("--kappa-backward", type=float, default=None)
    p_run.add_argument("--truncation-order", type=int, default=2)
    p_run.add_argument("--pbs-epsilon", type=float, default=0.0)
    p_run.add_argument("--roles", choices=("standard", "swapped"), default="standard")
    p_run.add_argument("--mix-p", type=float, default=0.5,
                       help="mixture weight of the g2 run for --channel mix")
    p_run.add_argument("--exposure", type=float, default=10000.0,
                       help="total four-fold counts used for the uncertainty emulation")
    p_run.add_argument("--resamples", type=int, default=0,
                       help="number of Poisson resamples (0 disables uncertainties)")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--reproduce", choices=("table1",), default=None,
                       help="shortcut for the 'reproduce' subcommand")
    _add_common(p_run)

    p_scan = sub.add_parser("scan-werner", help="scan the noisy-channel family")
    p_scan.add_argument("--q-grid", default=None,
                        help="grid as start:stop:num, e.g. 0:1:101")
    p_scan.add_argument("--q-list", default=None,
                        help="comma-separated q values")
    _add_common(p_scan)

    p_fit = sub.add_parser("fit-spdc",
                           help="fit the backward/forward emission strength ratio")
    p_fit.add_argument("--targets", default=None,
                       help="undesired-share targets in percent: unc,allowed,denied")
    p_fit.add_argument("--synthetic-ratio", type=float, default=None,
                       help="generate the targets by simulating at this ratio")
    p_fit.add_argument("--pbs-epsilon", type=float, default=0.05)
    p_fit.add_argument("--input", default="plus")
    _add_common(p_fit)

    p_tomo = sub.add_parser("tomo", help="maximum-likelihood tomography from counts")
    p_tomo.add_argument("--counts", required=True, help="counts CSV: label,projector,count")
    p_tomo.add_argument("--target", default="plus")
    p_tomo.add_argument("--weight", type=float, default=0.0,
                        help="background weight subtracted before the fidelity")
    p_tomo.add_argument("--resamples", type=int, default=0)
    p_tomo.add_argument("--seed", type=int, default=None)
    _add_common(p_tomo)

    p_rep = sub.add_parser("reproduce", help="recompute bundled reference tables")
    p_rep.add_argument("dataset", choices=("table1",))
    _add_common(p_rep)

    return parser


def _config_argv(argv):
    """Expand --config sections into a argv prefix so flags still override."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    try:
        path = argv[idx + 1]
    except IndexError:
        raise UsageError("--config needs a path") from None
    command = argv[0] if argv and not argv[0].startswith("-") else None
    if command is None:
        return argv
    cp = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if not cp.has_section(command):
        return argv
    prefix = []
    for key, value in cp.items(command):
        flag = "--" + key.replace("_", "-")
        if value.strip().lower() in ("true", "yes", "on"):
            prefix.append(flag)
        elif value.strip().lower() in ("false", "no", "off"):
            continue
        else:
            prefix.extend([flag, value.strip()])
    return [command] + prefix + argv[1:]


def parse_input_state(text: str) -> InputQubit:
    text = text.strip()
    if text.lower() in NAMED_KETS:
        return InputQubit.from_name(text.lower())
    if text.lower().startswith("linear:"):
        try:
            deg = float(text.split(":", 1)[1])
        except ValueError:
            raise UsageError(f"bad linear polarization angle in {text!r}") from None
        rad = math.radians(deg)
        return InputQubit.from_components(math.cos(rad), math.sin(rad))
    if "," in text:
        parts = text.split(",")
        if len(parts) != 2:
            raise UsageError(f"bad input state {text!r}")
        try:
            return InputQubit.from_components(complex(parts[0]), complex(parts[1]))
        except ValueError:
            raise UsageError(f"bad input state {text!r}") from None
    raise UsageError(f"unknown input state {text!r}")


# --- subcommands -----------------------------------------------------------------------

def _source_from_args(args):
    if args.ideal:
        return None
    if args.kappa_forward is None and args.kappa_backward is None:
        return None
    kf = args.kappa_forward if args.kappa_forward is not None else 0.1
    kb = args.kappa_backward if args.kappa_backward is not None else 0.1
    try:
        return SourceParams(kappa_forward=kf, kappa_backward=kb,
                            truncation_order=args.truncation_order)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_run(args) -> int:
    if args.reproduce:
        return _reproduce_table1(args)
    input_q = parse_input_state(args.input)
    source = _source_from_args(args)
    if args.resamples and args.seed is None:
        raise UsageError("--resamples needs an explicit --seed")

    def one(channel):
        cfg = ProtocolConfig(channel=channel, action=args.action, input=input_q,
                             source=source, pbs_epsilon=args.pbs_epsilon,
                             roles=args.roles)
        record, _ = run_protocol(cfg)
        return record

    try:
        if args.channel == "mix":
            record = emulate_mixture(one("g1"), one("g2"), args.mix_p)
        else:
            if args.channel == "reference" and args.action != "none":
                raise UsageError("--channel reference requires --action none")
            record = one(args.channel)
    except ValueError as exc:
        raise UsageError(str(exc)) from None

    fid = record.fidelity()
    row = [args.channel, args.action, args.input,
           record.f_parallel, record.f_perp, fid, record.success_probability,
           None, None]
    if args.resamples:
        total = record.f_parallel + record.f_perp
        counts = (args.exposure * record.f_parallel / total,
                  args.exposure * record.f_perp / total)
        est = poisson_uncertainty(counts, seed=args.seed, n_resamples=args.resamples)
        row[-2], row[-1] = est.value, est.uncertainty
    columns = ["channel", "action", "input", "f_parallel", "f_perp", "fidelity",
               "success_probability", "fidelity_mean", "fidelity_std"]
    _emit(_render_table(columns, [row], args.fmt, args.full_precision), args.out)
    return 0


def _reproduce_table1(args) -> int:
    rows = []
    for channel, action, raw_pct, weight_pct, expected_pct in REFERENCE_TABLE:
        corrected = 100.0 * corrected_fidelity(raw_pct / 100.0, weight_pct / 100.0)
        rows.append([channel, action, raw_pct, weight_pct, corrected, expected_pct,
                     corrected - expected_pct])
    columns = ["channel", "action", "raw_percent", "weight_percent",
               "corrected_percent", "expected_percent", "deviation_pp"]
    _emit(_render_table(columns, rows, args.fmt, args.full_precision), args.out)
    return 0


def cmd_reproduce(args) -> int:
    return _reproduce_table1(args)


def _parse_grid(args):
    if args.q_list is not None:
        items = [s for s in args.q_list.split(",") if s.strip()]
        if not items:
            raise UsageError("empty q list")
        try:
            return [float(s) for s in items]
        except ValueError:
            raise UsageError(f"bad q list {args.q_list!r}") from None
    if args.q_grid is not None:
        parts = args.q_grid.split(":")
        if len(parts) != 3:
            raise UsageError("grid must be start:stop:num")
        try:
            start, stop, num = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise UsageError(f"bad grid {args.q_grid!r}") from None
        if num < 1:
            raise UsageError("grid needs at least one point")
        return list(np.linspace(start, stop, num))
    raise UsageError("scan-werner needs --q-grid or --q-list")


def cmd_scan_werner(args) -> int:
    grid = _parse_grid(args)
    try:
        result = werner_scan(grid)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    comments = []
    if result.threshold_q is not None:
        comments.append(f"f_allowed crosses 2/3 at q={result.threshold_q:.9f}")
    columns = ["q", "f_allowed", "f_denied"]
    _emit(_render_table(columns, result.rows, args.fmt, args.full_precision,
                        comments=comments), args.out)
    return 0


def cmd_fit_spdc(args) -> int:
    input_q = parse_input_state(args.input)
    eps = args.pbs_epsilon

    def factory(label):
        return {
            "uncontrolled": ProtocolConfig(channel="reference", action="none",
                                           input=input_q, pbs_epsilon=eps),
            "allowed": ProtocolConfig(channel="g1", action="allow",
                                      input=input_q, pbs_epsilon=eps),
            "denied": ProtocolConfig(channel="g1", action="deny",
                                     input=input_q, pbs_epsilon=eps),
        }[label]

    if args.synthetic_ratio is not None:
        from .spdc import heralded_fraction
        params = SourceParams(kappa_forward=0.1,
                              kappa_backward=0.1 * args.synthetic_ratio)
        targets = {label: heralded_fraction(params, factory(label))["undesired"]
                   for label in DEFAULT_FIT_TARGETS}
    elif args.targets is not None:
        parts = args.targets.split(",")
        if len(parts) != 3:
            raise UsageError("--targets needs three percentages: unc,allowed,denied")
        try:
            vals = [float(p) / 100.0 for p in parts]
        except ValueError:
            raise UsageError(f"bad targets {args.targets!r}") from None
        targets = dict(zip(("uncontrolled", "allowed", "denied"), vals))
    else:
        targets = dict(DEFAULT_FIT_TARGETS)

    fit = fit_source_ratio(targets, factory)
    rows = [[label, targets[label] * 100.0, fit.achieved[label] * 100.0,
             fit.residuals[label] * 100.0] for label in targets]
    comments = [f"fitted_ratio={fit.ratio:.6f}",
                f"sum_squared_residual={fit.sum_squared_residual:.6e}",
                f"converged={fit.converged}"]
    if not fit.constrained:
        comments.append("warning: targets do not constrain the ratio")
    columns = ["config", "target_percent", "achieved_percent", "residual_pp"]
    _emit(_render_table(columns, rows, args.fmt, args.full_precision,
                        comments=comments), args.out)
    return 0


def cmd_tomo(args) -> int:
    try:
        counts = read_counts_csv(args.counts)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read counts: {exc}") from None
    target_q = parse_input_state(args.target)
    target = target_q.ket()
    if args.resamples and args.seed is None:
        raise UsageError("--resamples needs an explicit --seed")
    if not 0.0 <= args.weight < 1.0:
        raise UsageError("--weight must lie in [0, 1)")

    result = ml_reconstruct(counts)
    raw_fid = fidelity(result.rho, target)
    corrected = correct_for_background(result.rho, args.weight)
    corr_fid = fidelity(corrected, target)

    payload = {
        "schema": SCHEMA_VERSION,
        "converged": result.converged,
        "iterations": result.iterations,
        "rho": [[[float(v.real), float(v.imag)] for v in row] for row in result.rho],
        "rho_corrected": [[[float(v.real), float(v.imag)] for v in row]
                          for row in corrected],
        "target": args.target,
        "background_weight": args.weight,
        "raw_fidelity": raw_fid,
        "corrected_fidelity": corr_fid,
    }
    if args.resamples:
        est = poisson_uncertainty(counts, seed=args.seed, n_resamples=args.resamples,
                                  background_w=args.weight, target=target)
        payload["fidelity_mean"] = est.value
        payload["fidelity_std"] = est.uncertainty

    if args.fmt == "json":
        _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.out)
    else:
        rows = [[k, _fmt(v, args.full_precision) if isinstance(v, float) else json.dumps(v)]
                for k, v in sorted(payload.items()) if k != "schema"]
        _emit(_render_table(["key", "value"], rows, "csv", args.full_precision),
              args.out)
    return 0


COMMANDS = {
    "run": cmd_run,
    "scan-werner": cmd_scan_werner,
    "fit-spdc": cmd_fit_spdc,
    "tomo": cmd_tomo,
    "reproduce": cmd_reproduce,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _config_argv(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ProtocolError, ValueError, RuntimeError) as exc:
        print(f"simulation error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
