"""Command-line front end: ``sparsepr <subcommand> [options]``.

Exit codes: 0 success / predicate holds, 1 predicate failure (property
violated, recovery failed or ambiguous), 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import csv
import io
import sys

import numpy as np

from . import io as sio
from .complement import (
    DEFAULT_MAX_K_CHOOSE,
    DEFAULT_MAX_N,
    EnumerationCapError,
    ambiguity_from_violation,
    has_complement_property,
    has_k_complement_property,
)
from .ensembles import (
    fourier_rows,
    gaussian_ensemble,
    intensity_measure,
    random_collision_free_signal,
)
from .experiments import ConfigError, ExperimentConfig, run_config_file, run_experiment
from .fmm import check_fmm_conditions, fmm_recover, next_valid_N
from .lifted import NoSolutionError, l0_recover
from .signal import equivalent_under_invariances


class UsageError(Exception):
    pass


def _add_globals(p, suppress):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--seed", type=int, default=d(0), help="64-bit seed (default 0)")
    p.add_argument("--workers", type=int, default=d(1), help="worker processes for experiments")
    p.add_argument("--out", default=d(None), help="also write the CSV output to this file")
    p.add_argument("--format", choices=("csv", "text"), default=d("text"), help="stdout format")


def _add_ensemble(p):
    g = p.add_argument_group("ensemble (a CSV file, or Gaussian with --m/--n/--seed)")
    g.add_argument("--ensemble", help="ensemble CSV file")
    g.add_argument("--m", type=int, help="signal dimension M")
    g.add_argument("--n", type=int, help="number of measurement vectors N")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sparsepr", description=__doc__.splitlines()[0])
    _add_globals(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check-complement", help="exhaustive complement-property check")
    _add_ensemble(p)
    p.add_argument("--max-n", type=int, default=DEFAULT_MAX_N)

    p = sub.add_parser("check-k-complement", help="exhaustive k-complement-property check")
    _add_ensemble(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--max-n", type=int, default=DEFAULT_MAX_N)
    p.add_argument("--max-k-choose", type=int, default=DEFAULT_MAX_K_CHOOSE)

    p = sub.add_parser("recover", help="exact l0 recovery from intensity measurements")
    _add_ensemble(p)
    p.add_argument("--y", help="measurement CSV (one row)")
    p.add_argument("--signal", help="signal CSV to measure instead of --y")
    p.add_argument("--kmax", type=int, required=True, help="largest sparsity to try")

    p = sub.add_parser("fmm", help="recovery from Fourier magnitude measurements")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--freqs", default="auto-prime",
                   help='comma-separated indices in [0, 2M), or "auto-prime" (0..N-1 with N '
                        "the smallest prime above 2(k^2-k+1))")
    p.add_argument("--signal", help="signal CSV (default: random collision-free from --seed)")
    p.add_argument("--y", help="measurement CSV instead of --signal")
    p.add_argument("--exploit-symmetry", action="store_true")

    p = sub.add_parser("experiment", help="seeded Monte-Carlo experiment(s)")
    p.add_argument("--config", help="INI-style config file with [experiment ...] blocks")
    p.add_argument("--name", choices=("complement_mc", "k_complement_mc", "sparse_uniqueness_mc",
                                      "fmm_roundtrip_mc", "ambiguity_demo"))
    p.add_argument("--m", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--n", type=int, help="measurement count (default: the experiment's natural N)")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--max-n", type=int, default=DEFAULT_MAX_N)
    p.add_argument("--max-k-choose", type=int, default=DEFAULT_MAX_K_CHOOSE)
    p.add_argument("--exploit-symmetry", action="store_true")

    p = sub.add_parser("ambiguity", help="ambiguous signal pair from a violation certificate")
    _add_ensemble(p)
    p.add_argument("--k", type=int, help="use the k-complement property (default: plain)")
    p.add_argument("--max-n", type=int, default=DEFAULT_MAX_N)
    p.add_argument("--max-k-choose", type=int, default=DEFAULT_MAX_K_CHOOSE)

    for p in sub.choices.values():
        _add_globals(p, suppress=True)
    return parser


# --------------------------------------------------------------------------

def _ensemble(args):
    if args.ensemble:
        return sio.read_ensemble_csv(args.ensemble)
    if args.m is None or args.n is None:
        raise UsageError("give --ensemble FILE or both --m and --n")
    return gaussian_ensemble(args.m, args.n, args.seed)


def _csv_row(row: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(row.keys())
    w.writerow(row.values())
    return buf.getvalue()


def _vec(x) -> str:
    return " ".join(repr(float(t)) for t in np.ravel(x))


def _emit(args, text: str, row: dict):
    table = _csv_row(row)
    sys.stdout.write(table if args.format == "csv" else text)
    if args.out:
        with open(args.out, "w", newline="") as f:
            f.write(table)


def _cmd_check(args):
    phi = _ensemble(args)
    if args.command == "check-complement":
        ok, cert = has_complement_property(phi, max_n=args.max_n)
        k = phi.length
    else:
        ok, cert = has_k_complement_property(phi, args.k, max_n=args.max_n,
                                             max_k_choose=args.max_k_choose)
        k = args.k
    text = f"holds: {ok}\nN: {phi.n}\nk: {k}\n" + (sio.format_certificate(cert) if cert else "")
    row = {"holds": ok, "N": phi.n, "k": k,
           "S": " ".join(map(str, cert.S)) if cert else "",
           "K": " ".join(map(str, cert.K)) if cert else ""}
    _emit(args, text, row)
    return 0 if ok else 1


def _cmd_recover(args):
    phi = _ensemble(args)
    if (args.y is None) == (args.signal is None):
        raise UsageError("give exactly one of --y and --signal")
    y = sio.read_vector_csv(args.y) if args.y else intensity_measure(phi, sio.read_signal_csv(args.signal))
    try:
        rep = l0_recover(phi, y, args.kmax)
    except NoSolutionError as exc:
        _emit(args, f"error: {exc}\n", {"solution": "", "sparsity_found": "", "unique": False})
        return 1
    _emit(args, sio.format_recovery_report(rep),
          {"solution": _vec(rep.solution), "sparsity_found": rep.sparsity_found,
           "unique": rep.unique, "alternates": len(rep.alternates),
           "residual": repr(rep.residual), "flags": " ".join(rep.flags)})
    return 0 if rep.unique else 1


def _parse_freqs(text: str, m: int, k: int) -> tuple:
    if text == "auto-prime":
        n = next_valid_N(k)
        if n > 2 * m:
            raise UsageError(f"auto-prime needs N = {n} frequencies but only 2M = {2 * m} exist")
        return tuple(range(n))
    try:
        return tuple(int(t) for t in text.replace(",", " ").split())
    except ValueError:
        raise UsageError(f"bad --freqs {text!r}") from None


def _cmd_fmm(args):
    freqs = _parse_freqs(args.freqs, args.m, args.k)
    phi = fourier_rows(args.m, freqs)
    x0 = None
    if args.y:
        y = sio.read_vector_csv(args.y)
    else:
        x0 = (sio.read_signal_csv(args.signal) if args.signal
              else random_collision_free_signal(args.m, args.k, args.seed))
        y = intensity_measure(phi, x0)
    rep = fmm_recover(y, freqs, args.m, args.k, exploit_symmetry=args.exploit_symmetry)
    match = None if x0 is None else equivalent_under_invariances(
        x0, rep.solution, group="full", circular=False, tol=1e-6 * max(1.0, np.max(np.abs(x0))))
    cond = rep.details["conditions"] if x0 is None else check_fmm_conditions(x0, len(freqs))
    text = ("[conditions]\n" + sio.format_fmm_conditions(cond) + "\n[recovery]\n"
            + sio.format_recovery_report(rep)
            + ("" if x0 is None else f"\n[truth]\nsignal: {_vec(x0)}\nequivalent: {match}\n"))
    row = {"M": args.m, "k": args.k, "N": len(freqs), "verdict": cond.verdict.value,
           "solution": _vec(rep.solution), "unique": rep.unique,
           "equivalent": "" if match is None else match,
           "residual": repr(rep.residual), "flags": " ".join(rep.flags)}
    _emit(args, text, row)
    return 0 if rep.unique and match is not False else 1


def _cmd_ambiguity(args):
    phi = _ensemble(args)
    if args.k is None:
        ok, cert = has_complement_property(phi, max_n=args.max_n)
    else:
        ok, cert = has_k_complement_property(phi, args.k, max_n=args.max_n,
                                             max_k_choose=args.max_k_choose)
    if ok:
        _emit(args, "holds: True\nno violation, so no ambiguous pair exists\n",
              {"holds": True, "x1": "", "x2": "", "discrepancy": ""})
        return 1
    x1, x2 = ambiguity_from_violation(phi, cert)
    y1, y2 = intensity_measure(phi, x1), intensity_measure(phi, x2)
    gap = float(np.max(np.abs(y1 - y2)))
    text = (f"holds: False\n{sio.format_certificate(cert)}x1: {_vec(x1)}\nx2: {_vec(x2)}\n"
            f"y1: {_vec(y1)}\ny2: {_vec(y2)}\ndiscrepancy: {gap!r}\n")
    _emit(args, text, {"holds": False, "x1": _vec(x1), "x2": _vec(x2), "discrepancy": repr(gap)})
    return 0


def _cmd_experiment(args):
    if args.config:
        batch = run_config_file(args.config, workers=args.workers, out=args.out,
                                seed=args.seed if "seed" in args.explicit else None)
        sys.stdout.write(batch.csv() if args.format == "csv" else batch.text())
        return batch.exit_code
    if args.name is None or args.m is None:
        raise UsageError("give --config FILE, or --name and --m")
    cfg = ExperimentConfig(args.name, args.m, k=args.k, N=args.n, trials=args.trials,
                           seed=args.seed, max_n=args.max_n, max_k_choose=args.max_k_choose,
                           exploit_symmetry=args.exploit_symmetry, out=args.out)
    summary = run_experiment(cfg, workers=args.workers)
    sys.stdout.write(summary.csv() if args.format == "csv" else summary.text())
    return summary.exit_code


_COMMANDS = {
    "check-complement": _cmd_check,
    "check-k-complement": _cmd_check,
    "recover": _cmd_recover,
    "fmm": _cmd_fmm,
    "experiment": _cmd_experiment,
    "ambiguity": _cmd_ambiguity,
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.explicit = {a.lstrip("-").split("=")[0] for a in argv if a.startswith("--")}
    try:
        return _COMMANDS[args.command](args)
    except (UsageError, ConfigError, EnumerationCapError, ValueError, OSError) as exc:
        print(f"sparsepr {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
