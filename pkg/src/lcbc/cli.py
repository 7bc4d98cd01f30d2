"""Command-line entry point: ``lcbc <subcommand> [flags]``.

Exit codes: 0 on success, 1 on domain or IO errors, 2 on usage errors.
All randomness flows from --seed (default 0), so repeated invocations give
identical output bytes.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Sequence

from ._util import csv_text, jsonable
from .analysis import (
    EVENTS,
    ProbEstimate,
    check_generic_conditions,
    converse_chain,
    estimate_event,
    sweep,
)
from .capacity import (
    SymParams,
    delta_g,
    generic_bounds,
    large_K_branch,
    one_dim_branch,
    regime_label,
    small_K_branch,
)
from .errors import BadParams, ConfigError, FormatError, LcbcError
from .galois import make_field
from .instance import LcbcInstance, sample_instance, toy_instance_f7
from .schemes import (
    Scheme,
    SimReport,
    build_ia,
    build_odd_d,
    build_random_coding,
    build_separate,
    ia_artifacts,
    simulate_decoding,
)

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _widths(text: str) -> int | list[int]:
    vals = _ints(text)
    if len(vals) == 1:
        return vals[0]
    return vals


def _shared() -> argparse.ArgumentParser:
    sh = argparse.ArgumentParser(add_help=False)
    sh.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    sh.add_argument("--out", type=Path, default=None, help="output file (default stdout)")
    sh.add_argument("--format", choices=("csv", "json"), default="csv")
    sh.add_argument("--quiet", action="store_true", help="suppress informational stdout")
    return sh


def build_parser() -> argparse.ArgumentParser:
    sh = _shared()
    ap = _Parser(prog="lcbc", description="Linear computation broadcast toolkit")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("capacity", parents=[sh], help="generic broadcast cost")
    for k in ("--K", "--d", "--m", "--mp"):
        c.add_argument(k, type=int, required=True)
    g = c.add_mutually_exclusive_group()
    g.add_argument("--small-k", dest="theorem", action="store_const", const="small-K")
    g.add_argument("--large-k", dest="theorem", action="store_const", const="large-K")
    g.add_argument("--one-dim", dest="theorem", action="store_const", const="one-dim")
    g.add_argument("--bounds", dest="theorem", action="store_const", const="bounds")

    b = sub.add_parser("bounds", parents=[sh], help="lower and upper bounds, possibly asymmetric")
    b.add_argument("--K", type=int, required=True)
    b.add_argument("--d", type=int, required=True)
    b.add_argument("--m", type=_widths, required=True, help="width or comma list")
    b.add_argument("--mp", type=_widths, required=True, help="width or comma list")

    gi = sub.add_parser("gen-instance", parents=[sh], help="sample an instance file")
    gi.add_argument("--p", type=int, default=None)
    gi.add_argument("--n", type=int, default=None)
    gi.add_argument("--K", type=int, default=None)
    gi.add_argument("--d", type=int, default=None)
    gi.add_argument("--m", type=_widths, default=None)
    gi.add_argument("--mp", type=_widths, default=None)
    gi.add_argument("--toy", action="store_true", help="the four-symbol F_7 example with its scheme")
    gi.add_argument("--scheme-out", type=Path, default=None, help="where to write the toy scheme")

    bs = sub.add_parser("build-scheme", parents=[sh], help="build an encoder/decoder pair")
    bs.add_argument("--type", required=True, choices=("separate", "random-coding", "ia", "odd-d"))
    bs.add_argument("--instance", type=Path, required=True)
    bs.add_argument("--N", type=int, default=None, help="IA exponent bound override")
    bs.add_argument("--force", action="store_true", help="skip the IA memory guard")
    bs.add_argument("--strict", action="store_true", help="fail when the IA rank event does not hold")
    bs.add_argument("--max-tries", type=int, default=16)

    si = sub.add_parser("simulate", parents=[sh], help="decode random or all data vectors")
    si.add_argument("--instance", type=Path, required=True)
    si.add_argument("--scheme", type=Path, required=True)
    si.add_argument("--trials", type=int, default=100)
    si.add_argument("--exhaustive", action="store_true")

    ce = sub.add_parser("check-en", parents=[sh], help="IA full-rank event on one instance")
    ce.add_argument("--instance", type=Path, required=True)
    ce.add_argument("--N", type=int, default=None)
    ce.add_argument("--force", action="store_true")

    cc = sub.add_parser("converse-cert", parents=[sh], help="rank certificate for the converse")
    cc.add_argument("--instance", type=Path, required=True)

    ck = sub.add_parser("check-conditions", parents=[sh], help="generic conditions C1..C6")
    ck.add_argument("--instance", type=Path, required=True)

    es = sub.add_parser("estimate", parents=[sh], help="Monte-Carlo event frequency")
    es.add_argument("--event", required=True, choices=EVENTS)
    es.add_argument("--p", type=int, default=2)
    es.add_argument("--n", type=int, default=1)
    es.add_argument("--params", nargs="*", default=[], metavar="KEY=VALUE",
                    help="event parameters, e.g. K=2 d=4 m=1 mp=1 N=1 or d=4 widths=2,2")
    es.add_argument("--trials", type=int, default=100)

    sw = sub.add_parser("sweep", parents=[sh], help="evaluate a parameter grid from TOML")
    sw.add_argument("--config", type=Path, required=True)
    return ap


# ---------------------------------------------------------------------------


def _table(args, header: Sequence[str], rows: Sequence[Sequence]) -> str:
    if args.format == "json":
        recs = [dict(zip(header, jsonable(list(r)))) for r in rows]
        return json.dumps(recs, indent=2, sort_keys=True) + "\n"
    return csv_text(header, rows)


def _emit(args, text: str) -> None:
    if args.out is not None:
        args.out.write_text(text)
    elif not args.quiet:
        sys.stdout.write(text)


def _load_instance(path: Path) -> LcbcInstance:
    try:
        return LcbcInstance.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not JSON ({exc})") from exc


def _load_scheme(path: Path) -> Scheme:
    try:
        return Scheme.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not JSON ({exc})") from exc


def cmd_capacity(args) -> str:
    P = SymParams(args.K, args.d, args.m, args.mp)
    b = generic_bounds(P.K, P.d, P.m, P.mprime)
    if args.theorem is None:
        value, source, branch = delta_g(P)
    elif args.theorem == "small-K":
        (value, branch), source = small_K_branch(P), "small-K"
    elif args.theorem == "large-K":
        (value, branch), source = large_K_branch(P), "large-K"
    elif args.theorem == "one-dim":
        if P.m != 1 or P.mprime != 1:
            raise BadParams("--one-dim needs m = m' = 1")
        (value, branch), source = one_dim_branch(P.K, P.d), "one-dim"
    else:
        value = b.lower if b.lower == b.upper else None
        source, branch = "bounds", regime_label(P.K, P.d, P.m, P.mprime)
    C_g = 1 / value if value else None
    header = ("K", "d", "m", "mp", "regime", "lower", "upper", "delta_g", "C_g", "source", "branch")
    row = (P.K, P.d, P.m, P.mprime, b.regime, b.lower, b.upper, value, C_g, source, branch)
    return _table(args, header, [row])


def cmd_bounds(args) -> str:
    b = generic_bounds(args.K, args.d, args.m, args.mp)
    m = args.m if isinstance(args.m, int) else ";".join(map(str, args.m))
    mp = args.mp if isinstance(args.mp, int) else ";".join(map(str, args.mp))
    header = ("K", "d", "m", "mp", "lower", "upper", "delta_g", "regime", "heuristic")
    return _table(args, header, [(args.K, args.d, m, mp, b.lower, b.upper, b.delta_g, b.regime, b.heuristic)])


def cmd_gen_instance(args) -> str:
    dims = {k: getattr(args, k) for k in ("K", "d", "m", "mp")}
    if args.toy:
        if any(v is not None for v in dims.values()) or args.p not in (None, 7) or args.n not in (None, 1):
            raise UsageError("--toy fixes p=7, n=1 and the dimensions; drop the other flags")
        inst, scheme = toy_instance_f7()
        scheme_path = args.scheme_out
        if scheme_path is None and args.out is not None:
            scheme_path = args.out.with_name(args.out.stem + ".scheme.json")
        if scheme_path is not None:
            scheme_path.write_text(scheme.dumps() + "\n")
        return inst.dumps() + "\n"
    if args.scheme_out is not None:
        raise UsageError("--scheme-out is only meaningful with --toy")
    missing = [k for k, v in dims.items() if v is None] + [k for k in ("p", "n") if getattr(args, k) is None]
    if missing:
        raise UsageError(f"gen-instance: missing --{', --'.join(missing)}")
    F = make_field(args.p, args.n)
    inst = sample_instance(F, args.K, args.d, args.m, args.mp, args.seed)
    return inst.dumps() + "\n"


def cmd_build_scheme(args) -> str:
    inst = _load_instance(args.instance)
    if args.type == "separate":
        scheme = build_separate(inst)
    elif args.type == "random-coding":
        scheme = build_random_coding(inst, max_tries=args.max_tries, seed=args.seed)
    elif args.type == "odd-d":
        scheme = build_odd_d(inst)
    else:
        _, scheme = build_ia(inst, args.N, seed=args.seed, force=args.force, strict=args.strict)
    return scheme.dumps() + "\n"


def cmd_simulate(args) -> str:
    inst = _load_instance(args.instance)
    scheme = _load_scheme(args.scheme)
    rep = simulate_decoding(inst, scheme, trials=args.trials, seed=args.seed, exhaustive=args.exhaustive)
    return _table(args, SimReport.HEADER, [rep.row(scheme.kind)])


def cmd_check_en(args) -> str:
    inst = _load_instance(args.instance)
    ia = ia_artifacts(inst, args.N, seed=args.seed, with_hbar=False, force=args.force)
    header = ("N", "eta", "etabar", "en_holds", "en_ranks", "paper_bound")
    ranks = ";".join(map(str, ia.en_ranks))
    return _table(args, header, [(ia.N, ia.eta, ia.etabar, ia.en_holds, ranks, ia.paper_bound)])


def cmd_converse_cert(args) -> str:
    cert = converse_chain(_load_instance(args.instance))
    if args.format == "json":
        return json.dumps(jsonable(asdict(cert)), indent=2, sort_keys=True) + "\n"
    header = ("i", "K_i", "rk_gamma", "rk_upsilon", "rk_pi", "rk_u")
    rows = [
        (i + 1, cert.Ki[i + 1], cert.gamma_ranks[i], cert.upsilon_ranks[i], cert.pi_ranks[i], cert.u_ranks[i])
        for i in range(cert.mbar)
    ]
    summary = csv_text(("mbar", "Ki", "vprime_ranks", "en_conv", "implied_bound"), [(
        cert.mbar, ";".join(map(str, cert.Ki)), ";".join(map(str, cert.vprime_ranks)), cert.en_conv, cert.implied_bound,
    )])
    return summary + csv_text(header, rows)


def cmd_check_conditions(args) -> str:
    res = check_generic_conditions(_load_instance(args.instance))
    return _table(args, ("condition", "holds"), list(res.items()))


def _parse_params(items: Sequence[str]) -> dict:
    out: dict = {}
    for item in items:
        if "=" not in item:
            raise UsageError(f"estimate: parameter {item!r} is not KEY=VALUE")
        key, val = item.split("=", 1)
        try:
            out[key] = _ints(val) if key == "widths" else int(val)
        except (ValueError, argparse.ArgumentTypeError):
            raise UsageError(f"estimate: parameter {key} needs an integer value")
    return out


def cmd_estimate(args) -> str:
    params = _parse_params(args.params)
    F = make_field(args.p, args.n)
    est = estimate_event(args.event, F, args.trials, args.seed, **params)
    return _table(args, ProbEstimate.HEADER, [est.row(args.event)])


def cmd_sweep(args) -> str:
    try:
        config = tomllib.loads(args.config.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{args.config}: {exc}") from exc
    events = config.get("events")
    if isinstance(events, dict) and "seed" not in events:
        events["seed"] = args.seed
    header, rows = sweep(config)
    return _table(args, header, rows)


COMMANDS = {
    "capacity": cmd_capacity,
    "bounds": cmd_bounds,
    "gen-instance": cmd_gen_instance,
    "build-scheme": cmd_build_scheme,
    "simulate": cmd_simulate,
    "check-en": cmd_check_en,
    "converse-cert": cmd_converse_cert,
    "check-conditions": cmd_check_conditions,
    "estimate": cmd_estimate,
    "sweep": cmd_sweep,
}


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        text = COMMANDS[args.command](args)
        _emit(args, text)
        return 0
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except LcbcError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
