"""Command line front end.

Subcommands:
  simulate    replication experiment on uniform random markets -> CSV
  evaluate    run mechanisms on a market file -> per-student rank CSV
  manipulate  strategic-reporting experiment across shares -> CSV
  oracle      closed-form reference values -> CSV

Exit codes: 0 success, 2 validation/usage error, 1 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from pathlib import Path

from schoolmatch.market import (
    UNASSIGNED,
    MarketFormatError,
    UndersuppliedMarketError,
    load_market,
    rank_of,
)
from schoolmatch.mechanisms import MECHANISMS, run_mechanism
from schoolmatch.simulate import (
    MANIPULATION_KINDS,
    ExperimentConfig,
    ExperimentError,
    Manipulation,
    derive_seed,
    run_experiment,
)
from schoolmatch import theory

__all__ = ["main", "entry"]


def _mechanism_list(text: str) -> tuple[str, ...]:
    names = tuple(tok.strip() for tok in text.split(",") if tok.strip())
    unknown = [m for m in names if m not in MECHANISMS]
    if unknown:
        raise argparse.ArgumentTypeError(
            f"unknown mechanisms {unknown}; choose from {sorted(MECHANISMS)}"
        )
    return names


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in text.split(",") if tok.strip())


def _read_config_file(path: str) -> dict[str, str]:
    values = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"config line {lineno}: expected key=value, got {line!r}")
        values[key.strip()] = value.strip()
    return values


def _merge_config(args: argparse.Namespace, converters: dict) -> None:
    """Fill argparse values that were left at None from the --config file."""
    if not getattr(args, "config", None):
        return
    raw = _read_config_file(args.config)
    for key, value in raw.items():
        if key not in converters:
            raise ValueError(f"unknown config key {key!r}")
        if getattr(args, key, None) is None:
            setattr(args, key, converters[key](value))


def _default_thresholds(n: int) -> tuple[float, ...]:
    return (1.0, 2.0, math.log(n), 0.1 * n, 0.25 * n, 0.5 * n)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _cmd_simulate(args: argparse.Namespace) -> int:
    converters = {
        "n": int,
        "reps": int,
        "seed": int,
        "mechanisms": _mechanism_list,
        "thresholds": _float_list,
        "market": str,
    }
    _merge_config(args, converters)
    n = args.n if args.n is not None else 100
    config = ExperimentConfig(
        n=n,
        replications=args.reps if args.reps is not None else 1000,
        master_seed=args.seed if args.seed is not None else 0,
        mechanisms=args.mechanisms if args.mechanisms is not None else ("RM", "TTC", "DA"),
        thresholds=args.thresholds if args.thresholds is not None else _default_thresholds(n),
        market_path=args.market,
    )
    _emit(run_experiment(config).to_csv(), args.out)
    return 0


def _cmd_manipulate(args: argparse.Namespace) -> int:
    converters = {
        "n": int,
        "reps": int,
        "seed": int,
        "mechanisms": _mechanism_list,
        "kind": str,
        "shares": _float_list,
    }
    _merge_config(args, converters)
    kind = args.kind if args.kind is not None else "drop_assigned"
    if kind not in MANIPULATION_KINDS:
        raise ValueError(f"unknown manipulation kind {kind!r}; choose from {MANIPULATION_KINDS}")
    shares = args.shares if args.shares is not None else (0.0, 0.2, 0.4, 0.6, 0.8)
    n = args.n if args.n is not None else 100
    blocks = []
    for i, share in enumerate(shares):
        config = ExperimentConfig(
            n=n,
            replications=args.reps if args.reps is not None else 100,
            master_seed=args.seed if args.seed is not None else 0,
            mechanisms=args.mechanisms if args.mechanisms is not None else ("RM", "TTC", "DA"),
            thresholds=(),
            manipulation=Manipulation(kind, share),
        )
        text = run_experiment(config).to_csv()
        blocks.append(text if i == 0 else text.split("\n", 1)[1])
    _emit("".join(blocks), args.out)
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    market = load_market(args.market)
    mechanisms = args.mechanisms if args.mechanisms is not None else ("DA",)
    seed = args.seed if args.seed is not None else 0
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["mechanism", "student_id", "school_id", "rank"])
    for i, mech in enumerate(mechanisms):
        allocation = run_mechanism(mech, market, derive_seed(seed, i))
        for t, s in enumerate(allocation.assignment):
            school = "" if s == UNASSIGNED else str(market.school_ids[s])
            writer.writerow(
                [mech, str(market.student_ids[t]), school, str(rank_of(market, t, s))]
            )
    _emit(out.getvalue(), args.out)
    return 0


def _oracle_rows(check: str, n: int):
    if check == "rsd_envy":
        value = theory.rsd_no_envy_fraction(n)
        yield check, n, value, (
            "RSD no-envy fraction; limit 2+2ln(1/2)=0.6137, envy share = 1 - value"
        )
    elif check == "rm_envy":
        yield check, n, theory.rm_envy_limit(), "1 - sum 2^(1-2i) = 1/3"
    elif check == "rm_pmf":
        for i in range(1, 11):
            yield f"rm_pmf[{i}]", n, theory.rm_rank_pmf(i), "asymptotic rank pmf 2^-i"
    elif check == "ttc_avg_rank":
        yield check, n, theory.ttc_expected_avg_rank(n), "((n+1)H_n - n)/n"
    elif check == "curves":
        for mech, (avg, mx) in theory.reference_curves(n).items():
            yield f"curve_avg[{mech}]", n, avg.value, avg.source
            yield f"curve_max[{mech}]", n, mx.value, mx.source
    else:
        raise ValueError(
            f"unknown check {check!r}; choose from "
            "rsd_envy, rm_envy, rm_pmf, ttc_avg_rank, curves"
        )


def _cmd_oracle(args: argparse.Namespace) -> int:
    n = args.n if args.n is not None else 1000
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["check", "n", "value", "source"])
    for check, size, value, source in _oracle_rows(args.check, n):
        writer.writerow([check, str(size), format(value, ".10g"), source])
    _emit(out.getvalue(), args.out)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="schoolmatch",
        description="School-choice mechanism laboratory: simulations, metrics and oracles.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="replication experiment on random markets")
    sim.add_argument("--n", type=int, default=None, help="market size (default 100)")
    sim.add_argument("--reps", type=int, default=None, help="replications (default 1000)")
    sim.add_argument("--seed", type=int, default=None, help="master seed (default 0)")
    sim.add_argument("--mechanisms", type=_mechanism_list, default=None,
                     help="comma list from DA,TTC,RSD,RM (default RM,TTC,DA)")
    sim.add_argument("--thresholds", type=_float_list, default=None,
                     help="rank cutoffs (default 1,2,log n,0.1n,0.25n,0.5n)")
    sim.add_argument("--market", default=None, help="fixed market file instead of random markets")
    sim.add_argument("--config", default=None, help="key=value file with defaults for the flags")
    sim.add_argument("--out", default=None, help="write CSV here instead of stdout")
    sim.set_defaults(func=_cmd_simulate)

    man = sub.add_parser("manipulate", help="strategic-reporting experiment across shares")
    man.add_argument("--kind", choices=MANIPULATION_KINDS, default=None)
    man.add_argument("--shares", type=_float_list, default=None,
                     help="comma list of shares (default 0,0.2,0.4,0.6,0.8)")
    man.add_argument("--n", type=int, default=None)
    man.add_argument("--reps", type=int, default=None, help="replications (default 100)")
    man.add_argument("--seed", type=int, default=None)
    man.add_argument("--mechanisms", type=_mechanism_list, default=None)
    man.add_argument("--config", default=None, help="key=value file with defaults for the flags")
    man.add_argument("--out", default=None)
    man.set_defaults(func=_cmd_manipulate)

    ev = sub.add_parser("evaluate", help="run mechanisms on a market file")
    ev.add_argument("--market", required=True, help="market file path")
    ev.add_argument("--mechanisms", type=_mechanism_list, default=None, help="default DA")
    ev.add_argument("--seed", type=int, default=None)
    ev.add_argument("--out", default=None)
    ev.set_defaults(func=_cmd_evaluate)

    orc = sub.add_parser("oracle", help="closed-form reference values")
    orc.add_argument("--check", required=True,
                     help="rsd_envy | rm_envy | rm_pmf | ttc_avg_rank | curves")
    orc.add_argument("--n", type=int, default=None, help="size argument (default 1000)")
    orc.add_argument("--out", default=None)
    orc.set_defaults(func=_cmd_oracle)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, MarketFormatError, UndersuppliedMarketError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ExperimentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
