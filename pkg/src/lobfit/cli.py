"""Batch pipeline driver.

Four subcommands chain the package into the full workflow:

    lobfit synth --seed 7 --out run/
        emit a seeded stream (run/stream.lobf) plus the generator's own
        tallies (run/ground_truth.json)

    lobfit rates run/stream.lobf --out run/
        replay the stream through the book and write run/rates.csv and
        run/cancels.csv, one row per (bucket, side, tick)

    lobfit fit run/rates.csv --out run/
        fit every selected family to every instance and write
        run/fits.json, run/nps_summary.csv, run/welch_tests.csv

    lobfit cancel-test run/cancels.csv --out run/
        chi-square uniformity of cancellation ratios per weekly and
        monthly bucket, written to run/chi_square.csv

Every command is deterministic: identical inputs and flags produce
byte-identical outputs.  Exit codes: 0 success, 1 input problem
(bad bytes, bad flags, missing files), 2 internal failure.

Model arguments use family shorthands with positional parameters,
e.g. ``dw:0.8,1.2`` (q, beta), ``geo:0.4`` (p), ``bb:2,6`` (alpha,
beta), ``exp:0.7`` (rate), ``pow:0.3,1.4`` (scale, exponent).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import statistics
import sys

from lobfit import dist, feed, rates, stats, synth
from lobfit.book import OrderBook, TickReference
from lobfit.errors import (AllZero, DegenerateData, InsufficientData,
                           LobfitError, MissingTicks, NonConvergence,
                           ZeroVariance)
from lobfit.feed import Side
from lobfit.rates import Granularity

_FAMILY_ORDER = ("geometric", "discrete_weibull", "beta_binomial",
                 "exponential", "power_law")
_SHORTHAND = {"geo": "geometric", "dw": "discrete_weibull",
              "bb": "beta_binomial", "exp": "exponential",
              "pow": "power_law"}
_MODEL_ARITY = {"geometric": 1, "discrete_weibull": 2, "beta_binomial": 2,
                "exponential": 1, "power_law": 2}
_TIMESTEP_ORDER = ("daily_buy", "daily_sell", "weekly_buy", "weekly_sell",
                   "monthly", "hourly_buy", "hourly_sell")
_GRANULARITY_POS = {Granularity.DAILY: 0, Granularity.WEEKLY: 1,
                    Granularity.MONTHLY: 2, Granularity.HOURLY: 3}
_COMPARISONS = (("dw_vs_bb", "discrete_weibull", "beta_binomial"),
                ("dw_vs_pow", "discrete_weibull", "power_law"))


# --- argument parsing helpers ---

def parse_model(text: str):
    """Build a model family from shorthand syntax like ``dw:0.8,1.2``."""
    head, sep, tail = text.partition(":")
    tag = _SHORTHAND.get(head.strip())
    if tag is None or not sep:
        raise ValueError(
            f"bad model {text!r}; use one of "
            f"{','.join(_SHORTHAND)} followed by ':' and parameters")
    try:
        values = [float(v) for v in tail.split(",")]
    except ValueError:
        raise ValueError(f"bad model parameters in {text!r}") from None
    if len(values) != _MODEL_ARITY[tag]:
        raise ValueError(
            f"{head} takes {_MODEL_ARITY[tag]} parameter(s), "
            f"got {len(values)} in {text!r}")
    if tag == "geometric":
        return dist.Geometric(values[0])
    if tag == "discrete_weibull":
        return dist.DiscreteWeibull(values[0], values[1])
    if tag == "beta_binomial":
        return dist.BetaBinomial(values[0], values[1])
    if tag == "exponential":
        return dist.Exponential(values[0])
    return dist.PowerLaw(values[0], values[1])


def parse_families(text: str) -> list[str]:
    tags = []
    for part in text.split(","):
        tag = _SHORTHAND.get(part.strip())
        if tag is None:
            raise ValueError(
                f"unknown family {part.strip()!r}; "
                f"choose from {','.join(_SHORTHAND)}")
        if tag not in tags:
            tags.append(tag)
    return sorted(tags, key=_FAMILY_ORDER.index)


def parse_granularities(text: str) -> list[Granularity]:
    out = []
    for part in text.split(","):
        name = part.strip().lower()
        try:
            g = Granularity(name)
        except ValueError:
            raise ValueError(f"unknown granularity {name!r}") from None
        if g not in out:
            out.append(g)
    if not out:
        raise ValueError("at least one granularity is required")
    return out


def _timestep(granularity: Granularity, side: Side) -> str:
    if granularity is Granularity.MONTHLY:
        return "monthly"
    return f"{granularity.value}_{side.name.lower()}"


def _instance_sort_key(inst: dict) -> tuple:
    granularity, index = rates.parse_bucket_label(inst["bucket_key"])
    return (_GRANULARITY_POS[granularity], index, inst["side"].value)


def _warn(message: str) -> None:
    print(f"warning: {message}", file=sys.stderr)


# --- subcommands ---

def cmd_synth(args) -> None:
    style = (synth.CancelStyle.FULL if args.cancel_style == "full"
             else synth.CancelStyle.UNIFORM_FRACTION)
    spec = synth.SynthSpec(
        seed=args.seed,
        days=args.days,
        orders_per_day=args.orders_per_day,
        buy_model=parse_model(args.buy_model),
        sell_model=parse_model(args.sell_model),
        cancel_probability=args.cancel_probability,
        cancel_style=style,
        tick_size=args.tick_size,
        initial_mid=args.mid,
    )
    blob, truth = synth.generate(spec)
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "stream.lobf"), "wb") as fh:
        fh.write(blob)
    synth.write_ground_truth(os.path.join(args.out, "ground_truth.json"),
                             truth)


def cmd_rates(args) -> None:
    granularities = parse_granularities(args.granularity)
    reference = (TickReference.SAME_SIDE if args.reference == "same"
                 else TickReference.OPPOSITE_SIDE)
    if args.side == "both":
        sides = {Side.BUY, Side.SELL}
    else:
        sides = {Side[args.side.upper()]}
    store = rates.TallyStore()
    books: dict[int, OrderBook] = {}
    seen = 0

    def all_frames():
        for path in args.inputs:
            yield from feed.read_lobf(path)

    for session_id, msg in feed.iter_stream(all_frames()):
        book = books.get(session_id)
        if book is None:
            book = books[session_id] = OrderBook(tick_size=args.tick_size,
                                                 reference=reference)
        day = synth.session_id_to_date(session_id)
        for event in book.apply(msg):
            if event.side in sides:
                rates.accumulate_event(store, event, day,
                                       granularities=granularities)
        seen += 1
    if seen == 0:
        raise LobfitError("input contains no messages")
    os.makedirs(args.out, exist_ok=True)
    rates.write_rates_csv(store, os.path.join(args.out, "rates.csv"))
    rates.write_cancels_csv(store, os.path.join(args.out, "cancels.csv"))


def _fit_instance(inst: dict, families, truncated: bool) -> dict:
    density = inst["density"]
    record = {
        "bucket_key": inst["bucket_key"],
        "side": inst["side"].name.lower(),
        "granularity": inst["granularity"].value,
        "timestep": _timestep(inst["granularity"], inst["side"]),
        "total_quantity": sum(inst["quantity"]),
        "fits": {},
        "failed": {},
    }
    l1 = {}
    for tag in families:
        try:
            result = dist.fit_family(density, tag, truncated=truncated)
        except NonConvergence:
            record["failed"][tag] = "non_convergence"
            continue
        except DegenerateData:
            record["failed"][tag] = "degenerate_data"
            continue
        curve = dist.tick_curve(result.family, ticks=len(density))
        l1[tag] = stats.l1_error(density, curve)
        record["fits"][tag] = {
            "params": result.family.params(),
            "objective": (result.objective
                          if math.isfinite(result.objective) else None),
            "converged": result.converged,
            "boundary": result.boundary,
            "starts_used": result.starts_used,
            "iterations": result.iterations,
            "l1_error": l1[tag],
        }
    for tag, score in stats.nps(l1).items():
        record["fits"][tag]["nps"] = score
    return record


def cmd_fit(args) -> None:
    families = parse_families(args.families)
    instances = rates.read_rates_csv(args.rates)
    if not instances:
        raise LobfitError(f"no instances in {args.rates}")
    instances.sort(key=_instance_sort_key)
    records = [_fit_instance(inst, families, args.truncated_likelihood)
               for inst in instances]

    scores: dict[tuple[str, str], list[float]] = {}
    for record in records:
        for tag, fit in record["fits"].items():
            scores.setdefault((record["timestep"], tag), []).append(
                fit["nps"])

    os.makedirs(args.out, exist_ok=True)
    payload = {
        "families": list(families),
        "truncated_likelihood": bool(args.truncated_likelihood),
        "instances": records,
    }
    with open(os.path.join(args.out, "fits.json"), "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")

    with open(os.path.join(args.out, "nps_summary.csv"), "w",
              newline="") as fh:
        fh.write("timestep,family,mean_nps,sd_nps,instances\n")
        for timestep in _TIMESTEP_ORDER:
            for tag in families:
                values = scores.get((timestep, tag))
                if not values:
                    continue
                sd = statistics.stdev(values) if len(values) > 1 else 0.0
                fh.write(f"{timestep},{tag},{statistics.mean(values)!r},"
                         f"{sd!r},{len(values)}\n")

    with open(os.path.join(args.out, "welch_tests.csv"), "w",
              newline="") as fh:
        fh.write("timestep,comparison,t_statistic,degrees_of_freedom,"
                 "p_value,degenerate\n")
        for timestep in _TIMESTEP_ORDER:
            for name, left, right in _COMPARISONS:
                a = scores.get((timestep, left))
                b = scores.get((timestep, right))
                if not a or not b:
                    continue
                try:
                    result = stats.welch_t_test(a, b, tails=args.tail)
                except (InsufficientData, ZeroVariance) as exc:
                    _warn(f"{timestep} {name}: {exc}")
                    continue
                fh.write(f"{timestep},{name},{result.statistic!r},"
                         f"{result.df!r},{result.p_value!r},"
                         f"{str(result.degenerate).lower()}\n")


def cmd_cancel_test(args) -> None:
    instances = rates.read_cancels_csv(args.cancels)
    tested = [inst for inst in instances
              if inst["granularity"] in (Granularity.WEEKLY,
                                         Granularity.MONTHLY)]
    tested.sort(key=_instance_sort_key)
    rows = []
    for inst in tested:
        label = f"{inst['bucket_key']} {inst['side'].name.lower()}"
        try:
            if any(r is None for r in inst["mean_ratio"]):
                absent = [i + 1 for i, r in enumerate(inst["mean_ratio"])
                          if r is None]
                raise MissingTicks(f"no cancels in ticks {absent}")
            result = stats.chi_square_uniformity(inst["mean_ratio"])
        except (MissingTicks, AllZero) as exc:
            _warn(f"skipping {label}: {exc}")
            continue
        rows.append((inst["bucket_key"], inst["side"].name.lower(),
                     result.statistic, result.p_value))
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "chi_square.csv"), "w",
              newline="") as fh:
        fh.write("bucket_key,side,statistic,p_value\n")
        for bucket, side, statistic, p_value in rows:
            fh.write(f"{bucket},{side},{statistic!r},{p_value!r}\n")


# --- wiring ---

class _Parser(argparse.ArgumentParser):
    """argparse flavor whose usage errors exit 1, not 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lobfit",
                     description="Order-flow arrival and cancellation "
                                 "analysis pipeline.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a seeded synthetic stream")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--days", type=int, default=40)
    p.add_argument("--orders-per-day", type=int, default=3000)
    p.add_argument("--buy-model", default="dw:0.8,1.2")
    p.add_argument("--sell-model", default="dw:0.75,1.4")
    p.add_argument("--cancel-probability", type=float, default=0.08)
    p.add_argument("--cancel-style", choices=("full", "fraction"),
                   default="full")
    p.add_argument("--tick-size", type=int, default=1)
    p.add_argument("--mid", type=int, default=10_000)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("rates", help="extract arrival and cancel tallies")
    p.add_argument("inputs", nargs="+", metavar="STREAM")
    p.add_argument("--granularity", default="daily,weekly,monthly,hourly")
    p.add_argument("--reference", choices=("same", "opposite"),
                   default="same")
    p.add_argument("--side", choices=("buy", "sell", "both"), default="both")
    p.add_argument("--tick-size", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("fit", help="fit model families to rate instances")
    p.add_argument("rates", metavar="RATES_CSV")
    p.add_argument("--families", default="geo,dw,bb,exp,pow")
    p.add_argument("--truncated-likelihood", action="store_true")
    p.add_argument("--tail", choices=("one", "two"), default="two")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("cancel-test",
                       help="chi-square uniformity of cancellation ratios")
    p.add_argument("cancels", metavar="CANCELS_CSV")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_cancel_test)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
    except (LobfitError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # last-resort guard: anything else is a bug
        print(f"internal error: {exc!r}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
