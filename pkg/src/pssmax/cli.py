"""Batch command-line front-end.

Subcommands: ``eval`` (tabulate any transform over grids), ``figure1``
(the relative-jump curve of the built-in unit-drift model as CSV),
``verify`` (analytic-vs-Monte-Carlo battery), ``price`` (lookback payoff).

Exit codes: 0 ok, 2 input/schema error, 3 numerical failure,
4 verification failure.  Identical invocations produce byte-identical
output (simulation is seeded; rendering is fixed at 15 significant digits).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import factorization as fz
from . import models
from .errors import NoConvergence, PssmaxError, SchemaError
from .models import (
    ExponentialNegative,
    JumpSpec,
    LevyModel,
    PssmpModel,
    atom_at_maximum,
    first_passage_transform,
)
from .montecarlo import Functional, estimate
from .verify import run_verification

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3
EXIT_VERIFY = 4


def parse_grid(text: str) -> list[float]:
    """Grid syntax: 'a:b:step' (inclusive endpoints within rounding) or a
    comma-separated list."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise SchemaError(f"bad grid {text!r}: expected a:b:step")
        a, b, step = (float(p) for p in parts)
        if step <= 0 or b < a:
            raise SchemaError(f"bad grid {text!r}: need b >= a and step > 0")
        count = int(round((b - a) / step))
        vals = [a + i * step for i in range(count + 1)]
        if vals[-1] > b + 1e-12 * max(1.0, abs(b)):
            vals.pop()
        return vals
    try:
        vals = [float(p) for p in text.split(",") if p.strip()]
    except ValueError as exc:
        raise SchemaError(f"bad grid {text!r}: {exc}") from exc
    if not vals:
        raise SchemaError(f"bad grid {text!r}: empty")
    return vals


def _check_grid(name: str, vals: list[float], positive: bool = True) -> list[float]:
    for v in vals:
        if not np.isfinite(v):
            raise SchemaError(f"grid {name} must be finite")
        if positive and v <= 0:
            raise SchemaError(f"grid {name} must be positive")
        if not positive and v < 0:
            raise SchemaError(f"grid {name} must be nonnegative")
    return vals


def figure_model() -> PssmpModel:
    """The built-in unit-drift / unit-intensity / unit-rate jump model."""
    return PssmpModel(
        levy=LevyModel(sigma2=0.0, drift=1.0, jumps=JumpSpec(1.0, ExponentialNegative(1.0))),
        p=1.0,
        alpha=2.0,
    )


def _emit(rows: list[dict], columns: list[str], args) -> None:
    if args.format == "json":
        text = json.dumps(rows, indent=2) + "\n"
    else:
        lines = [",".join(columns)]
        for row in rows:
            cells = []
            for col in columns:
                v = row[col]
                cells.append(f"{v:.15g}" if isinstance(v, float) else str(v))
            lines.append(",".join(cells))
        text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- eval -------------------------------------------------------------------

# op name -> (required grids, value function)
def _op_table():
    return {
        "psi": (("lam",), lambda m, r: m.levy.psi(r["lam"])),
        "psi-prime": (("lam",), lambda m, r: m.levy.psi_prime(r["lam"])),
        "phi": (("q",), lambda m, r: m.levy.phi(r["q"])),
        "first-passage": (("x", "a", "q"),
                          lambda m, r: first_passage_transform(m.levy, r["x"], r["a"], r["q"])),
        "atom": ((), lambda m, r: atom_at_maximum(m)),
        "confined-absorption": (("y", "d", "beta"),
                                lambda m, r: fz.confined_absorption_transform(m, r["y"], r["d"], r["beta"])),
        "residual-iv": (("y", "beta"),
                        lambda m, r: float(fz.residual_transform_iv(m, r["y"], r["beta"]))),
        "upcross": (("y", "d", "gamma"),
                    lambda m, r: fz.upcross_transform(m, r["y"], r["d"], r["gamma"])),
        "peak-time": (("y", "sup", "gamma"),
                      lambda m, r: float(fz.peak_time_transform(m, r["y"], r["sup"], r["gamma"]))),
        "residual": (("sup", "j", "beta"),
                     lambda m, r: fz.residual_time_transform(m, r["sup"], r["j"], r["beta"])),
        "absorption-given": (("y", "sup", "j", "beta"),
                             lambda m, r: fz.absorption_transform_given(m, r["y"], r["sup"], r["j"], r["beta"])),
        "sup-moment": (("y", "k", "gamma"),
                       lambda m, r: fz.sup_moment_transform(m, r["y"], r["k"], r["gamma"])),
    }


_GRID_FLAGS = {
    "lam": ("--lam", False),
    "q": ("--q", False),
    "x": ("--x", False),
    "a": ("--a", False),
    "y": ("--y", True),
    "d": ("--d", True),
    "sup": ("--sup", True),
    "j": ("--j", True),
    "beta": ("--beta", False),
    "gamma": ("--gamma", False),
    "k": ("--k", False),
}


def cmd_eval(args) -> int:
    model = models.load_model(args.model) if args.model else figure_model()
    if args.op == "absorption":
        return _eval_absorption(model, args)
    table = _op_table()
    if args.op not in table:
        raise SchemaError(f"unknown op {args.op!r}; choose from "
                          f"{sorted(table) + ['absorption']}")
    needed, fn = table[args.op]
    grids = {}
    for name in needed:
        raw = getattr(args, name if name != "lam" else "lam")
        if raw is None:
            raise SchemaError(f"op {args.op!r} needs --{name}")
        positive = _GRID_FLAGS[name][1]
        grids[name] = _check_grid(name, parse_grid(raw), positive)
    rows = []
    points = [{}]
    for name in needed:
        points = [dict(pt, **{name: v}) for pt in points for v in grids[name]]
    for pt in points:
        rows.append(dict(pt, value=float(fn(model, pt))))
    _emit(rows, list(needed) + ["value"], args)
    return EXIT_OK


def _eval_absorption(model, args) -> int:
    if args.y is None or args.beta is None:
        raise SchemaError("op 'absorption' needs --y and --beta")
    ys = _check_grid("y", parse_grid(args.y), True)
    betas = _check_grid("beta", parse_grid(args.beta), False)
    method = args.method
    rows = []
    max_gap = 0.0
    for y in ys:
        for beta in betas:
            if method == "both":
                ext, integ = fz.absorption_transform(model, y, beta, "both")
                gap = abs(ext - integ) / max(abs(ext), abs(integ), 1e-300)
                max_gap = max(max_gap, gap)
                rows.append({"y": y, "beta": beta, "value_extension": ext,
                             "value_integrated": integ, "rel_gap": gap})
            else:
                rows.append({"y": y, "beta": beta,
                             "value": fz.absorption_transform(model, y, beta, method)})
    if method == "both":
        _emit(rows, ["y", "beta", "value_extension", "value_integrated", "rel_gap"], args)
        print(f"max relative gap: {max_gap:.3e}", file=sys.stderr)
    else:
        _emit(rows, ["y", "beta", "value"], args)
    return EXIT_OK


# -- figure1 ----------------------------------------------------------------


def cmd_figure1(args) -> int:
    model = figure_model()
    beta = float(args.beta) if args.beta else 1.0
    if beta < 0:
        raise SchemaError("--beta must be >= 0")
    js = [round(0.005 * k, 3) for k in range(1, 200)]
    rows = [{"j": j, "value": fz.residual_time_transform(model, 1.0, j, beta)} for j in js]
    _emit(rows, ["j", "value"], args)
    return EXIT_OK


# -- verify -----------------------------------------------------------------


def cmd_verify(args) -> int:
    model = models.load_model(args.model) if args.model else figure_model()
    n = int(args.n)
    if n < 100:
        raise SchemaError("verification needs --n >= 100")
    records = run_verification(model, n=n, seed=int(args.seed), h=float(args.step))
    if args.format == "csv":
        cols = ["name", "passed", "z", "detail"]
        rows = []
        for rec in records:
            extra = {k: v for k, v in rec.items() if k not in ("name", "passed", "z")}
            rows.append({"name": rec["name"], "passed": rec["passed"],
                         "z": rec.get("z") if rec.get("z") is not None else float("nan"),
                         "detail": json.dumps(extra, sort_keys=True).replace(",", ";")})
        _emit(rows, cols, args)
    else:
        _emit(records, [], args)  # JSON path ignores columns
    ok = all(rec["passed"] for rec in records)
    return EXIT_OK if ok else EXIT_VERIFY


# -- price ------------------------------------------------------------------


def _payoff_from_args(args):
    kind = args.payoff
    if kind == "constant":
        return fz.ConstantPayoff(float(args.value))
    if kind == "power":
        return fz.PowerPayoff(float(args.k_power))
    if kind == "call":
        if args.strike is None:
            raise SchemaError("call payoff needs --strike")
        return fz.CallPayoff(float(args.strike))
    if kind == "indicator":
        if args.level is None:
            raise SchemaError("indicator payoff needs --level")
        return fz.IndicatorPayoff(float(args.level))
    raise SchemaError(f"unknown payoff {kind!r}")


def cmd_price(args) -> int:
    model = models.load_model(args.model) if args.model else figure_model()
    payoff = _payoff_from_args(args)
    y = float(args.y0)
    r = float(args.rate)
    price = fz.lookback_price(model, y, r, payoff)
    row = {"y": y, "rate": r, "payoff": args.payoff, "price": price}
    if args.mc:
        n = int(args.n)
        if n < 100:
            raise SchemaError("Monte Carlo cross-check needs --n >= 100")
        fn = Functional.product(
            Functional.exp_absorption(r),
            Functional.of_sup(payoff, f"payoff({args.payoff})"),
        )
        rep = estimate(model, y, fn, n, int(args.seed), h=float(args.step), analytic=price)
        row.update({"mc_estimate": rep.estimate, "mc_stderr": rep.stderr, "z": rep.z,
                    "n": n, "seed": int(args.seed)})
    _emit([row], list(row.keys()), args)
    return EXIT_OK


# -- entry point -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pssmax",
        description="Transforms at the maximum of an absorbed self-similar process, "
                    "with a simulation oracle.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--model",
                       help="model file (JSON; see README for the schema); "
                            "defaults to the built-in unit-drift jump model")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("eval", help="tabulate a transform over grids")
    add_common(p)
    p.add_argument("--op", required=True, help="operation name (see README)")
    p.add_argument("--method", choices=("extension", "integrated", "both"),
                   default="extension", help="route for op 'absorption'")
    for name, (flag, _) in _GRID_FLAGS.items():
        p.add_argument(flag, help=f"grid for {name} ('a:b:step' or comma list)")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("figure1", help="relative-jump curve of the built-in model (CSV)")
    p.add_argument("--beta", default="1.0", help="decay rate of the curve (default 1)")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(fn=cmd_figure1)

    p = sub.add_parser("verify", help="run the analytic-vs-MC battery")
    add_common(p)
    p.add_argument("--n", default="200000", help="replications, >= 100 (default: 200000)")
    p.add_argument("--seed", default="1", help="base seed (default: 1)")
    p.add_argument("--step", default="1e-3", help="Euler step for infinite variation (default: 1e-3)")
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("price", help="price a lookback payoff on the maximum")
    add_common(p)
    p.add_argument("--payoff", choices=("constant", "power", "call", "indicator"),
                   default="call")
    p.add_argument("--strike", help="strike for the call payoff")
    p.add_argument("--level", help="level for the indicator payoff")
    p.add_argument("--value", default="1.0", help="value for the constant payoff")
    p.add_argument("--k-power", default="1.0", help="exponent for the power payoff")
    p.add_argument("--rate", default="0.0", help="discount rate (default: 0)")
    p.add_argument("--y0", default="1.0", help="start level (default: 1)")
    p.add_argument("--mc", action="store_true", help="add a Monte Carlo cross-estimate")
    p.add_argument("--n", default="100000", help="replications for --mc (default: 100000)")
    p.add_argument("--seed", default="1", help="base seed (default: 1)")
    p.add_argument("--step", default="1e-3", help="Euler step (default: 1e-3)")
    p.set_defaults(fn=cmd_price)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (SchemaError, models.ModelError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except FileNotFoundError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NoConvergence as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except PssmaxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
