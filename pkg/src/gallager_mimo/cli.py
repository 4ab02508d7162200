"""Command-line front end: ``gallager-mimo {exponent,dispersion,density,mc,figures}``.

Exit codes: 0 success, 1 bad arguments, 2 some points failed numerically.
"""
import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import exponent as ex
from . import rmt_core as rmt
from .errors import InvalidParams, NoConvergence
from .finite_n_mc import McConfig, estimate_en
from .rmt_core import ChannelParams
from .saddlepoint import MODES, PEAK, AVERAGE, SPHERE, pstar_density, r1, rho_of_rate, solve_saddle

THREADS_ENV = "GALLAGER_MIMO_THREADS"
FIG_BETA, FIG_SIGMA2 = 3.0, 0.05
LN2 = math.log(2.0)


class ArgumentError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


# -- formatting --------------------------------------------------------------

def fmt(value):
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".12g")
    return str(value)


def write_csv(header, rows, stream):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])


def write_json(obj, stream):
    stream.write(json.dumps(obj, indent=2, ensure_ascii=False))
    stream.write("\n")


CURVE_HEADER = ["r", "E", "rho", "s", "a", "b", "regime", "mode", "status"]


def curve_rows(table, scale=1.0):
    for p in table.rows:
        yield [p.r / scale, p.e / scale, p.rho, p.s, p.a, p.b, p.regime, p.mode, p.status]


def curve_to_csv(table, stream, scale=1.0):
    write_csv(CURVE_HEADER, curve_rows(table, scale), stream)


def curve_from_csv(stream, params, mode):
    rows = []
    for rec in csv.DictReader(stream):
        rows.append(ex.ExponentPoint(float(rec["r"]), float(rec["E"]), float(rec["rho"]),
                                     float(rec["s"]), float(rec["a"]), float(rec["b"]),
                                     rec["mode"], rec["regime"], rec["status"]))
    return ex.CurveTable(params, mode, rows)


def _emit(args, header, rows, obj=None):
    out = io.StringIO()
    if args.format == "json":
        if obj is None:
            obj = [dict(zip(header, (float(v) if isinstance(v, (float, np.floating)) else v
                                     for v in row))) for row in rows]
        write_json(obj, out)
    else:
        write_csv(header, rows, out)
    text = out.getvalue()
    if args.output in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(args.output).write_text(text, encoding="utf-8", newline="\n")


# -- argument helpers --------------------------------------------------------

def parse_grid(text):
    parts = text.split(":")
    if len(parts) != 3:
        raise ArgumentError(f"grid must be min:max:count, got {text!r}")
    lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    if count < 1:
        raise ArgumentError("grid count must be >= 1")
    if count > 1 and not lo < hi:
        raise ArgumentError("grid needs min < max when count > 1")
    return list(np.linspace(lo, hi, count)) if count > 1 else [lo]


def parse_q(text):
    if text.lower() in ("inf", "infinity"):
        return math.inf
    q = int(text)
    if q < 1:
        raise argparse.ArgumentTypeError("q must be >= 1 or 'inf'")
    return q


def _params(args, q=None):
    if args.sigma2 is not None:
        sigma2 = args.sigma2
    else:
        sigma2 = 10.0 ** (-(args.snr_db if args.snr_db is not None else 10 * math.log10(20.0)) / 10.0)
    q = args.q if q is None else q
    return ChannelParams(args.beta, sigma2, args.alpha, 1 if math.isinf(q) else q)


def _scale(args):
    return LN2 if args.units == "bits" else 1.0


def _default_workers():
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _add_channel(p, alpha=True):
    p.add_argument("--beta", type=float, default=FIG_BETA, help="receive/transmit antenna ratio K/N")
    snr = p.add_mutually_exclusive_group()
    snr.add_argument("--snr-db", type=float, help="SNR in dB; sigma2 = 10^(-SNR/10)")
    snr.add_argument("--sigma2", type=float, help="noise power (linear); default 0.05")
    if alpha:
        p.add_argument("--alpha", type=float, default=2.0, help="blocklength ratio T/N")
    p.add_argument("--q", type=parse_q, default=1, help="fading blocks per codeword, or 'inf'")
    p.add_argument("--units", choices=("nats", "bits"), default="nats")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output", "-o", help="output file (default: stdout)")


def build_parser():
    parser = _Parser(prog="gallager-mimo", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("exponent", help="E(r) on a rate grid")
    _add_channel(p)
    p.add_argument("--mode", choices=MODES, default=PEAK)
    grid = p.add_mutually_exclusive_group()
    grid.add_argument("--r-grid", help="min:max:count (in --units)")
    grid.add_argument("--rates", type=float, nargs="+", help="explicit rates (in --units)")
    p.add_argument("--workers", type=int, default=None)

    p = sub.add_parser("dispersion", help="dispersion table over alpha")
    _add_channel(p, alpha=False)
    p.add_argument("--alpha-grid", default="1:40:40", help="min:max:count")

    p = sub.add_parser("density", help="optimal eigenvalue density p* next to the MP law")
    _add_channel(p)
    p.add_argument("--mode", choices=(PEAK, AVERAGE), default=PEAK)
    which = p.add_mutually_exclusive_group(required=True)
    which.add_argument("--rho", type=float)
    which.add_argument("--rate", type=float, help="rate (in --units)")
    p.add_argument("--points", type=int, default=1000, help="grid points per support")

    p = sub.add_parser("mc", help="finite-N Monte Carlo estimate of E_N(r)")
    _add_channel(p)
    p.add_argument("--n", type=int, required=True, help="transmit antennas N")
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    rate = p.add_mutually_exclusive_group()
    rate.add_argument("--rate", type=float, help="rate (in --units)")
    rate.add_argument("--rate-fraction", type=float, default=0.6,
                      help="rate as a fraction of the ergodic rate")
    p.add_argument("--workers", type=int, default=None)

    p = sub.add_parser("figures", help="write fig1.csv, fig2.csv, fig3.csv")
    p.add_argument("--outdir", default="figures")
    p.add_argument("--points", type=int, default=60)
    return parser


# -- commands ----------------------------------------------------------------

def default_grid(params):
    r_erg = rmt.ergodic_rate(params)
    return list(np.linspace(0.2 * r_erg, 1.02 * r_erg, 60))


def cmd_exponent(args):
    params = _params(args)
    scale = _scale(args)
    if args.r_grid:
        grid = [r * scale for r in parse_grid(args.r_grid)]
    elif args.rates:
        grid = sorted(r * scale for r in args.rates)
    else:
        grid = default_grid(params)
    workers = args.workers or _default_workers()
    table = ex.sweep(grid, params, args.mode, workers=workers, q_infinity=math.isinf(args.q))
    _emit(args, CURVE_HEADER, list(curve_rows(table, scale)))
    return 2 if any(p.status.startswith("failed") for p in table.rows) else 0


def dispersion_rows(params, alphas):
    v_inf = rmt.dispersion_vinf(params)
    for alpha in alphas:
        p = params.with_(alpha=alpha, q_blocks=1)
        v_a = ex.v_alpha(p)
        theta_minus, _ = rmt.theta_bounds(p)
        # theta_plus = alpha v_alpha by definition
        yield [alpha, v_inf, v_a, theta_minus / alpha, v_a]


DISPERSION_HEADER = ["alpha", "v_inf", "v_alpha", "theta_minus_over_alpha", "theta_plus_over_alpha"]


def cmd_dispersion(args):
    args.alpha = 1.0
    params = _params(args, q=1)
    alphas = parse_grid(args.alpha_grid)
    if min(alphas) <= 0.0:
        raise ArgumentError("alpha grid must be positive")
    _emit(args, DISPERSION_HEADER, list(dispersion_rows(params, alphas)))
    return 0


def _clustered(lo, hi, count):
    theta = np.linspace(0.0, 0.5 * math.pi, count)
    x = lo + (hi - lo) * np.sin(theta) ** 2
    x[0], x[-1] = lo, hi
    return x


def density_rows(sol, params, points=1000):
    sup = rmt.mp_support(params)
    xs = np.union1d(_clustered(sol.a, sol.b, points), _clustered(sup.a0, sup.b0, points))
    for x in xs:
        yield [float(x), pstar_density(float(x), sol), rmt.mp_density(float(x), params)]


def cmd_density(args):
    params = _params(args)
    if math.isinf(args.q):
        raise ArgumentError("density needs a finite --q")
    if args.rho is not None:
        if args.rho < 0:
            raise ArgumentError("rho must be >= 0")
        sol = solve_saddle(args.rho, params, args.mode)
    else:
        _, sol = rho_of_rate(args.rate * _scale(args), params, args.mode, return_solution=True)
    _emit(args, ["x", "pstar", "mp"], list(density_rows(sol, params, args.points)))
    return 0


def mc_report(params, n, samples, seed, r, workers=1):
    est = estimate_en(McConfig(n, params, r, samples, seed, workers))
    asym = ex.gallager_exponent(r, params).e
    gap = abs(est.e_n - asym) / asym if asym > 0 else float("nan")
    return {"e_n": float(est.e_n), "stderr": float(est.stderr), "asymptotic_e": float(asym),
            "relative_gap": float(gap), "ess": float(est.ess), "n": n, "samples": samples,
            "seed": seed}


def cmd_mc(args):
    params = _params(args)
    if math.isinf(args.q):
        raise ArgumentError("mc needs a finite --q")
    r_erg = rmt.ergodic_rate(params)
    r = args.rate * _scale(args) if args.rate is not None else args.rate_fraction * r_erg
    report = mc_report(params, args.n, args.samples, args.seed, r,
                       args.workers or _default_workers())
    if args.units == "bits":
        for key in ("e_n", "stderr", "asymptotic_e"):
            report[key] /= LN2
    args.format = "json"
    _emit(args, None, None, obj=report)
    return 0


FIG_HEADER = ["curve", "alpha", "q", "mode", "r", "E", "rho", "regime", "status"]


def _curve_block(name, table, alpha, q, rows):
    for p in table.rows:
        rows.append([name, alpha, q, p.mode, p.r, p.e, p.rho, p.regime, p.status])


def figure1(points=60):
    base = ChannelParams(FIG_BETA, FIG_SIGMA2, 2.0, 1)
    r_erg = rmt.ergodic_rate(base)
    grid = list(np.linspace(0.2 * r_erg, 1.02 * r_erg, points))
    rows, failed = [], False
    for alpha in (2.0, 5.0, 20.0):
        p = base.with_(alpha=alpha)
        table = ex.sweep(grid, p, PEAK)
        _curve_block(f"alpha={alpha:g}", table, alpha, 1, rows)
        failed |= any(pt.status.startswith("failed") for pt in table.rows)
    for mode in (AVERAGE, SPHERE):
        table = ex.sweep(grid, base, mode)
        _curve_block(f"alpha=2 {mode}", table, 2.0, 1, rows)
        failed |= any(pt.status.startswith("failed") for pt in table.rows)
    v_inf = rmt.dispersion_vinf(base)
    for r in grid:
        e = (r - r_erg) ** 2 / (2.0 * v_inf) if r < r_erg else 0.0
        rows.append(["outage-quadratic", "", "", "", r, e, "", "", "ok"])
    for alpha in (2.0, 5.0, 20.0):
        p = base.with_(alpha=alpha)
        try:
            rr = r1(p)
            pt = ex.gallager_exponent(rr, p)
            rows.append([f"r1 alpha={alpha:g}", alpha, 1, PEAK, rr, pt.e, pt.rho, "r1", "ok"])
        except NoConvergence as exc:
            failed = True
            rows.append([f"r1 alpha={alpha:g}", alpha, 1, PEAK, "", "", "", "r1", f"failed: {exc}"])
    return rows, failed


def figure3(points=60):
    base = ChannelParams(FIG_BETA, FIG_SIGMA2, 20.0, 1)
    r_erg = rmt.ergodic_rate(base)
    grid = list(np.linspace(0.2 * r_erg, 1.02 * r_erg, points))
    rows, failed = [], False
    for q in (1, 2, 4, 8, math.inf):
        if math.isinf(q):
            table = ex.sweep(grid, base, PEAK, q_infinity=True)
            rr = ex.rbar_infinity(1.0, base)
            e1 = ex.exponent_q_infinity(rr, base)
        else:
            p = base.with_(q_blocks=q)
            table = ex.sweep(grid, p, PEAK)
            rr = r1(p)
            e1 = ex.gallager_exponent(rr, p)
        label = "inf" if math.isinf(q) else q
        _curve_block(f"q={label}", table, 20.0, label, rows)
        rows.append([f"r1 q={label}", 20.0, label, PEAK, rr, e1.e, e1.rho, "r1", "ok"])
        failed |= any(pt.status.startswith("failed") for pt in table.rows)
    return rows, failed


def cmd_figures(args):
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    status = 0
    rows, failed = figure1(args.points)
    with open(out / "fig1.csv", "w", encoding="utf-8", newline="") as fh:
        write_csv(FIG_HEADER, rows, fh)
    status = 2 if failed else status
    base = ChannelParams(FIG_BETA, FIG_SIGMA2, 1.0, 1)
    with open(out / "fig2.csv", "w", encoding="utf-8", newline="") as fh:
        write_csv(DISPERSION_HEADER, dispersion_rows(base, parse_grid("1:40:40")), fh)
    rows, failed = figure3(args.points)
    with open(out / "fig3.csv", "w", encoding="utf-8", newline="") as fh:
        write_csv(FIG_HEADER, rows, fh)
    return 2 if failed else status


COMMANDS = {"exponent": cmd_exponent, "dispersion": cmd_dispersion, "density": cmd_density,
            "mc": cmd_mc, "figures": cmd_figures}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    try:
        return COMMANDS[args.command](args)
    except (ArgumentError, InvalidParams) as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"gallager-mimo: error: {exc}\n")
        return 1
    except NoConvergence as exc:
        sys.stderr.write(f"gallager-mimo: numerical failure: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
