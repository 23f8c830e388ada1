"""Command-line front end.

Verbs: ``exponent``, ``rd``, ``renyi``, ``bounds``, ``oracle``, ``sweep``.
All randomness is seeded (``--seed``, default 0); output and CSV records
are byte-identical across runs with the same seed.  Exit codes: 0 success
(including flagged non-convergence), 2 input error, 3 resource-cap error.
"""

import argparse
import os
import sys

import numpy as np

from .prob import Pmf, ProbabilityError, renyi_entropy
from .ratedist import rd_function
from .exponents import (
    SolverOptions,
    arikan_bounds,
    compute_exponent,
    direct_help_exponent,
)
from .oracle import (
    EXHAUSTIVE_HELPER_CAP,
    EXHAUSTIVE_ORDER_CAP,
    FiniteNInstance,
    ResourceCapError,
    best_helper_moment,
    default_message_rule,
)
from .instancefile import InstanceFormatError, load_instance

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CAP = 3

THREADS_ENV = "GUESSHELP_THREADS"


def _default_threads():
    env = os.environ.get(THREADS_ENV)
    if env is not None:
        try:
            return max(1, int(env))
        except ValueError:
            raise InstanceFormatError(
                f"environment variable {THREADS_ENV} must be an integer, got {env!r}"
            ) from None
    return os.cpu_count() or 1


def _fmt(x):
    return f"{x:.6f}"


def _csv_number(x):
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _append_csv(path, header, rows):
    """Append CSV records, writing the header only on a fresh/empty file."""
    need_header = True
    if os.path.exists(path) and os.path.getsize(path) > 0:
        with open(path, "r", encoding="utf-8") as fh:
            first = fh.readline().strip()
        need_header = first != header
    with open(path, "a", encoding="utf-8") as fh:
        if need_header:
            fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(_csv_number(v) for v in row) + "\n")


def _parse_pmf(text):
    try:
        values = [float(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise InstanceFormatError(f"--pmf entries must be numbers: {text!r}") from None
    if not values:
        raise InstanceFormatError("--pmf needs at least one entry")
    return Pmf.from_values(np.asarray(values))


def _solver_options(args):
    return SolverOptions(
        starts=args.starts,
        seed=args.seed,
        max_evaluations=args.max_evaluations,
        tolerance=args.tolerance,
        grid_mode=args.grid_mode,
        threads=args.threads if args.threads is not None else _default_threads(),
    )


def _add_instance_arg(p):
    p.add_argument("instance", help="path to an instance file")
    p.add_argument("--dump", action="store_true",
                   help="print the canonical instance serialization and exit")


def _add_solver_args(p):
    p.add_argument("--starts", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-evaluations", type=int, default=400_000,
                   dest="max_evaluations")
    p.add_argument("--tolerance", type=float, default=1e-9)
    p.add_argument("--grid-mode", action="store_true", dest="grid_mode")
    p.add_argument("--threads", type=int, default=None)


def _add_out_arg(p):
    p.add_argument("--out", default=None, help="append machine records to this CSV file")


def build_parser():
    ap = argparse.ArgumentParser(
        prog="guesshelp",
        description="Guessing exponents under a distortion budget with "
                    "rate-limited compressed side information.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("exponent", help="best exponent for one instance")
    _add_instance_arg(p)
    _add_solver_args(p)
    _add_out_arg(p)
    p.add_argument("--direct-help", action="store_true", dest="direct_help",
                   help="solve the source-observing reduction over the X marginal")

    p = sub.add_parser("rd", help="rate-distortion point of the X marginal")
    _add_instance_arg(p)
    _add_out_arg(p)

    p = sub.add_parser("renyi", help="Renyi entropy of a PMF")
    p.add_argument("--pmf", required=True)
    p.add_argument("--alpha", type=float, required=True)
    _add_out_arg(p)

    p = sub.add_parser("bounds", help="moment bounds for lossless guessing")
    p.add_argument("--pmf", required=True)
    p.add_argument("--rho", type=float, required=True)
    _add_out_arg(p)

    p = sub.add_parser("oracle", help="exact finite-blocklength trend table")
    _add_instance_arg(p)
    p.add_argument("--n-list", default="1,2", dest="n_list",
                   help="comma-separated blocklengths")
    p.add_argument("--helper-mode", default="auto",
                   choices=["auto", "exhaustive", "random-restart"])
    p.add_argument("--order-mode", default="auto",
                   choices=["auto", "exhaustive", "greedy"])
    _add_solver_args(p)
    _add_out_arg(p)

    p = sub.add_parser("sweep", help="exponent sweep over one parameter")
    _add_instance_arg(p)
    p.add_argument("--param", required=True, choices=["R", "D", "rho"])
    p.add_argument("--from", type=float, required=True, dest="start")
    p.add_argument("--to", type=float, required=True, dest="stop")
    p.add_argument("--steps", type=int, required=True)
    _add_solver_args(p)
    _add_out_arg(p)

    return ap


def _maybe_dump(args, inst):
    if getattr(args, "dump", False):
        sys.stdout.write(inst.dump())
        return True
    return False


def cmd_exponent(args):
    inst = load_instance(args.instance)
    if _maybe_dump(args, inst):
        return EXIT_OK
    spec = inst.to_problem_spec()
    opts = _solver_options(args)

    if args.direct_help:
        value = direct_help_exponent(spec.p_x(), spec.distortion, spec.rho,
                                     spec.rate, opts)
        print(f"direct-help exponent_bits = {_fmt(value)}")
        if args.out:
            _append_csv(args.out, "exponent_bits,mode,seed",
                        [[value, "direct-help", args.seed]])
        return EXIT_OK

    res = compute_exponent(spec, opts)
    cfg = res.achieving
    print(f"exponent_bits = {_fmt(res.value)}")
    print(f"rd_term = {_fmt(res.objective_breakdown['rd_term'])}  "
          f"kl_term = {_fmt(res.objective_breakdown['kl_term'])}")
    print(f"I(Y;U) = {_fmt(res.mutual_info_yu)}  (rate budget R = {_fmt(spec.rate)})")
    print("achieving Q_Y       = " + " ".join(_fmt(v) for v in cfg.q_y.probs))
    print("achieving Q_{U|Y}   =")
    for y, sym in enumerate(spec.y_alphabet.symbols):
        row = " ".join(_fmt(v) for v in cfg.q_u_given_y.rows[y])
        print(f"  y={sym}: {row}")
    print("achieving Q_{X|Y,U} =")
    nu = cfg.u_alphabet.size
    for y, sym in enumerate(spec.y_alphabet.symbols):
        for u in range(nu):
            row = " ".join(_fmt(v) for v in cfg.q_x_given_yu.rows[y * nu + u])
            print(f"  y={sym},u={cfg.u_alphabet.symbols[u]}: {row}")
    stats = res.solver_stats
    print(f"starts = {stats.starts}  evaluations = {stats.evaluations}  "
          f"spread_across_starts = {stats.spread_across_starts:.3e}  "
          f"middle_spread = {stats.middle_spread:.3e}")
    if not stats.converged:
        print("NONCONVERGED (evaluation budget exhausted; best value returned)")
    if args.out:
        _append_csv(
            args.out,
            "exponent_bits,rd_term,kl_term,mutual_info_yu,converged,seed",
            [[res.value, res.objective_breakdown["rd_term"],
              res.objective_breakdown["kl_term"], res.mutual_info_yu,
              stats.converged, args.seed]],
        )
    return EXIT_OK


def cmd_rd(args):
    inst = load_instance(args.instance)
    if _maybe_dump(args, inst):
        return EXIT_OK
    spec = inst.to_problem_spec()
    res = rd_function(spec.p_x(), spec.distortion)
    print(f"rate_bits = {_fmt(res.rate)}")
    print(f"achieved_distortion = {_fmt(res.achieved_distortion)}  "
          f"(budget D = {_fmt(spec.distortion.budget)})")
    slope = res.slope if res.slope != float("inf") else float("inf")
    print(f"slope = {slope}  iterations = {res.iterations}")
    if args.out:
        _append_csv(args.out, "rate_bits,achieved_distortion,slope,iterations",
                    [[res.rate, res.achieved_distortion, res.slope, res.iterations]])
    return EXIT_OK


def cmd_renyi(args):
    pmf = _parse_pmf(args.pmf)
    value = renyi_entropy(pmf, args.alpha)
    print(f"renyi_entropy_bits = {_fmt(value)}")
    if args.out:
        _append_csv(args.out, "alpha,renyi_bits", [[args.alpha, value]])
    return EXIT_OK


def cmd_bounds(args):
    pmf = _parse_pmf(args.pmf)
    b = arikan_bounds(pmf, args.rho)
    print(f"lower = {b['lower']!r}")
    print(f"upper = {b['upper']!r}")
    if args.out:
        _append_csv(args.out, "rho,lower,upper", [[args.rho, b["lower"], b["upper"]]])
    return EXIT_OK


def cmd_oracle(args):
    inst = load_instance(args.instance)
    if _maybe_dump(args, inst):
        return EXIT_OK
    spec = inst.to_problem_spec()
    try:
        n_list = [int(t) for t in args.n_list.replace(",", " ").split()]
    except ValueError:
        raise InstanceFormatError(f"--n-list must be integers: {args.n_list!r}") from None
    opts = _solver_options(args)
    m_rule = default_message_rule(spec.rate)

    rows = []
    for n in n_list:
        m_count = m_rule(n)
        instn = FiniteNInstance(spec, n, m_count)
        ny_seqs = spec.y_alphabet.size ** n
        nxh_seqs = spec.distortion.reconstruction_alphabet.size ** n
        helper_mode = args.helper_mode
        if helper_mode == "auto":
            helper_mode = ("exhaustive"
                           if m_count ** ny_seqs <= EXHAUSTIVE_HELPER_CAP
                           else "random-restart")
        order_mode = args.order_mode
        if order_mode == "auto":
            order_mode = ("exhaustive" if nxh_seqs <= EXHAUSTIVE_ORDER_CAP else "greedy")
        res = best_helper_moment(instn, helper_mode, order_mode, seed=opts.seed)
        rows.append([n, m_count, res.moment, res.normalized_exponent, res.exact])

    asym = compute_exponent(spec, opts)
    header = "n,messages,moment,normalized_exponent,exact,asymptotic_exponent_bits"
    full_rows = [r + [asym.value] for r in rows]
    print(header)
    for r in full_rows:
        print(",".join(_csv_number(v) for v in r))
    if args.out:
        _append_csv(args.out, header, full_rows)
    return EXIT_OK


def cmd_sweep(args):
    inst = load_instance(args.instance)
    if _maybe_dump(args, inst):
        return EXIT_OK
    if args.steps < 2:
        raise InstanceFormatError("--steps must be at least 2")
    if args.start > args.stop:
        raise InstanceFormatError("--from must not exceed --to")
    spec = inst.to_problem_spec()
    opts = _solver_options(args)
    values = np.linspace(args.start, args.stop, args.steps)

    header = "param,value,exponent_bits,converged"
    print(header)
    rows = []
    for v in values:
        v = float(v)
        if args.param == "R":
            sp = spec.with_params(rate=v)
        elif args.param == "D":
            sp = spec.with_params(budget=v)
        else:
            sp = spec.with_params(rho=v)
        res = compute_exponent(sp, opts)
        row = [args.param, v, res.value, res.solver_stats.converged]
        rows.append(row)
        print(",".join([args.param] + [_csv_number(x) for x in row[1:]]))
    if args.out:
        _append_csv(args.out, header, rows)
    return EXIT_OK


COMMANDS = {
    "exponent": cmd_exponent,
    "rd": cmd_rd,
    "renyi": cmd_renyi,
    "bounds": cmd_bounds,
    "oracle": cmd_oracle,
    "sweep": cmd_sweep,
}


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ResourceCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (InstanceFormatError, ProbabilityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
