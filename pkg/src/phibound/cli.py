"""Command-line front end.

Exit codes: 0 success, 1 a verification found a counterexample, 2 an
internal consistency check failed, 3 bad usage or out-of-range input.
Data goes to stdout or the named files; timings and warnings go to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path

from . import bounds, farey, modpoly, sumtheory

EXIT_OK = 0
EXIT_COUNTEREXAMPLE = 1
EXIT_INCONSISTENT = 2
EXIT_USAGE = 3

TABLE_HARD_MAX = 199
FAREY_N_MAX = 500
LATTICE_L_MAX = 503
IDENTITY_TOL = 1e-10


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _log(msg):
    print(msg, file=sys.stderr, flush=True)


def _out(text):
    sys.stdout.write(text)
    sys.stdout.flush()


def _map(fn, items, jobs):
    """Ordered map, optionally across worker processes."""
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _fmt(x):
    return f"{x:.2f}"


# ---------------------------------------------------------------------------
# phi
# ---------------------------------------------------------------------------

def cmd_phi_compute(args):
    l = args.l
    if not modpoly.is_prime(l):
        raise UsageError(f"l={l} is not prime")
    if l > args.max_l:
        raise UsageError(f"l={l} exceeds the configured maximum {args.max_l}")
    t0 = time.perf_counter()
    p = modpoly.load_or_compute(l, args.cache_dir)
    text = modpoly.serialize(p)
    if args.out:
        modpoly.write_atomic(args.out, text)
    else:
        _out(text)
    _log(f"phi_{l}: {len(p)} stored coefficients, {p.max_abs().bit_length()} bits, "
         f"{time.perf_counter() - t0:.1f}s")
    return EXIT_OK


def _table_row(args):
    l, directory = args
    p = modpoly.load_or_compute(l, directory)
    return modpoly.height(p)


def table_csv(reports, extended=False):
    head = "l,h2,c_l,r_l"
    if extended:
        head += ",h_exact,c_l_exact,r_l_exact"
    lines = [head]
    for r in reports:
        c, rr = modpoly.table_stats(r)
        row = f"{r.l},{r.h2},{_fmt(c)},{_fmt(rr)}"
        if extended:
            ce, re_ = modpoly.table_stats(r, "exact")
            row += f",{r.h:.6f},{_fmt(ce)},{_fmt(re_)}"
        lines.append(row)
    return "\n".join(lines) + "\n"


def cmd_phi_table(args):
    n = args.max_l
    if n > TABLE_HARD_MAX:
        raise UsageError(f"--max-l is limited to {TABLE_HARD_MAX}")
    if n > modpoly.DEFAULT_MAX_L:
        if not args.allow_large:
            raise UsageError(f"--max-l above {modpoly.DEFAULT_MAX_L} needs --allow-large")
        _log(f"warning: levels above {modpoly.DEFAULT_MAX_L} take minutes to hours each")
    ls = [l for l in range(2, n + 1) if modpoly.is_prime(l)]
    t0 = time.perf_counter()
    reports = _map(_table_row, [(l, args.cache_dir) for l in ls], args.jobs)
    _out(table_csv(reports, args.extended))
    _log(f"table: {len(ls)} rows in {time.perf_counter() - t0:.1f}s")
    return EXIT_OK


# ---------------------------------------------------------------------------
# bounds
# ---------------------------------------------------------------------------

def _parse_range(text):
    try:
        a, b = text.split("..")
        a, b = int(a), int(b)
    except ValueError:
        raise UsageError(f"range {text!r} is not of the form a..b") from None
    if a < 2 or b < a:
        raise UsageError(f"range {text!r} must satisfy 2 <= a <= b")
    return a, b


def bounds_line(l, h_exact=None):
    rec = bounds.bounds_record(l, h_exact)
    rec["breakdowns"] = {"B1": asdict(bounds.b1(l))}
    if l >= 3600:
        rec["breakdowns"]["B2"] = asdict(bounds.b2(l))
    return json.dumps(rec, sort_keys=True)


def cmd_bounds_eval(args):
    if args.l is not None:
        if not (args.all or modpoly.is_prime(args.l)):
            raise UsageError(f"l={args.l} is not prime (use --all to allow it)")
        if args.l < 2:
            raise UsageError("l must be >= 2")
        ls = [args.l]
    else:
        a, b = _parse_range(args.range)
        ls = [l for l in range(a, b + 1) if args.all or modpoly.is_prime(l)]
    for l in ls:
        h = None
        if not args.no_exact and modpoly.is_prime(l) and l <= modpoly.DEFAULT_MAX_L:
            h = modpoly.height(modpoly.load_or_compute(l, args.cache_dir)).h
        _out(bounds_line(l, h) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def _simple_record(name, ok, **extra):
    return {"lemma": name, "status": "pass" if ok else "fail", "extra": extra}


def run_appendix(x_max=10 ** 5):
    """All summatory-function sweeps; list of JSON-ready records."""
    recs = []
    t0 = time.perf_counter()
    big = sumtheory.build_sieve(5 * 10 ** 6)
    _log(f"sieve to 5e6: {time.perf_counter() - t0:.1f}s")
    reps = sumtheory.verify_corollary10(big)
    reps += sumtheory.verify_theorem9(big)
    reps += sumtheory.verify_harmonic_lemma(x_max, big)
    reps.append(sumtheory.verify_totient_over_square(x_max, big))
    reps.append(sumtheory.verify_totient_sum(x_max, big))
    reps += sumtheory.verify_quartiles(300, big)
    reps += sumtheory.verify_mobius_sums(max(10 ** 7, x_max))
    recs.extend(r.record() for r in reps)
    _log(f"appendix sweeps: {time.perf_counter() - t0:.1f}s")
    return recs


def run_farey(n_max=FAREY_N_MAX, l_max=LATTICE_L_MAX):
    t0 = time.perf_counter()
    bad = farey.verify_partitions(n_max)
    recs = [_simple_record("partition_invariants", not bad, n_max=n_max,
                           failing_orders=sorted(bad)[:20])]
    bad = farey.verify_lattice_points(l_max)
    recs.append(_simple_record("lattice_point_classification", not bad, l_max=l_max,
                               failing_levels=sorted(bad)[:20]))
    n0 = farey.kn_bound_threshold(n_max)
    recs.append(_simple_record("totient_count_bound", n0 <= 2, n_max=n_max, holds_from=n0))
    _log(f"farey checks: {time.perf_counter() - t0:.1f}s")
    return recs


def run_identities(trunc=50):
    worst = 0.0
    for t in (1.0, 1.05, 1.1, 1.15, 1.2, 1.25):
        for k in range(16):
            worst = max(worst, bounds.poisson_identity_residual(t, k / 16, trunc))
    recs = [_simple_record("poisson_identity", worst < IDENTITY_TOL, worst_residual=worst,
                           trunc=trunc)]
    for name, fn in (("coth_identity", bounds.coth_identity_residual),
                     ("tanh_identity", bounds.tanh_identity_residual)):
        w = max(fn(t, trunc) for t in (0.5, 1.0, 1.1, 1.2, 1.254, 2.0))
        recs.append(_simple_record(name, w < IDENTITY_TOL, worst_residual=w, trunc=trunc))
    mism = 0
    for k in range(1, 201):
        for n in range(-200, 201):
            re_, im = bounds.ramanujan_ck_bruteforce(k, n)
            c = bounds.ramanujan_ck(k, n)
            if round(re_) != c or abs(re_ - c) > 1e-6 or abs(im) > 1e-6:
                mism += 1
    recs.append(_simple_record("ramanujan_sums", mism == 0, mismatches=mism, k_max=200, n_max=200))
    return recs


def _summary(rec):
    s = "PASS" if rec["status"] == "pass" else "FAIL"
    line = f"{s} {rec['lemma']}"
    if "worst_margin" in rec:
        line += f" worst_margin={rec['worst_margin']:.6g} at x={rec['worst_x']}"
    extra = rec.get("extra") or {}
    for key in ("holds_from", "worst_residual", "mismatches"):
        if key in extra:
            line += f" {key}={extra[key]}"
    return line


def cmd_verify(args):
    which = args.target
    recs = []
    if which in ("appendix", "all"):
        recs += run_appendix(args.xmax)
    if which in ("farey", "all"):
        recs += run_farey()
    if which in ("identities", "all"):
        recs += run_identities()
    for r in recs:
        _out(_summary(r) + "\n")
    if args.report:
        text = "".join(json.dumps(r, sort_keys=True) + "\n" for r in recs)
        modpoly.write_atomic(args.report, text)
    return EXIT_OK if all(r["status"] == "pass" for r in recs) else EXIT_COUNTEREXAMPLE


# ---------------------------------------------------------------------------
# farey
# ---------------------------------------------------------------------------

def cmd_farey_dump(args):
    if args.N < 1:
        raise UsageError("N must be >= 1")
    _out(farey.dump_partition(args.N))
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser():
    p = _Parser(prog="phibound", description="Modular polynomials and their height bounds.")
    p.add_argument("--cache-dir", type=Path, default=None,
                   help="polynomial cache (default: $CACHE_DIR or ~/.cache/phibound)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for per-l work")
    sub = p.add_subparsers(dest="group", required=True, parser_class=_Parser)

    phi = sub.add_parser("phi", help="modular polynomials")
    phisub = phi.add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    c = phisub.add_parser("compute", help="write Phi_l in canonical text form")
    c.add_argument("-l", type=int, required=True)
    c.add_argument("--out", type=Path)
    c.add_argument("--max-l", type=int, default=modpoly.DEFAULT_MAX_L)
    c.set_defaults(func=cmd_phi_compute)
    t = phisub.add_parser("table", help="height statistics as CSV")
    t.add_argument("--max-l", type=int, required=True)
    t.add_argument("--format", choices=["csv"], default="csv")
    t.add_argument("--extended", action="store_true", help="add exact-height columns")
    t.add_argument("--allow-large", action="store_true",
                   help=f"permit --max-l up to {TABLE_HARD_MAX}")
    t.set_defaults(func=cmd_phi_table)

    b = sub.add_parser("bounds", help="closed-form height bounds")
    bsub = b.add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    e = bsub.add_parser("eval", help="bounds as JSON lines")
    g = e.add_mutually_exclusive_group(required=True)
    g.add_argument("-l", type=int)
    g.add_argument("--range")
    e.add_argument("--all", action="store_true", help="include composite l")
    e.add_argument("--no-exact", action="store_true", help="skip exact heights")
    e.set_defaults(func=cmd_bounds_eval)

    v = sub.add_parser("verify", help="machine verification sweeps")
    v.add_argument("target", choices=["appendix", "farey", "identities", "all"])
    v.add_argument("--xmax", type=int, default=10 ** 5)
    v.add_argument("--report", type=Path, help="write JSON-lines detail here")
    v.set_defaults(func=cmd_verify)

    f = sub.add_parser("farey", help="Farey partitions")
    fsub = f.add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    d = fsub.add_parser("dump", help="print the order-N partition")
    d.add_argument("-N", type=int, required=True)
    d.set_defaults(func=cmd_farey_dump)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.cache_dir is None:
        args.cache_dir = modpoly.cache_dir()
    try:
        return args.func(args)
    except UsageError as exc:
        _log(f"error: {exc}")
        return EXIT_USAGE
    except modpoly.InconsistentSystemError as exc:
        _log(f"internal consistency failure: {exc}")
        return EXIT_INCONSISTENT
    except BrokenPipeError:
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
