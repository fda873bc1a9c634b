"""``mifkit`` command line.

Exit status: 0 on success, 1 on a domain error (bad input, missing file,
trivial word ...), 2 when a budget or capacity limit is hit.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import sys
import time
from pathlib import Path
from typing import List, Optional, Sequence

from . import __version__
from ._jit import set_threads
from .cayley import ClosureCapExceeded, bfs_closure, is_generating, spectral_gap
from .escape import EscapeConfig, EscapeFailed, OracleCapExceeded, escape, fx_curve, phi_witness, verify_witness
from .freeprod import WordError, parse_word
from .groups import GroupError, family, free_pair, free_reduce, load_group
from .heights import HeightConstants, HeightError, WindowExhausted, height_poly, mod_p_threshold
from .modp import CapacityError, SpecializationError, count_zeros, dkl_bound, reduce_matrix, sample_hom, specialize
from .primes import parse_prime_range
from .ring import RingCtx, RingError, parse_poly
from .seeding import U64
from .selftest import SUITES, heights_suite, nonvanishing_suite, run_all
from .ssa import SsaConfig, run_ssa
from .walk import decay_curve

log = logging.getLogger("mifkit")

CAPACITY_ERRORS = (CapacityError, ClosureCapExceeded, OracleCapExceeded, EscapeFailed, WindowExhausted)
DOMAIN_ERRORS = (
    GroupError, RingError, WordError, HeightError, SpecializationError,
    FileNotFoundError, ValueError, json.JSONDecodeError,
)


def fmt(v) -> str:
    """Locale-free number formatting for CSV cells."""
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return repr(round(v, 12))
    if isinstance(v, (tuple, list)):
        return " ".join(str(x) for x in v)
    return str(v)


def csv_text(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


# ------------------------------------------------------------------ plumbing


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v <= U64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _group(args, default):
    if args.group:
        return load_group(args.group)
    return default()


class Run:
    """Collects the result payload and writes it with its manifest."""

    def __init__(self, args):
        self.args = args
        self.t0 = time.perf_counter()
        self.summary: dict = {}

    def emit(self, payload: str):
        out = self.args.out
        if not out:
            sys.stdout.write(payload)
            return
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(payload)
        self.write_manifest(path)

    def write_manifest(self, path: Path):
        args = vars(self.args).copy()
        args.pop("func", None)
        inputs = {}
        if getattr(self.args, "group", None):
            g = Path(self.args.group)
            inputs[str(g)] = hashlib.sha256(g.read_bytes()).hexdigest()
        manifest = {
            "subcommand": self.args.command,
            "config": args,
            "seed": getattr(self.args, "seed", None),
            "version": __version__,
            "inputs": inputs,
            "result": self.summary,
            "wall_seconds": round(time.perf_counter() - self.t0, 3),
        }
        Path(str(path) + ".manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")


# ------------------------------------------------------------------ subcommands


def cmd_heights(args) -> int:
    run = Run(args)
    if args.selftest or not args.poly:
        res = heights_suite(args.samples, args.seed) + nonvanishing_suite(max(1, args.samples // 10), args.seed)
        run.summary = {"passed": all(r.passed for r in res)}
        run.emit(csv_text(["property", "samples", "violations", "max_slack"], [r.row() for r in res]))
        return 0 if all(r.passed for r in res) else 1
    names = args.vars.split(",") if args.vars else []
    ctx = RingCtx(args.N, len(names), tuple(names))
    consts = HeightConstants.for_ctx(ctx)
    rows = []
    for text in args.poly:
        r = parse_poly(text, names)
        thr = mod_p_threshold(r, consts) if not r.is_zero() else float("nan")
        rows.append([text, height_poly(r, ctx), thr])
    run.emit(csv_text(["poly", "height", "threshold"], rows))
    return 0


def cmd_zeros(args) -> int:
    run = Run(args)
    if args.vars:
        names = args.vars.split(",")
    else:
        names = [f"x{i + 1}" for i in range(args.t)]
    primes = [args.p] if args.p else parse_prime_range(args.primes)
    rows = []
    for p in primes:
        for text in args.poly:
            r = parse_poly(text, names)
            z = count_zeros(r, p)
            rows.append([text, p, z, dkl_bound(r, p), z <= dkl_bound(r, p)])
    run.emit(csv_text(["poly", "p", "zeros", "dkl_bound", "within_bound"], rows))
    return 0


def cmd_gap(args) -> int:
    run = Run(args)
    spec = _group(args, free_pair)
    rows = []
    for p in parse_prime_range(args.primes):
        if args.point is not None:
            phi = specialize(spec, p, [int(v) for v in args.point.split(",")])
        else:
            phi = sample_hom(p, spec, args.seed, p)
        gens = [reduce_matrix(spec.letter(s), phi) for s in spec.letters]
        table = bfs_closure(gens, p, args.cap)
        gen = is_generating(table)
        rep = spectral_gap(table, args.method)
        rows.append([p, table.order, gen, rep.lambda2_abs, rep.gap, rep.method, round(rep.seconds, 3)])
    run.emit(csv_text(["p", "group_order", "generating", "lambda2_abs", "gap", "method", "seconds"], rows))
    return 0


def cmd_decay(args) -> int:
    run = Run(args)
    spec = _group(args, free_pair)
    w = parse_word(args.word, spec)
    trials = args.trials if not args.quick else min(args.trials, 1000)
    curve = decay_curve(spec, w, range(args.kmin, args.kmax + 1), trials, args.seed, hold=args.hold)
    run.summary = {
        "slope": curve.slope, "intercept": curve.intercept, "r2": curve.r2,
        "prime": curve.prime, "false_identities_mod_p": curve.false_identities,
    }
    rows = [[r.k, r.hits, r.trials, r.p_hat, r.lo95, r.hi95] for r in curve.rows]
    run.emit(csv_text(["k", "hits", "trials", "p_hat", "lo95", "hi95"], rows))
    print(f"fit: slope={curve.slope:.6g} intercept={curve.intercept:.6g} r2={curve.r2:.6g}", file=sys.stderr)
    return 0


def _escape_cfg(args) -> EscapeConfig:
    return EscapeConfig(c0=args.c0, D=args.D, retries=args.retries, seed=args.seed)


def cmd_escape(args) -> int:
    run = Run(args)
    spec = _group(args, free_pair)
    w = parse_word(args.word, spec)
    wit = escape(spec, w, _escape_cfg(args))
    if not verify_witness(spec, w, wit):
        raise AssertionError("witness failed independent re-verification")
    data = wit.to_json(spec, w)
    run.summary = {"gamma_length": data["gamma_length"]}
    run.emit(json.dumps(data, indent=2, sort_keys=True) + "\n")
    return 0


FX_HEADER = ["n", "max_witness_len", "oracle_fx_where_known", "fitted_C"]


def cmd_fx(args) -> int:
    run = Run(args)
    spec = _group(args, free_pair)
    ns = [int(v) for v in args.n_range.split(",")]
    words = args.words if not args.quick else min(args.words, 10)
    curve = fx_curve(spec, ns, _escape_cfg(args), words_per_n=words, oracle_radius=args.oracle_radius)
    run.summary = {"fitted_C": curve.fitted_C}
    rows = [[r.n, r.max_witness_len, r.oracle_fx, curve.fitted_C] for r in curve.rows]
    run.emit(csv_text(FX_HEADER, rows))
    return 0


def cmd_phi(args) -> int:
    run = Run(args)
    spec = _group(args, free_pair)
    wit, rep = phi_witness(spec, args.n, _escape_cfg(args))
    run.summary = {
        "words": rep.words, "W_length": rep.W_length, "bound": rep.bound, "within_bound": rep.within_bound,
        "gamma_word": spec.word_string(free_reduce(wit.gamma.word)), "gamma_length": rep.gamma_length,
        "verified": rep.verified, "certificate": rep.certificate,
    }
    run.emit(csv_text(FX_HEADER, [[rep.n, rep.gamma_length, None, rep.ratio]]))
    print(
        f"phi: {rep.words} words, ||W||={rep.W_length} (bound {rep.bound}), gamma={spec.word_string(free_reduce(wit.gamma.word))}, "
        f"all {rep.verified} verified",
        file=sys.stderr,
    )
    return 0


def cmd_ssa(args) -> int:
    run = Run(args)
    spec = _group(args, family)
    primes = tuple(parse_prime_range(args.primes))
    if args.quick:
        primes = primes[:3]
    cfg = SsaConfig(primes=primes, eta=args.eta, alpha=args.alpha, cap=args.cap, seed=args.seed, eps=args.eps)
    rep = run_ssa(spec, cfg)
    run.summary = {
        "fitted_C": rep.fitted_C, "eps": rep.eps, "p0": rep.p0, "notes": rep.notes,
        "per_prime": [
            {"p": s.p, "evaluated": s.evaluated, "non_generating_fraction": s.non_generating_fraction,
             "one_over_p": 1 / s.p, "one_over_p_1_minus_eta": 1 / s.p ** (1 - cfg.eta),
             "min_gap": s.min_gap, "median_gap": s.median_gap, "expanders": s.expanders,
             "non_injective": s.non_injective}
            for s in rep.summaries
        ],
    }
    rows = [[r.p, r.point, r.localizer_nonzero, r.generating, r.order, r.gap, r.injective_on_ball, r.m] for r in rep.rows]
    run.emit(csv_text(["p", "point", "localizer_nonzero", "generating", "order", "gap", "injective_on_ball", "m"], rows))
    return 0


def cmd_selftest(args) -> int:
    run = Run(args)
    res = run_all(quick=args.quick, seed=args.seed, progress=lambda n: log.info("suite %s", n))
    run.summary = {"passed": all(r.passed for r in res)}
    run.emit(csv_text(["property", "samples", "violations", "max_slack"], [r.row() for r in res]))
    return 0 if all(r.passed for r in res) else 1


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--group", help="group spec JSON (default depends on the subcommand)")
    shared.add_argument("--seed", type=_seed, default=42)
    shared.add_argument("--out", help="output file; a .manifest.json is written beside it")
    shared.add_argument("--threads", type=int, default=0, help="worker cap (0 = all cores)")
    shared.add_argument("--quick", action="store_true", help="reduced sample counts")
    shared.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="mifkit", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("heights", parents=[shared], help="heights of polynomials / height property suite")
    p.add_argument("--selftest", action="store_true")
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--poly", action="append", default=[])
    p.add_argument("--N", type=int, default=2)
    p.add_argument("--vars", default="")
    p.set_defaults(func=cmd_heights)

    p = sub.add_parser("zeros", parents=[shared], help="exact zero counts over F_p^t")
    p.add_argument("--poly", action="append", required=True)
    p.add_argument("--t", type=int, default=1, help="number of variables x1..xt (ignored with --vars)")
    p.add_argument("--vars", default="")
    p.add_argument("--p", type=int, default=None)
    p.add_argument("--primes", default="5:31")
    p.set_defaults(func=cmd_zeros)

    p = sub.add_parser("gap", parents=[shared], help="closure orders and spectral gaps mod p")
    p.add_argument("--primes", default="5:31")
    p.add_argument("--point", help="specialization point for t > 0, comma separated (default: sampled)")
    p.add_argument("--method", default="auto", choices=["auto", "dense", "lanczos"])
    p.add_argument("--cap", type=int, default=200_000)
    p.set_defaults(func=cmd_gap)

    p = sub.add_parser("decay", parents=[shared], help="empirical Pr(w(gamma_k) = 1)")
    p.add_argument("--word", required=True)
    p.add_argument("--kmin", type=int, default=0)
    p.add_argument("--kmax", type=int, default=20)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--hold", type=float, default=0.0)
    p.set_defaults(func=cmd_decay)

    for name, fn, helptext in (
        ("escape", cmd_escape, "certified witness for one word"),
        ("fx", cmd_fx, "witness length against word length"),
        ("phi", cmd_phi, "one witness for all words of length <= n"),
    ):
        p = sub.add_parser(name, parents=[shared], help=helptext)
        p.add_argument("--c0", type=float, default=None)
        p.add_argument("--D", type=float, default=None)
        p.add_argument("--retries", type=int, default=8)
        if name == "escape":
            p.add_argument("--word", required=True)
        elif name == "fx":
            p.add_argument("--n-range", default="4,8,16,32,64")
            p.add_argument("--words", type=int, default=100)
            p.add_argument("--oracle-radius", type=int, default=4)
        else:
            p.add_argument("--n", type=int, default=3)
        p.set_defaults(func=fn)

    p = sub.add_parser("ssa", parents=[shared], help="exhaustive specialization study")
    p.add_argument("--primes", default="5:31")
    p.add_argument("--alpha", type=float, default=0.3)
    p.add_argument("--eta", type=float, default=0.5)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--cap", type=int, default=200_000)
    p.set_defaults(func=cmd_ssa)

    p = sub.add_parser("selftest", parents=[shared], help="run the property suites: " + ", ".join(SUITES))
    p.set_defaults(func=cmd_selftest)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    set_threads(args.threads)
    try:
        return args.func(args)
    except CAPACITY_ERRORS as exc:
        print(f"mifkit {args.command}: capacity: {exc}", file=sys.stderr)
        return 2
    except DOMAIN_ERRORS as exc:
        print(f"mifkit {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
