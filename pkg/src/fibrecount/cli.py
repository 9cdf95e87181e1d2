"""Command-line surface: instance configs in, CSV/reports out.

Subcommands: count, theta, expsum, local-density, singular-integral,
constant, compare, verify.  Global flags: --config, --seed, --threads,
--cache, --budget, --out.  The cache directory can also be set through the
FIBRECOUNT_CACHE environment variable (the only environment override).

Every CSV starts with a '# manifest <hash>' comment; with --out FILE the
full run manifest is written next to the output as FILE.manifest.json.
Cached rows are reused verbatim when the (config hash, command, parameter)
key matches, which keeps repeat runs byte-identical.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field

from . import __version__, archimedean, arith, constant, counting, expsums, padic
from .counting import BudgetExceededError
from .forms import FormError, load_instance
from .verify import run_suites


@dataclass
class RunManifest:
    """Provenance of one CLI run; the hash identifies the run inputs.

    Output paths are recorded but do not enter the hash, so repeat runs of
    the same command stay byte-identical wherever they are written.
    """

    command: str
    instance_label: str
    parameters: dict
    seed: int
    versions: dict
    outputs: list = field(default_factory=list)
    manifest_hash: str = ""

    def finalize(self) -> "RunManifest":
        core = {"command": self.command, "instance_label": self.instance_label,
                "parameters": self.parameters, "seed": self.seed,
                "versions": self.versions}
        blob = json.dumps(core, sort_keys=True).encode()
        self.manifest_hash = hashlib.sha256(blob).hexdigest()[:16]
        return self


def _manifest(command: str, label: str, params: dict, seed: int,
              config_hash: str, outputs: list) -> RunManifest:
    return RunManifest(
        command=command, instance_label=label, parameters=params, seed=seed,
        versions={"tool": __version__, "config_hash": config_hash},
        outputs=outputs).finalize()


def _emit(args, command: str, label: str, params: dict, config_hash: str,
          lines: list) -> None:
    outputs = [args.out] if args.out else []
    man = _manifest(command, label, params, args.seed, config_hash, outputs)
    body = [f"# manifest {man.manifest_hash}"] + lines
    text = "\n".join(body) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        with open(args.out + ".manifest.json", "w", encoding="utf-8") as fh:
            json.dump(asdict(man), fh, indent=2, sort_keys=True)
            fh.write("\n")
    else:
        sys.stdout.write(text)


def _cache_dir(args):
    return args.cache or os.environ.get("FIBRECOUNT_CACHE")


def _cache_key(config_hash: str, command: str, params: dict) -> str:
    blob = json.dumps({"config": config_hash, "command": command,
                       "params": params}, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:24]


def _cache_get(args, key: str):
    root = _cache_dir(args)
    if not root:
        return None
    path = os.path.join(root, key + ".json")
    if os.path.exists(path):
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    return None


def _cache_put(args, key: str, rows) -> None:
    root = _cache_dir(args)
    if not root:
        return
    os.makedirs(root, exist_ok=True)
    with open(os.path.join(root, key + ".json"), "w", encoding="utf-8") as fh:
        json.dump(rows, fh)


def _int_list(text: str) -> list:
    return [int(part) for part in text.split(",") if part]


def cmd_count(args) -> int:
    inst = load_instance(args.config)
    params = {"t": args.t, "include_zero": args.include_zero,
              "method": args.method, "kind": args.kind}
    key = _cache_key(inst.config_hash(), "count", params)
    cached = _cache_get(args, key)
    if cached is not None:
        lines = cached
    else:
        lines = [counting.CountRecord.csv_header()]
        for t in _int_list(args.t):
            if args.kind == "projective":
                rec = counting.projective_count(inst, t, budget=args.budget,
                                                threads=args.threads,
                                                method=args.method)
            else:
                t0 = time.monotonic()
                cnt = counting.count_soluble_fibre_points(
                    inst, t, include_zero_fibres=args.include_zero,
                    budget=args.budget, threads=args.threads)
                norm = (cnt * math.sqrt(math.log(t)) / t ** (inst.n - inst.d)
                        if t >= 2 else float("nan"))
                rec = counting.CountRecord(
                    label=inst.label, t=t, raw_count=cnt, normalized=norm,
                    include_zero=args.include_zero,
                    wall_time_s=time.monotonic() - t0)
            lines.append(rec.csv_row())
        _cache_put(args, key, lines)
    _emit(args, "count", inst.label, params, inst.config_hash(), lines)
    return 0


def cmd_theta(args) -> int:
    inst = load_instance(args.config)
    params = {"P": args.P, "include_zero": args.include_zero}
    key = _cache_key(inst.config_hash(), "theta", params)
    cached = _cache_get(args, key)
    if cached is not None:
        lines = cached
    else:
        lines = [counting.CountRecord.csv_header()]
        for P in _int_list(args.P):
            t0 = time.monotonic()
            cnt = counting.count_soluble_fibre_points(
                inst, P, include_zero_fibres=args.include_zero,
                budget=args.budget, threads=args.threads)
            norm = (cnt * math.sqrt(math.log(P)) / P ** (inst.n - inst.d)
                    if P >= 2 else float("nan"))
            rec = counting.CountRecord(
                label=inst.label, t=P, raw_count=cnt, normalized=norm,
                include_zero=args.include_zero,
                wall_time_s=time.monotonic() - t0)
            lines.append(rec.csv_row())
        _cache_put(args, key, lines)
    _emit(args, "theta", inst.label, params, inst.config_hash(), lines)
    return 0


def cmd_expsum(args) -> int:
    inst = load_instance(args.config)
    params = {"birch": args.birch, "arc": args.arc, "empirical": args.empirical,
              "U": args.U, "x": args.x}
    lines = []
    if args.birch:
        q = args.birch
        S = expsums.birch_sum_table(inst, q, budget=args.budget)
        lines.append("q,a1,a2,S_re,S_im")
        for a1 in range(q):
            for a2 in range(q):
                if q == 1 or math.gcd(math.gcd(a1, a2), q) == 1:
                    lines.append(f"{q},{a1},{a2},{S[a1, a2].real:.12g},"
                                 f"{S[a1, a2].imag:.12g}")
    elif args.arc:
        lines.append("q,a1,F_re,F_im,tail_bound")
        for q in range(1, args.arc + 1):
            row, tail = expsums.arc_factor_row(q, args.U)
            for a1 in range(q):
                lines.append(f"{q},{a1},{row[a1].real:.12g},"
                             f"{row[a1].imag:.12g},{tail:.6g}")
    elif args.empirical is not None:
        q = args.empirical
        consts = arith.landau_constants(10**6)
        scale = math.sqrt(math.log(args.x)) / args.x
        row, _ = expsums.arc_factor_row(q, args.U)
        lines.append("q,a1,emp_re,emp_im,pred_re,pred_im")
        for a1 in range(q):
            emp = expsums.twisted_two_squares_sum(args.x, a1, q) * scale
            pred = math.sqrt(2) * consts.c0 * row[a1]
            lines.append(f"{q},{a1},{emp.real:.12g},{emp.imag:.12g},"
                         f"{pred.real:.12g},{pred.imag:.12g}")
    else:
        raise FormError("one of --birch, --arc, --empirical is required")
    _emit(args, "expsum", inst.label, params, inst.config_hash(), lines)
    return 0


def cmd_local_density(args) -> int:
    inst = load_instance(args.config)
    params = {"p": args.p, "N": args.N, "kind": args.kind}
    lines = [padic.LocalDensity.csv_header()]
    for p in _int_list(args.p):
        if args.kind == "tau":
            dens = padic.hypersurface_density(inst, p, args.N,
                                              budget=args.budget)
        else:
            dens = padic.soluble_density(inst, p, args.N, budget=args.budget)
        lines.append(dens.csv_row())
    _emit(args, "local-density", inst.label, params, inst.config_hash(), lines)
    return 0


def cmd_singular_integral(args) -> int:
    inst = load_instance(args.config)
    schedule = ([float(s) for s in args.schedule.split(",")]
                if args.schedule else archimedean.DEFAULT_SCHEDULE)
    params = {"samples": args.samples, "schedule": list(schedule),
              "estimator": args.estimator}
    est = archimedean.real_density(inst, schedule, args.samples, args.seed)
    lines = ["epsilon,volume_estimate,std_error,samples,seed"]
    for (eps, j, se, n_i) in est.rows:
        lines.append(f"{eps:.10g},{j:.12g},{se:.12g},{n_i},{args.seed}")
    lines.append(f"0,{est.value.real:.12g},{est.std_error:.12g},"
                 f"{est.samples},{args.seed}")
    if args.estimator == "both":
        fib = archimedean.real_density_coarea(inst, args.samples, args.seed)
        lines.append(f"# fibre estimator: {fib.value.real:.12g} "
                     f"+- {fib.std_error:.12g}")
    _emit(args, "singular-integral", inst.label, params, inst.config_hash(),
          lines)
    return 0


def _constant_pipeline(inst, args):
    consts = arith.landau_constants(10**6)
    J = archimedean.real_density(inst, samples=args.samples, seed=args.seed)
    l_fact = expsums.singular_series_factored(inst, p_max=args.p_max,
                                              budget=args.budget)
    l_qsum = expsums.singular_series(inst, Q=args.Q, budget=args.budget)
    L = l_qsum if args.use_qsum else l_fact
    prod = padic.local_product(inst, p_max=args.p_max, budget=args.budget)
    c1 = constant.leading_constant_series(inst, J, L, consts)
    c2 = constant.leading_constant_tamagawa(inst, J, prod)
    return consts, J, l_fact, l_qsum, prod, c1, c2


def cmd_constant(args) -> int:
    inst = load_instance(args.config)
    params = {"route": args.route, "Q": args.Q, "p_max": args.p_max,
              "samples": args.samples, "use_qsum": args.use_qsum}
    _consts, _J, l_fact, l_qsum, _prod, c1, c2 = _constant_pipeline(inst, args)
    lines = [constant.ConstantBreakdown.csv_header()]
    if args.route in ("1", "both"):
        lines.append(c1.csv_row())
    if args.route in ("2", "both"):
        lines.append(c2.csv_row())
    if args.route == "both":
        agree = constant.route_agreement(c1, c2)
        lines.append(f"# route agreement: gap {agree['gap']:.6g}, relative "
                     f"{agree['relative_gap']:.4f}, combined error "
                     f"{agree['combined_error']:.4g}")
    lines.append(f"# singular series: q-sum(Q={args.Q}) = "
                 f"{l_qsum.value.real:.6g} +- {l_qsum.error_bound:.3g} "
                 f"({l_qsum.error_kind}); factored(p<={args.p_max}) = "
                 f"{l_fact.value.real:.6g} +- {l_fact.error_bound:.3g}")
    for w in c1.warnings:
        lines.append(f"# warning: {w}")
    _emit(args, "constant", inst.label, params, inst.config_hash(), lines)
    return 0


def cmd_compare(args) -> int:
    inst = load_instance(args.config)
    params = {"t": args.t, "Q": args.Q, "p_max": args.p_max,
              "samples": args.samples}
    _consts, _J, _lf, _lq, _prod, c1, c2 = _constant_pipeline(inst, args)
    agree = constant.route_agreement(c1, c2)
    lines = ["t,measured,normalized,predicted_route1,predicted_route2,ratio2"]
    for t in _int_list(args.t):
        rec = counting.projective_count(inst, t, budget=args.budget,
                                        threads=args.threads)
        p1 = constant.predicted_count(c1, inst, t)
        p2 = constant.predicted_count(c2, inst, t)
        lines.append(f"{t},{rec.raw_count},{rec.normalized:.6g},"
                     f"{p1:.6g},{p2:.6g},{rec.raw_count / p2:.4f}")
    lines.append(f"# routes: {c1.c_phi:.6g} vs {c2.c_phi:.6g} "
                 f"(relative gap {agree['relative_gap']:.4f})")
    lines.append("# caveat: the dimension hypothesis behind the asymptotic "
                 "requires n > 12; measured/predicted ratios at desk scale "
                 "are indicative only and never gate any check")
    _emit(args, "compare", inst.label, params, inst.config_hash(), lines)
    return 0


def cmd_verify(args) -> int:
    results = run_suites(args.suite, budget=args.budget, seed=args.seed)
    failed = 0
    for r in results:
        print(r.line())
        if r.gating and not r.passed:
            failed += 1
    print(f"{len(results) - failed}/{len(results)} checks passed"
          + (f"; {failed} FAILED" if failed else ""))
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="fibrecount",
        description="Desk-scale counts, exponential sums, local densities "
                    "and the leading constant for conic bundles over "
                    "hypersurfaces.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True,
                           help="instance config JSON")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
        p.add_argument("--cache", default=None,
                       help="cache directory (or FIBRECOUNT_CACHE)")
        p.add_argument("--budget", type=int, default=counting.DEFAULT_BUDGET,
                       help="max enumeration volume per operation")
        p.add_argument("--out", default=None, help="write CSV here "
                       "(plus .manifest.json); default stdout")

    p = sub.add_parser("count", help="projective counts at heights t")
    common(p)
    p.add_argument("--t", required=True, help="comma-separated heights")
    p.add_argument("--include-zero", action="store_true",
                   dest="include_zero",
                   help="with --kind box, also count nonzero points with "
                        "f1 = 0 (projective counts always include them)")
    p.add_argument("--kind", default="projective",
                   choices=("projective", "box"))
    p.add_argument("--method", default="auto",
                   choices=("auto", "direct", "moebius"))
    p.set_defaults(fn=cmd_count)

    p = sub.add_parser("theta", help="box counts of soluble fibres")
    common(p)
    p.add_argument("--P", required=True, help="comma-separated box radii")
    p.add_argument("--include-zero", action="store_true", dest="include_zero",
                   help="also count nonzero points with f1 = 0")
    p.set_defaults(fn=cmd_theta)

    p = sub.add_parser("expsum", help="Birch sums, arc factors, empirical sums")
    common(p)
    p.add_argument("--birch", type=int, default=None, metavar="Q",
                   help="emit the full primitive-phase table mod Q")
    p.add_argument("--arc", type=int, default=None, metavar="QMAX",
                   help="emit arc factors for all q <= QMAX")
    p.add_argument("--empirical", type=int, default=None, metavar="Q",
                   help="empirical twisted sums against predictions mod Q")
    p.add_argument("--U", type=float, default=2.0**22,
                   help="(k,t) truncation for arc factors")
    p.add_argument("--x", type=int, default=10**7,
                   help="range for empirical sums")
    p.set_defaults(fn=cmd_expsum)

    p = sub.add_parser("local-density", help="p-adic densities")
    common(p)
    p.add_argument("--p", required=True, help="comma-separated primes")
    p.add_argument("--N", type=int, required=True, help="level")
    p.add_argument("--kind", default="ell", choices=("tau", "ell"))
    p.set_defaults(fn=cmd_local_density)

    p = sub.add_parser("singular-integral", help="real density by Monte Carlo")
    common(p)
    p.add_argument("--samples", type=int, default=10**6)
    p.add_argument("--schedule", default=None,
                   help="comma-separated epsilon levels")
    p.add_argument("--estimator", default="shell", choices=("shell", "both"))
    p.set_defaults(fn=cmd_singular_integral)

    p = sub.add_parser("constant", help="leading constant by both routes")
    common(p)
    p.add_argument("--route", default="both", choices=("1", "2", "both"))
    p.add_argument("--Q", type=int, default=16, help="q-sum truncation")
    p.add_argument("--p-max", type=int, default=13, dest="p_max")
    p.add_argument("--samples", type=int, default=10**6)
    p.add_argument("--use-qsum", action="store_true", dest="use_qsum",
                   help="feed route 1 the raw q-sum instead of the factored "
                        "evaluation (non-convergent at small n)")
    p.set_defaults(fn=cmd_constant)

    p = sub.add_parser("compare", help="counts against predictions")
    common(p)
    p.add_argument("--t", required=True, help="comma-separated heights")
    p.add_argument("--Q", type=int, default=16)
    p.add_argument("--p-max", type=int, default=13, dest="p_max")
    p.add_argument("--samples", type=int, default=10**6)
    p.set_defaults(fn=cmd_compare, use_qsum=False)

    p = sub.add_parser("verify", help="run verification suites")
    p.add_argument("suite", choices=("arith", "sieve", "expsums", "padic",
                                     "archimedean", "constant", "all"))
    common(p, config=False)
    p.set_defaults(fn=cmd_verify, use_qsum=False)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except BudgetExceededError as exc:
        print(f"budget refused: {exc}", file=sys.stderr)
        return 2
    except (FormError, arith.DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
