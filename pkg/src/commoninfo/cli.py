"""Batch command line surface.

Verbs:
    measures    entropies, pairwise mutual informations, K, optionally C
    wyner       two-route common-information run with witness output
    gamma       entropy-route objective at one slack point (delta1, delta2)
    csbs-sweep  closed-form table over circularly symmetric binary sources
    region      corner points and achievability certificates
    sim-gen     distribution-synthesis experiment over random codebooks
    sim-codec   random-bin codec experiment with typicality decoding

Common flags: --seed, --tol, --format {table,records}, --out PATH.
`records` emits one canonical JSON document (sorted keys, compact
separators, no timestamps), so a seeded command re-run with identical
flags produces byte-identical output. The human `table` format adds
start/elapsed comment lines and is not byte-stable.

Exit codes: 0 ok, 2 input error, 3 numerical inconsistency, 4 budget.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import __version__, kernels
from .csbs import a0_of_a1, a1_of_a0, asymptote_gap, c_closed_form, dsbs_joint
from .dist import JointPMF, entropy, marginalize, mutual_information
from .distfile import read_distfile, read_witness, aux_to_jsonable
from .errors import (
    BudgetExceeded,
    CommonInfoError,
    IncompatibleAux,
    InconsistentEstimates,
    InvalidConfig,
    NonConvergence,
    ParseError,
    TooManyParameters,
)
from .gk import gk_common_randomness, measure_ordering
from .graywyner import (
    MARGINAL_TOL,
    RateTuple,
    RegionCertificate,
    certify_achievable,
    constant_witness,
    copy_witness,
    corner_point,
)
from .models import AuxModel
from .simulate import CodecSimConfig, GenSimConfig, generator_sim, gw_codec_sim
from .wyner import OptConfig, gamma, wyner_ci


@dataclass(frozen=True)
class RunRecord:
    """One command's reproducible outcome.

    result and config are what the records format serializes; table is the
    deterministic human rendering; started/elapsed are informational and
    excluded from both serialization and equality.
    """

    command: str
    config: dict
    seed: int
    version: str
    result: dict
    table: tuple
    started: str = field(compare=False, default="")
    elapsed: float = field(compare=False, default=0.0)


def _jsonable(obj):
    """Recursively coerce to strict-JSON-safe plain values."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isfinite(v):
            return v
        # strict JSON has no Infinity/NaN literals
        return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _g(v) -> str:
    if isinstance(v, (list, tuple, np.ndarray)):
        return " ".join(_g(x) for x in v)
    return "%.9g" % float(v)


def _u64(s: str) -> int:
    v = int(s)
    if not 0 <= v < 1 << 64:
        raise ValueError("seed must fit in an unsigned 64-bit integer")
    return v


def _float_list(s: str):
    toks = s.replace(",", " ").split()
    if not toks:
        raise ValueError("empty list")
    return [float(t) for t in toks]


def _int_list(s: str):
    toks = s.replace(",", " ").split()
    if not toks:
        raise ValueError("empty list")
    return [int(t) for t in toks]


def _grid(s: str) -> np.ndarray:
    parts = s.split(":")
    if len(parts) != 3:
        raise ValueError("grid must be lo:hi:points")
    lo, hi, k = float(parts[0]), float(parts[1]), int(parts[2])
    if k < 1 or hi < lo:
        raise ValueError("grid needs points >= 1 and hi >= lo")
    return np.linspace(lo, hi, k)


def _config_echo(args) -> dict:
    # out/format route the record somewhere; they do not shape the result
    skip = ("func", "command", "out", "format")
    return {k: v for k, v in vars(args).items() if k not in skip}


def _opt_config(args) -> OptConfig:
    kw = {"seed": args.seed, "cross_tol": args.tol, "restarts": args.restarts}
    if args.w_size is not None:
        kw["w_size"] = args.w_size
    if args.schedule is not None:
        kw["penalty_schedule"] = tuple(args.schedule)
    return OptConfig(**kw)


def _record(args, result: dict, table, t0: float, started: str) -> RunRecord:
    return RunRecord(
        command=args.command,
        config=_config_echo(args),
        seed=args.seed,
        version=__version__,
        result=result,
        table=tuple(table),
        started=started,
        elapsed=time.perf_counter() - t0,
    )


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _witness_lines(aux: AuxModel, labels) -> list:
    lines = ["w_prior\t" + "\t".join(_g(p) for p in aux.w_prior)]
    for i, chan in enumerate(aux.channels):
        for w in range(chan.shape[0]):
            lines.append(
                f"channel[{labels[i]}|w={w}]\t"
                + "\t".join(_g(p) for p in chan[w]))
    return lines


# ---------------------------------------------------------------- verbs


def cmd_measures(args) -> RunRecord:
    t0, started = time.perf_counter(), _now()
    pmf = read_distfile(args.dist)
    labels = [pmf.spec.label(i) for i in range(pmf.nvars)]
    h_joint = entropy(pmf)
    h_marg = [entropy(marginalize(pmf, [i])) for i in range(pmf.nvars)]
    pairs = []
    for i in range(pmf.nvars):
        for j in range(i + 1, pmf.nvars):
            pairs.append((i, j, mutual_information(pmf, [i], [j])))
    k = gk_common_randomness(pmf)

    result = {
        "h_joint": h_joint,
        "h_marginals": {labels[i]: h_marg[i] for i in range(pmf.nvars)},
        "pairwise_i": [
            {"vars": [labels[i], labels[j]], "value": v} for i, j, v in pairs
        ],
        "k": k,
    }
    table = [f"H({','.join(labels)})\t{_g(h_joint)}"]
    table += [f"H({labels[i]})\t{_g(h_marg[i])}" for i in range(pmf.nvars)]
    table += [f"I({labels[i]};{labels[j]})\t{_g(v)}" for i, j, v in pairs]
    table.append(f"K\t{_g(k)}")

    if args.wyner:
        res = wyner_ci(pmf, _opt_config(args))
        rep = measure_ordering(pmf, res.value, tol=args.tol)
        result["c"] = res.value
        result["c_certificate"] = res.certificate
        result["ordering"] = {
            "ordered": rep.ordered,
            "violations": list(rep.violations),
        }
        table.append(f"C\t{_g(res.value)}\t[{res.certificate}]")
        table.append(
            "ordering\tok" if rep.ordered
            else "ordering\tVIOLATED\t" + "; ".join(rep.violations))
    return _record(args, result, table, t0, started)


def cmd_wyner(args) -> RunRecord:
    t0, started = time.perf_counter(), _now()
    pmf = read_distfile(args.dist)
    labels = [pmf.spec.label(i) for i in range(pmf.nvars)]
    res = wyner_ci(pmf, _opt_config(args))
    det = res.details
    aux = res.model if isinstance(res.model, AuxModel) \
        else res.model.induced_aux(pmf)
    # gap of the exported product-form witness, not the winning route's
    # internal one; this is the tolerance downstream corner checks need
    wit_gap = float(np.max(np.abs(aux.induced_joint().probs - pmf.probs)))
    # a certified witness may miss the strict marginal tolerance; allow the
    # cross-validation tolerance when locating its corner
    corner = corner_point(pmf, res.model, tol=max(MARGINAL_TOL, args.tol))

    result = {
        "value": res.value,
        "certificate": res.certificate,
        "route": det.get("route"),
        "test_channel_value": det.get("test_channel_value"),
        "entropy_route_value": det.get("entropy_route_value"),
        "cross_gap": det.get("cross_gap"),
        "ci_violation": res.ci_violation,
        "marginal_gap": wit_gap,
        "backend": kernels.get_backend(),
        "witness": aux_to_jsonable(aux),
        "corner": {"r0": corner.r0, "private": list(corner.r)},
    }
    table = [
        f"C\t{_g(res.value)}\t[{res.certificate}]",
        f"route\t{det.get('route')}",
        f"test-channel route\t{_g(det['test_channel_value'])}",
        f"entropy route\t{_g(det['entropy_route_value'])}",
        f"cross gap\t{_g(det['cross_gap'])}",
        f"ci violation\t{_g(res.ci_violation)}",
        f"marginal gap\t{_g(wit_gap)}",
        f"corner r0\t{_g(corner.r0)}",
    ]
    table += [f"corner H({labels[i]}|W)\t{_g(v)}"
              for i, v in enumerate(corner.r)]
    table += _witness_lines(aux, labels)
    return _record(args, result, table, t0, started)


def cmd_gamma(args) -> RunRecord:
    t0, started = time.perf_counter(), _now()
    pmf = read_distfile(args.dist)
    labels = [pmf.spec.label(i) for i in range(pmf.nvars)]
    res = gamma(pmf, args.delta1, args.delta2, _opt_config(args))
    h_x = entropy(pmf)

    result = {
        "gamma": res.value,
        "certificate": res.certificate,
        "delta1": args.delta1,
        "delta2": args.delta2,
        "h_x": h_x,
        "h_minus_gamma": h_x - res.value,
        "marginal_gap": res.marginal_gap,
        "ci_violation": res.ci_violation,
        "witness": aux_to_jsonable(res.model),
    }
    table = [
        f"Gamma({_g(args.delta1)},{_g(args.delta2)})\t{_g(res.value)}"
        f"\t[{res.certificate}]",
        f"H(X)\t{_g(h_x)}",
        f"H(X) - Gamma\t{_g(h_x - res.value)}",
        f"divergence used\t{_g(res.marginal_gap)}",
    ]
    table += _witness_lines(res.model, labels)
    return _record(args, result, table, t0, started)


def cmd_csbs_sweep(args) -> RunRecord:
    t0, started = time.perf_counter(), _now()
    ns = args.n_list
    if any(n < 2 for n in ns):
        raise InvalidConfig("csbs sweep needs variable counts >= 2")
    if args.a0_grid is not None:
        points = [(float(a0), a1_of_a0(float(a0))) for a0 in args.a0_grid]
    else:
        points = [(a0_of_a1(float(a1)), float(a1)) for a1 in args.a1_grid]

    columns = ["N", "a0", "a1", "c_n", "i_pair", "k", "asymptote_gap"]
    rows = []
    for n in ns:
        for a0, a1 in points:
            pair = dsbs_joint(a0)
            rows.append([
                n, a0, a1,
                c_closed_form(n, a1),
                mutual_information(pair, [0], [1]),
                gk_common_randomness(pair),
                asymptote_gap(n, a1),
            ])
    result = {"columns": columns, "rows": rows}
    table = ["\t".join(columns)]
    table += ["\t".join([str(r[0])] + [_g(v) for v in r[1:]]) for r in rows]
    return _record(args, result, table, t0, started)


def cmd_region(args) -> RunRecord:
    t0, started = time.perf_counter(), _now()
    pmf = read_distfile(args.dist)
    vals = args.target
    if len(vals) != pmf.nvars + 1:
        raise InvalidConfig(
            f"target needs 1 + {pmf.nvars} rates, got {len(vals)}")
    target = RateTuple(vals[0], tuple(vals[1:]))

    witnesses = [("constant", constant_witness(pmf)),
                 ("copy", copy_witness(pmf))]
    for path in args.witness:
        witnesses.append((path, read_witness(path)))
    if args.wyner:
        witnesses.append(("optimized", wyner_ci(pmf, _opt_config(args)).model))

    tol = max(MARGINAL_TOL, args.tol)
    corners = []
    for name, wit in witnesses:
        try:
            c = corner_point(pmf, wit, tol=tol)
            corners.append({"witness": name, "r0": c.r0,
                            "private": list(c.r)})
        except IncompatibleAux as exc:
            corners.append({"witness": name, "error": str(exc)})

    cert = certify_achievable(pmf, target, [w for _, w in witnesses],
                              tol=tol)
    if isinstance(cert, RegionCertificate):
        name = next(n for n, w in witnesses if w is cert.witness)
        cert_payload = {"achievable": True, "witness": name,
                        "slack": list(cert.slack)}
    else:
        cert_payload = {"achievable": False, "reason": cert.reason}

    slack = target.total - entropy(pmf)
    result = {
        "target": {"r0": target.r0, "private": list(target.r)},
        "sum_rate_slack": slack,
        "corners": corners,
        "certificate": cert_payload,
    }
    table = [
        "target\t" + "\t".join(_g(v) for v in (target.r0,) + target.r),
        f"sum-rate slack\t{_g(slack)}",
    ]
    for c in corners:
        if "error" in c:
            table.append(f"corner[{c['witness']}]\tincompatible: {c['error']}")
        else:
            table.append(
                f"corner[{c['witness']}]\t"
                + "\t".join(_g(v) for v in [c["r0"]] + c["private"]))
    if cert_payload["achievable"]:
        table.append(
            f"certificate\tachievable via {cert_payload['witness']}"
            f"\tslack " + " ".join(_g(s) for s in cert_payload["slack"]))
    else:
        table.append(f"certificate\tunknown: {cert_payload['reason']}")
    return _record(args, result, table, t0, started)


def cmd_sim_gen(args) -> RunRecord:
    t0, started = time.perf_counter(), _now()
    model = read_witness(args.witness)
    cfg = GenSimConfig(
        model=model, n=args.n, rate=args.rate,
        codebook_trials=args.codebooks, estimator=args.estimator,
        samples=args.samples, seed=args.seed)
    report = generator_sim(cfg)

    result = {
        "sim_config": report.config,
        "summary": report.summary,
        "per_trial": [list(t) for t in report.per_trial],
    }
    table = ["codebook\tD_n\tse"]
    table += ["\t".join(_g(v) for v in t) for t in report.per_trial]
    table += [f"{k}\t{_g(v)}" for k, v in sorted(report.summary.items())]
    return _record(args, result, table, t0, started)


def cmd_sim_codec(args) -> RunRecord:
    t0, started = time.perf_counter(), _now()
    pmf = read_distfile(args.dist)
    witness = read_witness(args.witness)
    vals = args.rates
    if len(vals) != pmf.nvars + 1:
        raise InvalidConfig(
            f"rates needs 1 + {pmf.nvars} entries, got {len(vals)}")
    cfg = CodecSimConfig(
        pmf=pmf, witness=witness, n=args.n,
        rates=RateTuple(vals[0], tuple(vals[1:])),
        typicality_eps=args.eps, trials=args.trials, seed=args.seed,
        marginal_tol=max(MARGINAL_TOL, args.tol))
    report = gw_codec_sim(cfg)

    result = {
        "sim_config": report.config,
        "summary": report.summary,
        "per_trial": [list(t) for t in report.per_trial],
    }
    table = ["trial\te1\te2\te3\terr"]
    table += ["\t".join(str(v) for v in t) for t in report.per_trial]
    table += [f"{k}\t{_g(v)}" for k, v in sorted(report.summary.items())]
    return _record(args, result, table, t0, started)


# ---------------------------------------------------------------- wiring


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_u64, default=0,
                        help="PRNG seed, unsigned 64-bit (default 0)")
    common.add_argument("--tol", type=float, default=5e-3,
                        help="cross-validation tolerance in bits")
    common.add_argument("--format", choices=("table", "records"),
                        default="table", help="output style")
    common.add_argument("--out", default=None,
                        help="write output to this path instead of stdout")

    opt = argparse.ArgumentParser(add_help=False)
    opt.add_argument("--w-size", type=int, default=None,
                     help="auxiliary alphabet size (default: product bound)")
    opt.add_argument("--restarts", type=int, default=16)
    opt.add_argument("--schedule", type=_float_list, default=None,
                     help="comma-separated increasing penalty weights")

    p = argparse.ArgumentParser(
        prog="commoninfo",
        description="Common-information measures, rate regions, and "
                    "coding simulators for small finite-alphabet sources.")
    p.add_argument("--version", action="version",
                   version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="verb")

    sp = sub.add_parser(
        "measures", parents=[common, opt],
        help="entropies, pairwise I, K, and optionally C")
    sp.add_argument("dist", help="distribution file")
    sp.add_argument("--wyner", action="store_true",
                    help="also estimate C and check the K <= I <= C ordering")
    sp.set_defaults(func=cmd_measures)

    sp = sub.add_parser(
        "wyner", parents=[common, opt],
        help="cross-validated common-information estimate with witness")
    sp.add_argument("dist")
    sp.set_defaults(func=cmd_wyner)

    sp = sub.add_parser(
        "gamma", parents=[common, opt],
        help="conditional-entropy objective at one slack point")
    sp.add_argument("dist")
    sp.add_argument("--delta1", type=float, default=0.0,
                    help="divergence budget in bits")
    sp.add_argument("--delta2", type=float, default=0.0,
                    help="conditional multi-information budget in bits")
    sp.set_defaults(func=cmd_gamma)

    sp = sub.add_parser(
        "csbs-sweep", parents=[common],
        help="closed-form table over symmetric binary sources")
    sp.add_argument("--n-list", type=_int_list, default=[2, 3],
                    help="comma-separated variable counts (default 2,3)")
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--a0-grid", type=_grid, default=None,
                   help="lo:hi:points over the pairwise crossover")
    g.add_argument("--a1-grid", type=_grid, default=None,
                   help="lo:hi:points over the per-channel crossover")
    sp.set_defaults(func=cmd_csbs_sweep)

    sp = sub.add_parser(
        "region", parents=[common, opt],
        help="corner points and achievability certificate for a rate tuple")
    sp.add_argument("dist")
    sp.add_argument("--target", type=_float_list, required=True,
                    help="comma-separated rates r0,r1,...,rN")
    sp.add_argument("--witness", action="append", default=[],
                    help="witness JSON file (repeatable)")
    sp.add_argument("--wyner", action="store_true",
                    help="add an optimized witness")
    sp.set_defaults(func=cmd_region)

    sp = sub.add_parser(
        "sim-gen", parents=[common],
        help="distribution synthesis from a common message")
    sp.add_argument("--witness", required=True,
                    help="generator model JSON (prior + channels)")
    sp.add_argument("--n", type=int, required=True, help="block length")
    sp.add_argument("--rate", type=float, required=True,
                    help="common rate R0 in bits per letter")
    sp.add_argument("--codebooks", type=int, default=16,
                    help="independent codebook draws (default 16)")
    sp.add_argument("--estimator", choices=("exact", "monte_carlo"),
                    default="exact")
    sp.add_argument("--samples", type=int, default=2000,
                    help="monte_carlo draws per codebook")
    sp.set_defaults(func=cmd_sim_gen)

    sp = sub.add_parser(
        "sim-codec", parents=[common],
        help="random-bin codec with typicality decoding")
    sp.add_argument("dist")
    sp.add_argument("--witness", required=True, help="witness JSON file")
    sp.add_argument("--rates", type=_float_list, required=True,
                    help="comma-separated rates r0,r1,...,rN")
    sp.add_argument("--n", type=int, required=True, help="block length")
    sp.add_argument("--eps", type=float, default=0.1,
                    help="strong-typicality tolerance")
    sp.add_argument("--trials", type=int, default=1000)
    sp.set_defaults(func=cmd_sim_codec)

    return p


def _emit(record: RunRecord, args):
    if args.format == "records":
        payload = {
            "command": record.command,
            "config": record.config,
            "seed": record.seed,
            "version": record.version,
            "result": record.result,
        }
        text = json.dumps(_jsonable(payload), sort_keys=True,
                          separators=(",", ":")) + "\n"
    else:
        head = [
            f"# commoninfo {record.command} v{record.version}",
            f"# seed {record.seed}",
            f"# started {record.started}",
        ]
        tail = [f"# elapsed {record.elapsed:.3f}s"]
        text = "\n".join(head + list(record.table) + tail) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        # the emit is inside the guard so a failed --out write maps to the
        # same exit code as any other I/O error
        _emit(args.func(args), args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InconsistentEstimates as exc:
        # surface both route values so the disagreement is inspectable
        print(f"error: {exc}", file=sys.stderr)
        print(f"test-channel route: {exc.test_channel_value:.9g}",
              file=sys.stderr)
        print(f"entropy route:      {exc.entropy_route_value:.9g}",
              file=sys.stderr)
        return 3
    except NonConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (BudgetExceeded, TooManyParameters) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except (CommonInfoError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
