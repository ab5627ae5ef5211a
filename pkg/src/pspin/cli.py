"""Command-line front end.

Every command writes a JSON report (stdout or --out) whose top level
carries a `meta` block with the model parameters, the seed and the build
version, so identical invocations produce byte-identical files.

Exit codes: 0 success, 2 validation error, 3 numeric failure.
"""

import argparse
import json
import sys

import numpy as np

from . import __version__, analytic, critical, field, gibbs
from .analytic import ModelParams
from .errors import PspinError, ValidationError


def _jsonable(obj):
    """Recursively convert numpy scalars/arrays so json can emit them."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def _emit(report, args):
    report = dict(report)
    report["meta"] = {
        "p": getattr(args, "p", None),
        "n": getattr(args, "n", None),
        "beta": getattr(args, "beta", None),
        "seed": getattr(args, "seed", None),
        "build": __version__,
    }
    text = json.dumps(_jsonable(report), sort_keys=True, indent=2) + "\n"
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            fh.write(text)
        print("wrote %s" % args.out)
    else:
        sys.stdout.write(text)


def _bundle_dict(bundle):
    return {
        "p": bundle.params.p,
        "beta": bundle.params.beta,
        "e_inf": bundle.e_inf,
        "e_zero": bundle.e_zero,
        "c_p": bundle.c_p,
        "chi1": bundle.chi1,
        "chi2": bundle.chi2,
        "chi3": bundle.chi3,
        "q_star": bundle.q_star,
        "q_c": bundle.q_c,
        "q_star_star": bundle.q_star_star,
        "q_ls": bundle.q_ls,
        "c_ls": bundle.c_ls,
        "c_star": bundle.c_star,
        "m_star": bundle.m_star,
    }


def cmd_analytic(args):
    params = ModelParams(args.p, args.beta)
    bundle = analytic.constants(params, c_ls=args.cls)
    report = {"bundle": _bundle_dict(bundle)}
    if args.check == "parisi":
        lz = analytic.lambda_z(params, bundle.e_zero, bundle.q_star)
        pr = analytic.parisi_1rsb(params, bundle.m_star, bundle.q_star**2)
        resid = abs(lz.value - pr)
        report["check"] = {
            "name": "parisi",
            "residual": resid,
            "pass": bool(resid < 1e-8),
        }
    _emit(report, args)
    return 0


def cmd_enumerate(args):
    d = field.sample_disorder(args.p, args.n, seed=args.seed)
    catalog = critical.enumerate_critical(
        d, n_starts=args.starts, seed=args.seed, saturation=args.saturation
    )
    if args.csv:
        catalog.to_csv(args.csv)
        print("wrote %s" % args.csv)
    report = {
        "count": len(catalog.records),
        "saturated": catalog.saturated,
        "values": [r.value for r in catalog.records],
        "indices": [r.index for r in catalog.records],
    }
    _emit(report, args)
    return 0


def cmd_kacrice(args):
    interval = (-np.inf, args.emax * args.n) if args.emax is not None else (-np.inf, np.inf)
    log_count = critical.log_kac_rice_mean(args.p, args.n, interval, seed=args.seed)
    _emit({"log_mean_count": log_count, "interval_upper": args.emax}, args)
    return 0


def cmd_geometry(args):
    report = gibbs.geometry_experiment(
        args.p,
        args.n,
        args.beta,
        n_disorders=args.disorders,
        n_steps=args.steps,
        n_starts=args.starts,
        seed=args.seed,
    )
    _emit(report, args)
    return 0


def cmd_tempchaos(args):
    if args.beta2 is None:
        raise ValidationError("tempchaos requires --beta2")
    report = gibbs.temp_chaos_experiment(
        args.p,
        args.n,
        args.beta,
        args.beta2,
        n_disorders=args.disorders,
        n_steps=args.steps,
        seed=args.seed,
    )
    _emit(report, args)
    return 0


def cmd_disorderchaos(args):
    if not args.s:
        raise ValidationError("disorderchaos requires at least one --s value")
    report = gibbs.disorder_chaos_experiment(
        args.p,
        args.n,
        args.beta,
        s_values=args.s,
        n_disorders=args.disorders,
        n_steps=args.steps,
        seed=args.seed,
    )
    _emit(report, args)
    return 0


def cmd_freeenergy(args):
    d = field.sample_disorder(args.p, args.n, seed=args.seed)
    value, err = gibbs.free_energy(d, args.beta, n_steps=args.steps, seed=args.seed)
    _emit({"free_energy": value, "std_error": err}, args)
    return 0


def cmd_fluctuations(args):
    report = gibbs.band_fluctuation_experiment(
        args.p,
        args.n,
        args.beta,
        n_realizations=args.disorders,
        k0=args.k0,
        seed=args.seed,
    )
    _emit(report, args)
    return 0


def selftest(c_p_override=None):
    """Fast analytic identity suite; returns a list of (name, ok, detail).

    c_p_override injects a wrong slope constant so the negative-control
    path of the Parisi residual check can be exercised.
    """
    results = []

    def check(name, ok, detail=""):
        results.append((name, bool(ok), detail))

    for p in (3, 4, 5):
        q = 0.7
        s = sum(analytic.alpha(p, k, q) ** 2 for k in range(p + 1))
        check("alpha-normalization p=%d" % p, abs(s - 1.0) < 1e-12, "sum=%r" % s)
        e0 = analytic.e_zero(p)
        check("theta-root p=%d" % p, abs(analytic.theta(p, -e0)) < 1e-10)
    for p, beta in ((3, 4.0), (4, 8.0)):
        params = ModelParams(p, beta)
        b = analytic.constants(params)
        cp = analytic.c_p(p) if c_p_override is None else c_p_override
        m = cp / (beta * b.q_star**p)
        lz = analytic.lambda_z(params, b.e_zero, b.q_star)
        pr = analytic.parisi_1rsb(params, m, b.q_star**2)
        check(
            "parisi p=%d beta=%g" % (p, beta),
            abs(lz.value - pr) < 1e-8,
            "residual=%r" % abs(lz.value - pr),
        )
        check("q-order p=%d beta=%g" % (p, beta), b.q_star_star < b.q_c < b.q_star)
        h = 1e-6
        dq_fd = (
            analytic.lambda_z(params, b.e_zero, b.q_star + h).value
            - analytic.lambda_z(params, b.e_zero, b.q_star - h).value
        ) / (2 * h)
        check("stationarity p=%d beta=%g" % (p, beta), abs(dq_fd) < 1e-4)
    # p=2 free energy continuity at the transition
    for beta in (0.5, 1 / np.sqrt(2.0)):
        lo = analytic.p2_free_energy(beta - 1e-9)
        hi = analytic.p2_free_energy(beta + 1e-9)
        check("p2-continuity beta=%g" % beta, abs(hi - lo) < 1e-6)
    return results


def cmd_selftest(args):
    override = args.wrong_cp if getattr(args, "wrong_cp", None) else None
    results = selftest(c_p_override=override)
    for name, ok, detail in results:
        print("%-28s %s %s" % (name, "PASS" if ok else "FAIL", detail))
    n_fail = sum(1 for _, ok, _ in results if not ok)
    print("%d checks, %d failed" % (len(results), n_fail))
    return 0 if n_fail == 0 else 3


def build_parser():
    ap = argparse.ArgumentParser(prog="pspin", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, **kw):
        sp = sub.add_parser(name, **kw)
        sp.set_defaults(fn=fn)
        sp.add_argument("--p", type=int, default=3)
        sp.add_argument("--n", type=int, default=32)
        sp.add_argument("--beta", type=float, default=6.0)
        sp.add_argument("--beta2", type=float, default=None)
        sp.add_argument("--s", type=float, action="append", default=None)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--disorders", type=int, default=10)
        sp.add_argument("--starts", type=int, default=400)
        sp.add_argument("--steps", type=int, default=4000)
        sp.add_argument("--out", type=str, default=None)
        sp.add_argument("--k0", type=float, default=0.0)
        sp.add_argument("--cls", type=float, default=None)
        return sp

    sp = add("analytic", cmd_analytic, help="model constants and identity checks")
    sp.add_argument("--check", choices=["parisi"], default=None)
    sp = add("enumerate", cmd_enumerate, help="enumerate critical points of one disorder")
    sp.add_argument("--csv", type=str, default=None)
    sp.add_argument("--saturation", action="store_true")
    sp = add("kacrice", cmd_kacrice, help="mean critical-point count below a level")
    sp.add_argument("--emax", type=float, default=None)
    add("geometry", cmd_geometry, help="pure-state band geometry experiment")
    add("tempchaos", cmd_tempchaos, help="two-temperature overlap atoms")
    add("disorderchaos", cmd_disorderchaos, help="coupling-perturbation overlap atoms")
    add("freeenergy", cmd_freeenergy, help="free energy by thermodynamic integration")
    add("fluctuations", cmd_fluctuations, help="planted band-mass fluctuation law")
    sp = add("selftest", cmd_selftest, help="fast analytic identity suite")
    sp.add_argument("--wrong-cp", type=float, default=None, help=argparse.SUPPRESS)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except (ValidationError, ValueError) as exc:
        print("validation error: %s" % exc, file=sys.stderr)
        return 2
    except PspinError as exc:
        print("numeric failure: %s" % exc, file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
