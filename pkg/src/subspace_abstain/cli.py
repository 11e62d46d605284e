"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 runtime or convergence error.
Every JSON document carries the resolved configuration and the package
version, and nothing time-dependent, so equal arguments give equal bytes.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .attack import approx_attack, critical_threshold, exact_attack
from .bounds import (BoundInputs, coverage_sample_bound, improved_bound, thm2_bound,
                     toy_abstention, toy_optimal_tau_report, toy_robust_accuracy)
from .classifier import (PointSpecificModel, build_model, predict,
                         predict_point_specific, save_model, load_model)
from .data import (LabeledDataset, ToyGeometry, gen_gaussian_clusters, gen_toy_segments,
                   load_dataset, random_split, save_dataset)
from .errors import (ConfigError, ContractError, DimensionError, EmptyModelError,
                     NonConvergedError, ParseError)
from .geometry import KappaBoundedSubspaceConfig, sample_uniform_subspace, sample_uniform_subspaces, sphere_cap_fraction
from .metrics import curves_vs_tau, robust_error_mc
from .rng import derive_seed, make_rng
from .tuner import online_to_batch, run_online

RUNTIME_ERRORS = (ParseError, ContractError, ConfigError, DimensionError, EmptyModelError,
                  NonConvergedError, OSError, ValueError, np.linalg.LinAlgError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise UsageError(message)


def _dump(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False)


def _emit(doc, out: str | None):
    text = _dump(doc) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _finite(v):
    return v if math.isfinite(v) else None


def _resolved(args, skip=("func",)) -> dict:
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in skip:
            continue
        if isinstance(v, float) and not math.isfinite(v):
            v = repr(v)
        out[k] = v
    return out


def _envelope(kind: str, args, payload: dict) -> dict:
    return {"kind": kind, "version": __version__, "config": _resolved(args), **payload}


# ---- subcommands ----

def cmd_gen(args):
    if args.toy:
        for name in ("D", "r", "m"):
            if getattr(args, name) is None:
                raise UsageError(f"--toy needs --{name}")
        ds = gen_toy_segments(ToyGeometry(args.D, args.r, args.m, args.c), args.seed)
    else:
        if args.n2 is None:
            raise UsageError("cluster generation needs --n2")
        centers = np.zeros((args.classes, args.n2))
        centers[:, 0] = args.separation * np.arange(args.classes)
        ds = gen_gaussian_clusters(args.n2, args.per_class, centers, args.stddev, args.seed)
    save_dataset(ds, args.out)
    _emit(_envelope("gen", args, {"rows": len(ds), "n2": ds.dim}), None)


def _model_from_args(args):
    if getattr(args, "model", None):
        return load_model(args.model)
    if not args.data or args.tau is None:
        raise UsageError("need --model, or --data with --tau")
    return build_model(load_dataset(args.data), args.tau, args.sigma)


def cmd_preprocess(args):
    ds = load_dataset(args.data)
    model = build_model(ds, math.inf if args.tau is None else args.tau, args.sigma)
    if args.out:
        save_dataset(model.train, args.out)
    if args.model_out:
        save_model(model, args.model_out, dataset_path=str(Path(args.data).resolve()))
    _emit(_envelope("preprocess", args, {"removed_indices": list(model.removed_indices),
                                         "kept": len(model.train),
                                         "label_names": list(ds.label_names or [])}), None)


def cmd_predict(args):
    pts = load_dataset(args.points)
    lines = []
    if args.point_specific:
        ds = load_dataset(args.data)
        if args.split_seed is None:
            raise UsageError("--point-specific needs --split-seed")
        a, b = random_split(ds, args.split_seed)
        psm = PointSpecificModel.fit(a, b)
        preds = [predict_point_specific(psm, x) for x in pts.features]
        extra = {"unbounded_indices": list(psm.unbounded_indices)}
    else:
        model = _model_from_args(args)
        preds = [predict(model, x) for x in pts.features]
        extra = {}
    for i, p in enumerate(preds):
        lines.append({"index": i, "prediction": p})
    _emit(_envelope("predict", args, {"predictions": lines, **extra}), args.out)


def cmd_attack(args):
    model = _model_from_args(args)
    test = load_dataset(args.test)
    out = []
    for a in range(len(test)):
        x, y = test.features[a], int(test.labels[a])
        for t in range(args.trials):
            sseed = derive_seed(args.seed, a, t)
            S = sample_uniform_subspace(test.dim, args.n3, sseed)
            if args.method == "exact":
                res = exact_attack(model, x, y, S)
            else:
                res = approx_attack(model, x, y, S)
            rec = {"point_index": a, "subspace_seed": sseed,
                   "result": "success" if res.success else "no_adversarial_example"}
            if res.success:
                rec["adv_point"] = [float(v) for v in res.adv_point]
            if args.method == "exact":
                rec["tau_crit"] = _finite(critical_threshold(model, x, y, S))
            out.append(rec)
    text = "".join(json.dumps(r, sort_keys=True) + "\n" for r in out)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _adversary(args, dim):
    if args.adversary == "uniform":
        return None
    axis = np.zeros(dim)
    axis[0] = 1.0
    if args.cone_axis:
        axis = np.array([float(v) for v in args.cone_axis.split(",")])
    return KappaBoundedSubspaceConfig.with_cone_mass(dim, args.n3, args.mixture_weight, axis,
                                                     args.cone_mass)


def cmd_eval(args):
    model = _model_from_args(args)
    test = load_dataset(args.test)
    adv = _adversary(args, test.dim)
    rep = robust_error_mc(model, test, args.n3, args.trials, args.seed, adversary=adv,
                          threads=args.threads, exact_ci=args.exact_ci)
    payload = {"report": rep.to_dict()}
    if adv is not None:
        payload["kappa"] = adv.kappa
    _emit(_envelope("eval", args, payload), args.out)


def cmd_curve(args):
    train = load_dataset(args.data)
    test = load_dataset(args.test)
    bases = list(sample_uniform_subspaces(test.dim, args.n3, args.subspaces, make_rng(args.seed)))
    domain = None if args.hi is None else (args.lo, args.hi)
    cv = curves_vs_tau(train, args.sigma, test, bases, args.c, domain=domain, threads=args.threads)
    cuts = np.unique(np.concatenate([[cv.g.lo], cv.e_adv.breakpoints, cv.d_nat.breakpoints]))
    rows = ["tau,e_adv,d_nat,g"]
    for tau in cuts:
        # value on the piece starting at tau (just to the right of a breakpoint)
        nxt = cuts[cuts > tau]
        probe = 0.5 * (tau + (nxt[0] if nxt.size else cv.g.hi))
        rows.append(",".join(repr(float(v)) for v in
                             (tau, cv.e_adv(probe), cv.d_nat(probe), cv.g(probe))))
    text = "\n".join(rows) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _stream(test: LabeledDataset, rounds: int, batch: int, seed: int):
    if rounds * batch <= len(test):
        return [test.subset(np.arange(t * batch, (t + 1) * batch)) for t in range(rounds)]
    return [test.subset(make_rng(seed, t, 2).integers(0, len(test), batch)) for t in range(rounds)]


def cmd_tune(args):
    train = load_dataset(args.data)
    test = load_dataset(args.test)
    stream = _stream(test, args.rounds, args.batch, args.seed)
    domain = None if args.hi is None else (args.lo, args.hi)
    run = run_online(train, args.sigma, stream, args.n3, args.subspaces_per_batch, args.c,
                     args.seed, lam=args.lam, domain=domain, threads=args.threads)
    # validation curve: the average of the per-round objectives
    gbar = run.g_curves[0]
    for g in run.g_curves[1:]:
        gbar = gbar + g
    gbar = gbar * (1.0 / len(run.g_curves))
    conv = online_to_batch(run.tau_history, gbar)
    payload = {
        "tau_history": run.tau_history,
        "regret_curve": run.regret_curve,
        "tau_hat": {"support": conv.support, "probabilities": conv.probabilities},
        "expected_g": conv.expected_g,
        "best_g": conv.best_g,
        "gap": conv.gap,
        "lambda": run.lam,
        "domain": list(run.domain),
    }
    _emit(_envelope("tune", args, payload), args.out)
    if args.utility_csv:
        f = run.cumulative_utility
        rows = ["tau_left,tau_right,cumulative_utility"]
        rows += [f"{lo!r},{hi!r},{v!r}" for lo, hi, v in f.pieces()]
        Path(args.utility_csv).write_text("\n".join(rows) + "\n")


def cmd_bounds(args):
    from .verify import mc_single_point_success, mc_sphere_cap
    rows = []
    for n, k, eps in [(5, 1, 0.1), (10, 1, 0.3), (10, 3, 0.3)]:
        est = mc_sphere_cap(n, k, eps, args.trials, derive_seed(args.seed, n, k))
        val = sphere_cap_fraction(n, k, eps)
        lo, hi = est.interval
        rows.append({"bound_name": "sphere_cap_fraction", "inputs": {"n": n, "k": k, "eps": eps},
                     "value": val, "empirical": est.p, "ci": [lo, hi],
                     "pass": bool(lo <= val <= hi and val <= sphere_cap_fraction(n, k, eps, "upper_bound"))})
    for n2, ratio in [(3, 0.2), (4, 0.3), (8, 0.05)]:
        est = mc_single_point_success(n2, 1, ratio, args.trials, derive_seed(args.seed, 100 + n2))
        val = improved_bound(1, ratio, 1.0, n2, 1)
        lo, hi = est.interval
        rows.append({"bound_name": "improved_bound", "inputs": {"m": 1, "tau_over_r": ratio, "n2": n2, "n3": 1},
                     "value": val, "empirical": est.p, "ci": [lo, hi],
                     "exact_cap": sphere_cap_fraction(n2, n2 - 1, ratio),
                     "pass": bool(lo <= val * 1.05)})
    b = BoundInputs(m=1, tau=0.1, r=1.0, n2=10, n3=2)
    rows.append({"bound_name": "thm2_bound", "inputs": {"m": 1, "tau": 0.1, "r": 1.0, "n2": 10, "n3": 2},
                 "value": thm2_bound(b), "empirical": None, "ci": None, "pass": None,
                 "note": "absolute constants set to defaults; order of magnitude only"})
    rows.append({"bound_name": "coverage_sample_bound", "inputs": {"n2": 2, "N": 10, "beta": 0.5},
                 "value": coverage_sample_bound(2, 10, 0.5), "empirical": None, "ci": None, "pass": None})
    _emit(_envelope("bounds", args, {"rows": rows}), args.out)


def cmd_toy(args):
    rep = toy_optimal_tau_report(args.D, args.r, args.m, args.c, args.convention)
    tau = rep.tau
    payload = {
        "tau_star": tau,
        "scale": _finite(rep.scale),
        "ratio": _finite(rep.ratio),
        "zero_case": rep.zero_case,
        "abstention_at_tau_star": toy_abstention(tau, args.D, args.m),
        "robust_accuracy_at_tau_star": toy_robust_accuracy(min(tau, args.D), args.D, args.r, args.m,
                                                           args.convention),
    }
    _emit(_envelope("toy", args, payload), args.out)


# ---- parser ----

def _add_model_args(p, need_tau=True):
    p.add_argument("--model", help="model JSON")
    p.add_argument("--data", help="training CSV")
    p.add_argument("--tau", type=float)
    p.add_argument("--sigma", type=float, default=0.0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="subspace-abstain", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="generate a synthetic dataset")
    p.add_argument("--toy", action="store_true", help="two-segment toy geometry")
    p.add_argument("--D", type=float)
    p.add_argument("--r", type=float)
    p.add_argument("--m", type=int)
    p.add_argument("--c", type=float, default=0.5)
    p.add_argument("--n2", type=int)
    p.add_argument("--classes", type=int, default=2)
    p.add_argument("--per-class", type=int, default=50)
    p.add_argument("--separation", type=float, default=10.0)
    p.add_argument("--stddev", type=float, default=1.0)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("preprocess", help="remove points with a close differently-labelled neighbour")
    p.add_argument("--data", required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--tau", type=float)
    p.add_argument("--out")
    p.add_argument("--model-out")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("predict", help="classify points (with abstention)")
    _add_model_args(p)
    p.add_argument("--points", required=True)
    p.add_argument("--point-specific", action="store_true")
    p.add_argument("--split-seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("attack", help="attack test points in random subspaces")
    _add_model_args(p)
    p.add_argument("--test", required=True)
    p.add_argument("--n3", type=int, required=True)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--method", choices=("exact", "approx"), default="exact")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("eval", help="natural error, abstention and Monte Carlo robust error")
    _add_model_args(p)
    p.add_argument("--test", required=True)
    p.add_argument("--n3", type=int, required=True)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--adversary", choices=("uniform", "kappa"), default="uniform")
    p.add_argument("--mixture-weight", type=float, default=0.5)
    p.add_argument("--cone-mass", type=float, default=0.1)
    p.add_argument("--cone-axis", help="comma-separated axis (default e_1)")
    p.add_argument("--exact-ci", action="store_true")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("curve", help="exact E_adv, D_nat and g as functions of tau (CSV)")
    p.add_argument("--data", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--n3", type=int, required=True)
    p.add_argument("--subspaces", type=int, default=10)
    p.add_argument("--c", type=float, default=0.5)
    p.add_argument("--lo", type=float, default=0.0)
    p.add_argument("--hi", type=float)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("tune", help="online threshold selection")
    p.add_argument("--data", required=True)
    p.add_argument("--test", required=True, help="pool the stream batches are drawn from")
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--rounds", type=int, required=True)
    p.add_argument("--batch", type=int, default=20)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--c", type=float, default=0.5)
    p.add_argument("--n3", type=int, required=True)
    p.add_argument("--subspaces-per-batch", type=int, default=1)
    p.add_argument("--lo", type=float, default=0.0)
    p.add_argument("--hi", type=float)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")
    p.add_argument("--utility-csv")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("bounds", help="closed-form bounds next to Monte Carlo estimates")
    p.add_argument("--trials", type=int, default=200_000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("toy", help="optimal threshold of the two-segment model")
    p.add_argument("--D", type=float, required=True)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--c", type=float, default=0.5)
    p.add_argument("--convention", choices=("directed_ray", "full_line"), default="directed_ray")
    p.add_argument("--out")
    p.set_defaults(func=cmd_toy)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError:
        return 1
    except SystemExit as e:  # --help / --version
        return int(e.code or 0)
    try:
        args.func(args)
    except UsageError as e:
        sys.stderr.write(f"usage error: {e}\n")
        return 1
    except RUNTIME_ERRORS as e:
        sys.stderr.write(f"error: {e}\n")
        return 2
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
