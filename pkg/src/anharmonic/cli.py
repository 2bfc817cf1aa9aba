"""Command-line interface: ``anharmonic {spectrum,decay,nonlinear,verify,clean}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import acceptance, config, store
from .estimates import NormPair, decay_profile, default_t_grid
from .families import build_family
from .modulation import ModulationEngine
from .nonlinear import (SCHEMA_VERSION, NonlinearProblem, admissibility, etd_solve, picard_solve,
                        run_manifest, smallness_search, sup_l2_gap, write_manifest, y_norm)
from .oscillator import ConvergenceError, GridBasis, HermiteBasis, asymptotic_fit, balanced_scale
from .semigroup import eigenfunction

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_CONVERGENCE, EXIT_CACHE_MISS = 0, 1, 2, 3, 4

log = logging.getLogger("anharmonic")


class CommandError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _decomposition(cfg: config.RunConfig, args):
    spec, disc = cfg.spec, cfg.disc
    if disc.basis == "hermite":
        basis = HermiteBasis(disc.N, balanced_scale(spec, disc.N))
    else:
        basis = GridBasis(disc.L, disc.M)
    try:
        return store.cached_decomposition(spec, basis, args.cache, no_compute=args.no_compute,
                                          refine=disc.refine)
    except store.CacheMiss as exc:
        raise CommandError(EXIT_CACHE_MISS, str(exc)) from exc


def _out_dir(cfg, args) -> Path:
    out = Path(args.out or cfg.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _seed(cfg, args):
    seed = args.seed if args.seed is not None else cfg.seed
    if seed is None:
        raise CommandError(EXIT_CONFIG, "a seed is required for randomized families "
                                        "(experiment.seed or --seed)")
    return seed


def _dump(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    raise TypeError(f"not serializable: {type(v)}")


def _num(v):
    return "inf" if isinstance(v, float) and math.isinf(v) else v


def cmd_spectrum(cfg, args) -> int:
    d = _decomposition(cfg, args)
    out = _out_dir(cfg, args)
    with open(out / "spectrum.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["j", "lambda_j"])
        for j, lam in enumerate(d.trusted_eigenvalues):
            w.writerow([j, repr(float(lam))])
    record = {"schema_version": SCHEMA_VERSION, "k": d.spec.k, "ell": d.spec.ell,
              "basis": d.basis.key(), "trusted_count": d.trusted_count,
              "predicted_exponent": d.spec.weyl_exponent}
    window = cfg.experiment.get("fit_window")
    if window is not None:
        lo, hi = window
        if hi > d.trusted_count:
            raise CommandError(EXIT_CONVERGENCE, f"fit window end {hi} exceeds the "
                                                 f"{d.trusted_count} trusted modes")
        record["fit"] = asymptotic_fit(d, lo, hi).to_dict()
    _dump(out / "fit.json", record)
    print(f"{d.trusted_count} trusted eigenvalues written to {out / 'spectrum.csv'}")
    if "fit" in record:
        print(f"fitted exponent {record['fit']['slope']:.6f} "
              f"(predicted {record['predicted_exponent']:.6f})")
    return EXIT_OK


def cmd_decay(cfg, args) -> int:
    if not cfg.pairs:
        raise CommandError(EXIT_CONFIG, "decay needs at least one entry in norms.pairs")
    seed = _seed(cfg, args)
    d = _decomposition(cfg, args)
    gamma = cfg.spec.gamma
    exp = cfg.experiment
    if "times" in exp:
        t = np.asarray(exp["times"])
    else:
        t = default_t_grid(exp.get("t_short", 16), exp.get("t_long", 19))
    try:
        family = build_family(d, exp.get("family_size", 48), seed=seed)
    except ValueError as exc:
        raise CommandError(EXIT_CONVERGENCE, str(exc)) from exc
    engine = ModulationEngine(d)
    out = _out_dir(cfg, args)
    summaries = []
    for i, pr in enumerate(cfg.pairs):
        pair = NormPair(*pr)
        fit = decay_profile(d, gamma, pair, family, t_grid=t, engine=engine)
        fit.to_csv(out / f"decay_{i}.csv")
        s = fit.summary()
        s["pair"] = [_num(v) for v in pr]
        summaries.append(s)
        print(f"pair {pr}: sigma_predicted {fit.sigma_predicted:.6g}, short slope "
              f"{fit.short_slope:.4f}, long rate {fit.long_rate:.6f}")
    _dump(out / "decay.json", {"schema_version": SCHEMA_VERSION, "seed": seed,
                               "family_size": len(family), "pairs": summaries})
    return EXIT_OK


def cmd_nonlinear(cfg, args) -> int:
    exp = cfg.experiment
    d = None
    beta = exp.get("beta", 1)
    lam = exp.get("lambda", 1.0)
    p, q = exp.get("p", 2.0), exp.get("q", 1.5)
    T, steps = exp.get("T", 10.0), exp.get("steps", 100)
    # admissibility is arithmetic, checked before the eigensolve
    probe = NonlinearProblem(cfg.spec, beta, lam, None, p, q, T, steps)
    adm = admissibility(probe)
    if not adm.ok:
        raise CommandError(EXIT_CONFIG, f"inadmissible problem: {adm.reason}")
    d = _decomposition(cfg, args)
    engine = ModulationEngine(d)
    mode = exp.get("u0_mode", 0)
    if mode >= d.trusted_count:
        raise CommandError(EXIT_CONFIG, f"experiment.u0_mode={mode} is not a trusted mode")
    phi = eigenfunction(d, mode)
    phi = phi.scaled(1.0 / engine.norm(phi, p, q))
    template = NonlinearProblem(cfg.spec, beta, lam, phi, p, q, T, steps)
    substeps = exp.get("substeps", 20)
    search_log = None
    if "epsilon" in exp:
        eps = exp["epsilon"]
    else:
        try:
            res = smallness_search(template, d, engine=engine, substeps=substeps)
        except RuntimeError as exc:
            raise CommandError(EXIT_CONVERGENCE, str(exc)) from exc
        eps, search_log = res.epsilon, res.log
    problem = template.with_data(phi.scaled(eps))
    traj, rep = picard_solve(problem, d, tol=exp.get("tol", 1e-10), engine=engine,
                             substeps=substeps)
    etd = etd_solve(problem, d)
    out = _out_dir(cfg, args)
    traj.to_csv(out / "trajectory_picard.csv")
    etd.to_csv(out / "trajectory_etd.csv")
    norms = {"epsilon": eps, "radius": rep.radius}
    if traj.status != "BLOWUP":
        norms["y_norm"] = y_norm(traj, d.lambda0, cfg.spec.gamma, p, q, engine)
    gap = sup_l2_gap(traj, etd) if np.all(np.isfinite(etd.states)) else math.inf
    norms["picard_etd_gap"] = gap
    extra = {"admissibility": {"sigma": adm.sigma, "r": _num(adm.r)},
             "contraction": rep.to_dict(), "etd_drift": [list(h) for h in etd.drift_history]}
    if search_log is not None:
        extra["smallness_search"] = [list(e) for e in search_log]
    manifest = run_manifest(problem, {"picard": traj.status, "etd": etd.status}, norms, extra)
    manifest["problem"]["u0_mode"] = mode
    write_manifest(out / "contraction.json", manifest)
    print(f"eps {eps:g}: picard {traj.status} (factor {rep.contraction_factor:.3g}), "
          f"etd {etd.status}, gap {gap:.2e}")
    return EXIT_OK if traj.status == "SUCCESS" else EXIT_CONVERGENCE


def cmd_verify(args) -> int:
    if args.list:
        for n, title in acceptance.list_criteria():
            print(f"{n:2d}  {title}")
        return EXIT_OK
    seed = args.seed if args.seed is not None else acceptance.DEFAULT_SEED
    ctx = acceptance.Context(seed=seed, cache=args.cache, faults=frozenset(args.inject_fault or ()))
    print(f"seed {seed}")
    results = acceptance.run_all(ctx, only=set(args.only) if args.only else None)
    failed = [n for n, r in results.items() if not r.passed]
    if failed:
        print("FAILED criteria: " + ", ".join(str(n) for n in failed))
        return EXIT_FAIL
    print(f"all {len(results)} criteria passed")
    return EXIT_OK


def cmd_clean(args) -> int:
    n = store.clean(args.cache)
    print(f"removed {n} cache file(s) from {store.cache_root(args.cache)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--cache", metavar="DIR", help="cache root (default $ANHARMONIC_CACHE)")
    common.add_argument("--seed", type=int, metavar="U64")
    common.add_argument("-v", "--verbose", action="store_true")

    run = argparse.ArgumentParser(add_help=False, parents=[common])
    run.add_argument("--config", required=True, metavar="PATH")
    run.add_argument("--out", metavar="DIR")
    run.add_argument("--no-compute", action="store_true",
                     help="fail with exit 4 instead of computing a missing decomposition")

    parser = argparse.ArgumentParser(prog="anharmonic", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", parents=[run], help="eigenvalues and growth-exponent fit")
    sub.add_parser("decay", parents=[run], help="propagator decay profiles")
    sub.add_parser("nonlinear", parents=[run], help="semilinear small-data run")
    v = sub.add_parser("verify", parents=[common], help="run the acceptance suite")
    v.add_argument("--config", metavar="PATH", help="accepted for symmetry; unused")
    v.add_argument("--list", action="store_true", help="list criteria without running")
    v.add_argument("--only", type=int, nargs="+", metavar="N")
    v.add_argument("--inject-fault", action="append", choices=acceptance.FAULTS,
                   help=argparse.SUPPRESS)
    sub.add_parser("clean", parents=[common], help="delete cached decompositions")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "verify":
            return cmd_verify(args)
        if args.command == "clean":
            return cmd_clean(args)
        cfg = config.load(args.config)
        return {"spectrum": cmd_spectrum, "decay": cmd_decay,
                "nonlinear": cmd_nonlinear}[args.command](cfg, args)
    except config.ConfigError as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CommandError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ConvergenceError as exc:
        print(f"error: convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except store.CacheError as exc:
        print(f"error: cache: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
