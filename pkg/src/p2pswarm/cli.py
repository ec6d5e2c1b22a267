"""Command-line front end.

Subcommands: ``run`` (any manifest), ``nc-run``, ``mu-inf`` and ``alt-system``
(flag-driven runs of one engine), ``bounds`` (closed forms, optionally checked
by Monte-Carlo with ``--verify``) and ``drift`` (Lyapunov certificate).

Exit codes: 0 success, 2 validation failure, 3 resource cap, 4 oracle
disagreement under ``--verify``.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import analysis as an
from .core import ModelParams
from .errors import ContractError, DomainError, ResourceCapError, TruncationError
from .manifest import OUTPUT_ENV, ExperimentManifest, load
from .reporting import fmt, write_keyvalue
from .runner import run_manifest

EXIT_OK, EXIT_INVALID, EXIT_CAP, EXIT_ORACLE = 0, 2, 3, 4


class OracleDisagreement(Exception):
    pass


def _out_dir(args) -> Path:
    if getattr(args, "out", None):
        return Path(args.out)
    return Path(os.environ.get(OUTPUT_ENV, "out"))


def _emit(values: dict, path: Path) -> None:
    for k, v in values.items():
        print(f"{k} = {fmt(v)}")
    write_keyvalue(values, path)
    print(f"# written to {path}")


def _print_reports(reports) -> None:
    for rep in reports:
        print(f"[{rep.name}] engine={rep.engine} lambda={fmt(rep.lam)} replicas={len(rep.rows)} "
              f"window=[{fmt(rep.window[0])}, {fmt(rep.window[1])}]")
        for c in rep.numeric:
            print(f"  {c:<16} mean={fmt(rep.mean(c)):<14} se={fmt(rep.se(c))}")


# ---- run and the engine shortcuts -------------------------------------------------


def cmd_run(args) -> int:
    m = load(args.manifest).with_overrides(args.seed, args.replicas, args.horizon, args.max_peers)
    reports = run_manifest(m, workers=args.workers, out_dir=Path(args.out) / m.name if args.out else None)
    _print_reports(reports)
    return EXIT_OK


def _flag_manifest(args, engine: str, **extra) -> ExperimentManifest:
    name = args.name or engine
    return ExperimentManifest(
        name=name,
        engine=engine,
        K=args.K,
        lambdas=tuple(args.lam),
        mu=args.mu,
        Us=args.us,
        replicas=args.replicas,
        horizon=args.horizon,
        sample_dt=args.sample_dt,
        rng_seed=args.seed,
        outputs=str(Path("out") / name),
        **extra,
    )


def _run_flags(args, m: ExperimentManifest) -> int:
    reports = run_manifest(m, workers=args.workers, out_dir=Path(args.out) / m.name if args.out else None)
    _print_reports(reports)
    return EXIT_OK


def cmd_nc_run(args) -> int:
    init = {"initial": "one-club", "initial_size": args.initial_size} if args.initial_size else {}
    return _run_flags(args, _flag_manifest(args, "coded", q=args.q, **init))


def cmd_mu_inf(args) -> int:
    return _run_flags(args, _flag_manifest(args, "mu-infinity"))


def cmd_alt_system(args) -> int:
    init = {"initial": "one-club"}
    if args.initial_size:
        init["initial_size"] = args.initial_size
    m = _flag_manifest(args, "alt-system", **init)
    for lam in m.lambdas:
        c = an.instability_constants(m.params(lam))
        print(f"# lambda={fmt(lam)} constants: " + " ".join(f"{k}={fmt(v)}" for k, v in c.as_dict().items()))
    return _run_flags(args, m)


# ---- bounds -----------------------------------------------------------------------


def _check(ok: bool, what: str) -> None:
    print(f"verify: {what}: {'agree' if ok else 'DISAGREE'}")
    if not ok:
        raise OracleDisagreement(what)


def cmd_bounds(args) -> int:
    rng = np.random.default_rng(args.seed)
    out = _out_dir(args) / f"bounds_{args.which}.txt"
    w = args.which
    if w == "kingman":
        b = an.kingman_bound(args.drift, args.sigma2, args.B)
        vals = {"drift": args.drift, "sigma2": args.sigma2, "B": args.B, "bound": b,
                "mean_sup_bound": an.kingman_mean_bound(args.drift, args.sigma2)}
        _emit(vals, out)
        if args.verify:
            f = an.kingman_exceedance(args.drift, args.sigma2, args.B, args.horizon, args.paths, rng)
            print(f"empirical P(sup >= B) = {fmt(f)} over {args.paths} paths, horizon {fmt(args.horizon)}")
            _check(f <= b, "empirical exceedance <= bound")
    elif w == "compound":
        b = an.compound_poisson_bound(args.alpha, args.m1, args.m2, args.B, args.eps)
        _emit({"alpha": args.alpha, "m1": args.m1, "m2": args.m2, "B": args.B, "eps": args.eps, "lower_bound": b}, out)
        if args.verify:
            f = an.compound_poisson_exceedance(args.alpha, an.moment_matched_jumps(args.m1, args.m2), args.B,
                                               args.eps, args.horizon, args.paths, rng)
            print(f"empirical exceedance = {fmt(f)}; allowed 1 - bound = {fmt(1 - b)}")
            _check(f <= 1 - b, "empirical exceedance <= 1 - lower bound")
    elif w == "mginfty":
        b = an.mgi_infinity_bound(args.lam, args.m, args.B, args.eps)
        _emit({"lambda": args.lam, "m": args.m, "B": args.B, "eps": args.eps, "bound": b}, out)
        if args.verify:
            f = an.mginfty_exceedance(args.lam, an.exponential_service(args.m), args.B, args.eps, args.horizon,
                                      args.paths, rng)
            print(f"empirical exceedance = {fmt(f)} (exponential service)")
            _check(f <= b, "empirical exceedance <= bound")
    elif w == "busy":
        bp = an.busy_period_moments(args.lam, args.ex, args.ex2)
        vals = {"lambda": args.lam, "EX": args.ex, "EX2": args.ex2, "rho": bp.rho, "EN": bp.EN, "EN2": bp.EN2,
                "EL": bp.EL, "EL2": bp.EL2, "CovNL": bp.CovNL}
        _emit(vals, out)
        if args.verify:
            N, L = an.simulate_busy_periods(args.lam, an.moment_matched_jumps(args.ex, args.ex2), args.paths, rng)
            ok = True
            for name, sample, exact in (("EN", N, bp.EN), ("EL", L, bp.EL)):
                se = sample.std(ddof=1) / math.sqrt(sample.size)
                z = (sample.mean() - exact) / se if se > 0 else 0.0
                print(f"  {name}: monte-carlo {fmt(sample.mean())} +- {fmt(se)} (z = {z:.2f})")
                ok &= abs(z) <= 3
            _check(bool(ok), "busy-period means within 3 SE")
    elif w == "mu_o":
        _emit({"lambda": args.lam, "K": args.K, "mu_o": an.mu_o(args.lam, args.K)}, out)
    elif w == "constants":
        c = an.instability_constants(ModelParams(args.K, args.lam, args.mu, args.us))
        vals = c.as_dict()
        vals.update({f"check[{k}]": v for k, v in c.checks().items()})
        _emit(vals, out)
        if args.verify:
            _check(c.verify(), "all inequalities hold")
    elif w == "coeffs":
        c = an.lyapunov_coefficients(args.lam, args.us, args.K)
        vals = {f"b_{i}": v for i, v in enumerate(c.b)}
        vals.update({f"a_{i}": v for i, v in enumerate(c.a)})
        vals.update({f"check[{k}]": all(v) for k, v in c.checks().items()})
        _emit(vals, out)
        if args.verify:
            _check(c.verify(), "coefficient conditions hold exactly")
    return EXIT_OK


# ---- drift ------------------------------------------------------------------------


def cmd_drift(args) -> int:
    if args.lam >= args.us:
        print(
            f"refusing: lambda = {fmt(args.lam)} >= Us = {fmt(args.us)}. Above Us the swarm is transient "
            "(the one club grows at rate about lambda - Us) and at Us the coefficient condition "
            "Us*b_i - lambda*a_i > 0 cannot hold, so no negative-drift certificate exists.",
            file=sys.stderr,
        )
        return EXIT_INVALID
    p = ModelParams(args.K, args.lam, args.mu, args.us)
    coeffs = an.lyapunov_coefficients(args.lam, args.us, args.K)
    cert = an.drift_region_check(p, coeffs, samples=args.samples, rng=args.seed)
    vals = {"lambda": args.lam, "Us": args.us, "mu": args.mu, "K": args.K}
    vals.update({f"b_{i}": v for i, v in enumerate(coeffs.b)})
    vals.update(cert.as_dict())
    _emit(vals, _out_dir(args) / "drift_certificate.txt")
    if not cert.found:
        return EXIT_ORACLE
    print(f"worst sampled QV(x)/|x| beyond L: {fmt(cert.worst_ratio)} (required <= -{fmt(cert.epsilon)})")
    return EXIT_OK if cert.violations == 0 else EXIT_ORACLE


# ---- parser -----------------------------------------------------------------------


def _common_run(sp, K=3, lam=(1.4,), horizon=1000.0):
    sp.add_argument("--K", type=int, default=K)
    sp.add_argument("--lambda", dest="lam", type=float, nargs="+", default=list(lam))
    sp.add_argument("--mu", type=float, default=1.0)
    sp.add_argument("--us", type=float, default=1.0)
    sp.add_argument("--horizon", type=float, default=horizon)
    sp.add_argument("--sample-dt", type=float, default=1.0)
    sp.add_argument("--replicas", type=int, default=1)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--name", default=None)
    sp.add_argument("--out", default=None, help="output root (default: $%s/<name> or out/<name>)" % OUTPUT_ENV)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="p2pswarm", description=__doc__.split("\n\n")[0])
    sub = ap.add_subparsers(dest="cmd", required=True)

    sp = sub.add_parser("run", help="run an experiment manifest")
    sp.add_argument("manifest")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--replicas", type=int)
    sp.add_argument("--horizon", type=float)
    sp.add_argument("--max-peers", type=int, help="population cap; exceeding it exits with code 3")
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--out", default=None)
    sp.set_defaults(fn=cmd_run)

    sp = sub.add_parser("nc-run", help="network-coded swarm")
    _common_run(sp, K=3, lam=(0.4, 0.75))
    sp.add_argument("--q", type=int, default=2)
    sp.add_argument("--initial-size", type=int, default=0)
    sp.set_defaults(fn=cmd_nc_run)

    sp = sub.add_parser("mu-inf", help="infinite-contact-rate reduced chain")
    _common_run(sp, K=3, lam=(1.0,))
    sp.set_defaults(fn=cmd_mu_inf)

    sp = sub.add_parser("alt-system", help="modified-rate launch experiment from a one-club")
    _common_run(sp, K=3, lam=(1.4,), horizon=2000.0)
    sp.add_argument("--initial-size", type=int, default=0, help="one-club size (default: N_o)")
    sp.set_defaults(fn=cmd_alt_system)

    sp = sub.add_parser("bounds", help="closed-form bounds and constants")
    sp.add_argument("which", choices=["kingman", "compound", "mginfty", "busy", "mu_o", "constants", "coeffs"])
    sp.add_argument("--verify", action="store_true", help="check against a Monte-Carlo oracle")
    sp.add_argument("--lambda", dest="lam", type=float, default=1.0)
    sp.add_argument("--us", type=float, default=1.0)
    sp.add_argument("--mu", type=float, default=1.0)
    sp.add_argument("--K", type=int, default=3)
    sp.add_argument("--drift", type=float, default=-1.0)
    sp.add_argument("--sigma2", type=float, default=2.0)
    sp.add_argument("--B", type=float, default=10.0)
    sp.add_argument("--eps", type=float, default=1.0)
    sp.add_argument("--alpha", type=float, default=1.0)
    sp.add_argument("--m1", type=float, default=1.0)
    sp.add_argument("--m2", type=float, default=2.0)
    sp.add_argument("--m", type=float, default=1.0)
    sp.add_argument("--ex", type=float, default=1.0)
    sp.add_argument("--ex2", type=float, default=2.0)
    sp.add_argument("--paths", type=int, default=10_000)
    sp.add_argument("--horizon", type=float, default=1000.0)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default=None)
    sp.set_defaults(fn=cmd_bounds)

    sp = sub.add_parser("drift", help="negative-drift certificate for lambda < Us")
    sp.add_argument("--lambda", dest="lam", type=float, required=True)
    sp.add_argument("--us", type=float, default=1.0)
    sp.add_argument("--mu", type=float, default=1.0)
    sp.add_argument("--K", type=int, default=3)
    sp.add_argument("--samples", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default=None)
    sp.set_defaults(fn=cmd_drift)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ResourceCapError, TruncationError) as e:
        print(f"error: resource cap: {e}", file=sys.stderr)
        return EXIT_CAP
    except (ContractError, DomainError) as e:
        print(f"error: invalid input: {e}", file=sys.stderr)
        return EXIT_INVALID
    except OracleDisagreement as e:
        print(f"error: oracle disagreement: {e}", file=sys.stderr)
        return EXIT_ORACLE


if __name__ == "__main__":
    raise SystemExit(main())
