"""Command-line entry point: ``chromopaint <command> [options]``.

Every file written is accompanied by ``<file>.manifest.json`` holding the
exact argument list, so ``chromopaint replay <manifest>`` regenerates it.
All randomness derives from ``--seed`` (default ``$CHROMOPAINT_SEED`` or 0).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, exactarg, moran, scenario, simulate, stats, thetainfty, validate
from .partitions import LociSet, SetPartition, SizeLimitError, order_of

SEED_ENV = "CHROMOPAINT_SEED"
MAX_WORK = 1e9          # guard on R * replicates for sim-interval


class CliError(Exception):
    pass


@dataclass
class RunManifest:
    command: str
    params: dict
    seed: int | None
    version: str
    argv: list[str]
    outputs: list[str] = field(default_factory=list)
    timestamp: str = ""

    def write(self, path: Path) -> None:
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")

    @classmethod
    def read(cls, path) -> "RunManifest":
        return cls(**json.loads(Path(path).read_text()))


def _num(v: float) -> str:
    return f"{float(v):.17g}"


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise CliError(f"${SEED_ENV} must be an integer, got {raw!r}") from None


def _parse_loci(text: str) -> LociSet:
    try:
        return LociSet.parse(text)
    except ValueError as exc:
        raise CliError(f"bad --loci {text!r}: {exc}. Expected strictly increasing numbers like 0,1,3") from None


def _positive(name: str, value: float) -> float:
    if not (value > 0 and math.isfinite(value)):
        raise CliError(f"{name} must be a positive finite number, got {value}")
    return value


def _render_rows(header: list[str], rows: list[list], fmt: str) -> str:
    if fmt == "json":
        return json.dumps([dict(zip(header, r)) for r in rows], indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_num(v) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


class _Outputs:
    """Collects files written by a command so the manifest can list them."""

    def __init__(self, args):
        self.args = args
        self.paths: list[str] = []

    def emit(self, text: str, path: str | None) -> None:
        if path is None:
            sys.stdout.write(text)
            return
        p = Path(path)
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text)
        self.paths.append(str(p))

    def finish(self, argv: list[str]) -> None:
        if not self.paths:
            return
        params = {k: v for k, v in vars(self.args).items() if k != "func"}
        argv = list(argv)
        if "seed" in params and "--seed" not in argv:
            argv += ["--seed", str(params["seed"])]     # pin a seed that came from the environment
        man = RunManifest(
            command=self.args.command,
            params=params,
            seed=params.get("seed"),
            version=__version__,
            argv=list(argv),
            outputs=list(self.paths),
            timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        )
        for p in self.paths:
            man.write(Path(p + ".manifest.json"))


# ---------------------------------------------------------------------------
# commands


def cmd_exact(args, out: _Outputs) -> int:
    z = _parse_loci(args.loci)
    rho = _positive("--rho", args.rho)
    table = exactarg.stationary_exact(z, rho)
    if args.format == "csv":
        text = table.to_csv()
    else:
        text = _render_rows(["partition", "probability"],
                            [[str(s), float(p)] for s, p in zip(table.states, table.probabilities)], "json")
    out.emit(text, args.out)
    return 0


def cmd_approx(args, out: _Outputs) -> int:
    z = _parse_loci(args.loci)
    rho = _positive("--rho", args.rho)
    exact = exactarg.stationary_exact(z, rho)
    approx = scenario.approx_table(z, rho)
    rows = []
    for s, p in zip(exact.states, exact.probabilities):
        a = approx[s]
        rows.append([str(s), order_of(s), float(p), float(a), abs(p - a) / abs(a) if a != 0 else math.inf])
    out.emit(_render_rows(["partition", "order", "exact", "approx", "rel_error"], rows, args.format), args.out)
    return 0


def _summary(ens: simulate.EnsembleResult) -> dict:
    cfg = ens.cfg
    n = ens.replicates
    x = ens.leftmost_rescaled
    summary = {
        "replicates": n,
        "R": cfg.R,
        "rho": cfg.rho,
        "t_burn": cfg.t_burn,
        "seed": cfg.seed,
        "leftmost_rescaled_mean": float(x.mean()),
        "leftmost_rescaled_se": stats.empirical_moment(x, 1)[1] if n > 1 else None,
        "segments_mean": float(ens.segments_total.mean()),
        "segments_expected": 1 + cfg.rho * cfg.R,
        "max_drift": ens.max_drift,
    }
    if n > 1:
        summary["ks_exp1"] = stats.ks_test(x, stats.exponential_cdf(1.0)).to_dict()
        summary["ks_skipped"] = False
    else:
        summary["ks_exp1"] = None
        summary["ks_skipped"] = True
    wins = []
    for w, (a, b) in enumerate(ens.windows):
        m1, s1 = stats.empirical_moment(ens.theta[:, w], 1)
        m2, s2 = stats.empirical_moment(ens.theta[:, w], 2)
        wins.append({
            "window": [a, b],
            "mean": m1, "mean_se": None if n == 1 else s1,
            "second_moment": m2, "second_moment_se": None if n == 1 else s2,
            "limit_mean": b - a, "limit_second_moment": 2 * b * (b - a),
        })
    summary["theta_windows"] = wins
    # stationarity diagnostic: mean segment count on each half of [0, R) is 1 + rho R / 2
    halves = ens.segments_halves
    expected = 1 + cfg.rho * cfg.R / 2
    diag = {"expected": expected, "means": halves.mean(axis=0).tolist()}
    if n > 1:
        se = halves.std(axis=0, ddof=1) / math.sqrt(n)
        diag["std_err"] = se.tolist()
        diag["within_3se"] = bool(np.all(np.abs(halves.mean(axis=0) - expected) <= 3 * se))
    summary["segment_halves"] = diag
    return summary


def cmd_sim_interval(args, out: _Outputs) -> int:
    if args.replicates < 1:
        raise CliError("--replicates must be at least 1")
    if args.R * args.replicates > MAX_WORK and not args.force:
        raise CliError(f"R * replicates = {args.R * args.replicates:.3g} exceeds {MAX_WORK:.0e}; "
                       "lower them or pass --force")
    if args.threads < 1:
        raise CliError("--threads must be at least 1")
    try:
        windows = simulate.parse_windows(args.windows)
        cfg = simulate.SimConfig(rho=args.rho, R=args.R, t_burn=args.t_burn,
                                 t_max=max(args.t_burn, args.t_max or 0.0), seed=args.seed)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    if not windows:
        raise CliError("--windows needs at least one a:b pair")
    ens = simulate.equilibrium_ensemble(cfg, args.replicates, windows, threads=args.threads)

    header = ["replicate", "R", "rho", "t_burn", "leftmost_raw", "leftmost_rescaled", "segments_total",
              "theta_a", "theta_b", "theta_mass"]
    rows = []
    for i in range(ens.replicates):
        head = [i, float(cfg.R), float(cfg.rho), float(cfg.t_burn), float(ens.leftmost_raw[i]),
                float(ens.leftmost_rescaled[i]), int(ens.segments_total[i])]
        for (a, b), mass in zip(windows, ens.theta[i]):
            rows.append(head + [float(a), float(b), float(mass)])
    out.emit(_render_rows(header, rows, args.format), args.out)

    summary = json.dumps(validate._jsonable(_summary(ens)), indent=2, sort_keys=True) + "\n"
    if args.summary:
        out.emit(summary, args.summary)
    elif args.out:
        out.emit(summary, args.out + ".summary.json")
    else:
        sys.stderr.write(summary)
    return 0


def cmd_sim_arg(args, out: _Outputs) -> int:
    z = _parse_loci(args.loci)
    rho = _positive("--rho", args.rho)
    t_max = _positive("--t-max", args.t_max or 1e4)
    start = SetPartition.singletons(z.n)
    traj = simulate.simulate_arg(z, rho, start, t_max, args.seed)
    occ, se = stats.batch_occupancy(traj.times, traj.idx, t_max, len(traj.states))
    exact = exactarg.stationary_exact(z, rho).probabilities
    rows = [[str(s), float(o), float(e), float(p)] for s, o, e, p in zip(traj.states, occ, se, exact)]
    out.emit(_render_rows(["partition", "occupancy", "std_err", "exact"], rows, args.format), args.out)
    return 0


def cmd_theta(args, out: _Outputs) -> int:
    trunc = args.trunc
    if not 0 < trunc < 1:
        raise CliError(f"--trunc must lie in (0, 1), got {trunc}")
    if args.replicates == 1:
        atoms = thetainfty.sample_theta_infty(trunc, args.seed)
        out.emit(atoms.to_json() + "\n", args.out)
        return 0
    if args.replicates < 2:
        raise CliError("--replicates must be at least 1")
    res = validate.theta_moments(samples=args.replicates, x_trunc=trunc, seed=args.seed)
    rows = []
    for r in res.details["rows"]:
        rows.append([";".join(f"{a:g}:{b:g}" for a, b in r["intervals"]),
                     ";".join(str(p) for p in r["powers"]),
                     float(r["analytic"]), float(r["monte_carlo"]), float(r["std_err"])])
    out.emit(_render_rows(["intervals", "powers", "analytic", "monte_carlo", "std_err"], rows, args.format),
             args.out)
    return 0


def cmd_moran(args, out: _Outputs) -> int:
    try:
        pop = moran.Population.painted(args.N, args.R, args.rho)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    res = moran.run_to_fixation(pop, args.max_events, args.seed)
    out.emit(json.dumps(res.to_dict(), indent=2) + "\n", args.out)
    if args.snapshot:
        rows = [[i, float(a), float(b), c]
                for i, m in enumerate(pop.individuals) for a, b, c in m.segments(pop.R)]
        out.emit(_render_rows(["individual", "seg_start", "seg_end", "color"], rows, "csv"), args.snapshot)
    return 0


def cmd_duality(args, out: _Outputs) -> int:
    z = _parse_loci(args.loci)
    rho = _positive("--rho", args.rho)
    rho_N = 2 * rho / args.N
    try:
        res = moran.duality_check(args.N, args.R, rho_N, z, args.t_max, args.replicates, args.seed)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    out.emit(json.dumps(validate._jsonable(res.to_dict()), indent=2) + "\n", args.out)
    return 0


def cmd_validate(args, out: _Outputs) -> int:
    results = validate.run_suite(args.level, threads=args.threads, seed_offset=args.seed,
                                 echo=lambda line: print(line, file=sys.stderr))
    report = {
        "level": args.level,
        "version": __version__,
        "seed_offset": args.seed,
        "passed": all(r.passed for r in results),
        "criteria": [r.to_dict() for r in results],
    }
    out.emit(json.dumps(report, indent=2) + "\n", args.out)
    return 0 if report["passed"] else 1


def cmd_replay(args, out: _Outputs) -> int:
    man = RunManifest.read(args.manifest)
    argv = list(man.argv)
    if args.out:
        if "--out" not in argv:
            raise CliError("the manifest run wrote to stdout; --out cannot be redirected")
        argv[argv.index("--out") + 1] = args.out
    if man.version != __version__:
        print(f"warning: manifest written by version {man.version}, running {__version__}", file=sys.stderr)
    return main(argv)


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chromopaint", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True, fmt=True):
        p.add_argument("--out", help="output file (default: stdout)")
        if fmt:
            p.add_argument("--format", choices=("csv", "json"), default="csv")
        if seed:
            p.add_argument("--seed", type=int, default=None, help=f"base seed (default ${SEED_ENV} or 0)")

    p = sub.add_parser("exact", help="exact stationary law of the ARG on a loci set")
    p.add_argument("--loci", required=True, help="strictly increasing positions, e.g. 0,1,3")
    p.add_argument("--rho", type=float, required=True)
    common(p, seed=False)
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("approx", help="large-rho approximation next to the exact law")
    p.add_argument("--loci", required=True)
    p.add_argument("--rho", type=float, required=True)
    common(p, seed=False)
    p.set_defaults(func=cmd_approx)

    p = sub.add_parser("sim-interval", help="equilibrium ensemble of the interval process on [0, R)")
    p.add_argument("--R", type=float, required=True)
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--t-burn", type=float, default=20.0)
    p.add_argument("--t-max", type=float, default=None)
    p.add_argument("--replicates", type=int, default=100)
    p.add_argument("--windows", default="0:1", help="log-scale windows a:b,... with 0 <= a <= b <= 1")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--summary", help="summary JSON path (default: <out>.summary.json)")
    p.add_argument("--force", action="store_true", help="skip the R * replicates guard")
    common(p)
    p.set_defaults(func=cmd_sim_interval)

    p = sub.add_parser("sim-arg", help="time-average occupancy of one long ARG trajectory")
    p.add_argument("--loci", required=True)
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--t-max", type=float, default=1e4)
    common(p)
    p.set_defaults(func=cmd_sim_arg)

    p = sub.add_parser("theta", help="sample the limit point process or tabulate its moments")
    p.add_argument("--trunc", type=float, default=thetainfty.DEFAULT_TRUNC)
    p.add_argument("--replicates", type=int, default=1,
                   help="1 dumps one sample's atoms as JSON; more gives a moment table")
    common(p)
    p.set_defaults(func=cmd_theta)

    p = sub.add_parser("moran", help="run the forward Moran model to fixation")
    p.add_argument("--N", type=int, default=5)
    p.add_argument("--R", type=float, default=3.0)
    p.add_argument("--rho", type=float, default=0.1, help="per-unit recombination probability rho_N")
    p.add_argument("--max-events", type=int, default=10**7)
    p.add_argument("--snapshot", help="CSV of the final population's mosaics")
    common(p, fmt=False)
    p.set_defaults(func=cmd_moran)

    p = sub.add_parser("duality", help="compare Moran colors at loci with the ARG law")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--R", type=float, required=True)
    p.add_argument("--loci", required=True)
    p.add_argument("--rho", type=float, required=True, help="matched ARG rate; rho_N = 2 rho / N")
    p.add_argument("--t-max", type=float, default=None, help="model time (default: run to fixation)")
    p.add_argument("--replicates", type=int, default=1000)
    common(p, fmt=False)
    p.set_defaults(func=cmd_duality)

    p = sub.add_parser("validate", help="run the acceptance checks and write a JSON report")
    p.add_argument("--level", choices=("quick", "full"), default="quick")
    p.add_argument("--threads", type=int, default=1)
    common(p, fmt=False)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    p.add_argument("manifest")
    p.add_argument("--out", help="write the primary output here instead")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "seed", "absent") is None:
        try:
            args.seed = _default_seed()
        except CliError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
    out = _Outputs(args)
    try:
        code = args.func(args, out)
    except (CliError, SizeLimitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.command != "replay":
        out.finish(argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
