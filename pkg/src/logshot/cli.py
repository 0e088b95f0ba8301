"""Command-line front end.

    logshot simulate --beta 0.1 --compare-poly -o paths.csv
    logshot cov      --beta 0.25 --pairs 1:2,1:4 -o cov.csv
    logshot qv       --beta 0.25 --n 64,128,256 -o qv.json
    logshot limit    --alpha 1.5 --scales 10,100,1000 -o limit.json
    logshot hfbm     --alpha 1.5 --grid 0:4:41 --check-lemma 10000 -o hfbm.csv

Outputs are CSV (header row, time column first) or JSON, written to a
temporary file and renamed into place, so a failed run leaves nothing
behind.  Exit codes: 0 ok, 2 invalid input, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import analysis
from .errors import AccuracyError, DomainError, NumericalError
from .hfbm import HfbmParams, cov_matrix, lemma_checks, sample_hfbm
from .kernels import Kernel
from .noise import (BoundedPowerLawVariance, IndependentConstant, LogDecayVariance,
                    NoiseModel, PowerLawVariance)
from .shotnoise import SimConfig, simulate_ensemble

DEFAULT_SEED = 20240
OUTPUT_DIR_ENV = "LOGSHOT_OUTPUT_DIR"

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3


class UsageError(DomainError):
    pass


# -- parsing helpers ---------------------------------------------------------

_NOISE_KEYS = {
    "const": {"K2", "law"},
    "powerlaw": {"K", "gamma", "law"},
    "logdecay": {"K", "gamma", "horizon", "law"},
    "bounded-powerlaw": {"K", "gamma", "law"},
}
_REQUIRED = {"powerlaw": {"K", "gamma"}, "logdecay": {"K", "gamma"},
             "bounded-powerlaw": {"K", "gamma"}}


def parse_noise(spec: str, horizon: float) -> NoiseModel:
    """Parse ``variant[:key=value,...]`` into a noise model.

    ``gaussian-const:1`` and ``rademacher-const:1`` are shorthands for the
    constant-variance model with the given K2 and amplitude law.
    ``horizon`` is used by ``logdecay`` when no explicit horizon is given.
    """
    name, _, rest = spec.partition(":")
    law = None
    if name.endswith("-const"):
        law = name[: -len("-const")]
        name = "const"
    if name not in _NOISE_KEYS:
        raise UsageError(f"unknown noise variant {name!r} in {spec!r}")
    params: dict = {}
    if rest:
        items = rest.split(",")
        if name == "const" and len(items) == 1 and "=" not in items[0]:
            items = [f"K2={items[0]}"]
        for item in items:
            key, eq, value = item.partition("=")
            key = key.strip()
            if not eq or key not in _NOISE_KEYS[name]:
                raise UsageError(f"bad or unknown key {key!r} in noise spec {spec!r}")
            if key in params:
                raise UsageError(f"duplicate key {key!r} in noise spec {spec!r}")
            params[key] = value.strip() if key == "law" else _float(value, key)
    if law is not None:
        if "law" in params:
            raise UsageError(f"law given twice in {spec!r}")
        params["law"] = law
    missing = _REQUIRED.get(name, set()) - params.keys()
    if missing:
        raise UsageError(f"noise spec {spec!r} is missing {sorted(missing)}")
    law = params.pop("law", "gaussian")
    if name == "const":
        return IndependentConstant(params.get("K2", 1.0), law=law)
    if name == "powerlaw":
        return PowerLawVariance(params["K"], params["gamma"], law=law)
    if name == "logdecay":
        return LogDecayVariance(params["K"], params["gamma"], params.get("horizon", horizon), law=law)
    return BoundedPowerLawVariance(params["K"], params["gamma"], law=law)


def _float(text, what="value") -> float:
    try:
        return float(text)
    except ValueError:
        raise UsageError(f"cannot read {what} from {text!r}") from None


def parse_grid(spec: str) -> np.ndarray:
    """``start:stop:points`` -> ``points`` equally spaced times, ends included."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise UsageError(f"grid must be start:stop:points, got {spec!r}")
    start, stop = _float(parts[0], "grid start"), _float(parts[1], "grid stop")
    try:
        points = int(parts[2])
    except ValueError:
        raise UsageError(f"grid points must be an integer, got {parts[2]!r}") from None
    if points < 2 or not stop > start or start < 0:
        raise UsageError(f"invalid grid {spec!r}")
    return np.linspace(start, stop, points)


def parse_floats(spec: str, what: str) -> list:
    vals = [_float(x, what) for x in spec.split(",") if x.strip()]
    if not vals:
        raise UsageError(f"empty {what} list")
    return vals


def parse_ints(spec: str, what: str) -> list:
    try:
        vals = [int(x) for x in spec.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"{what} must be integers, got {spec!r}") from None
    if not vals:
        raise UsageError(f"empty {what} list")
    return vals


def parse_pairs(spec: str) -> list:
    pairs = []
    for item in spec.split(","):
        s, sep, t = item.partition(":")
        if not sep:
            raise UsageError(f"pair must be s:t, got {item!r}")
        pairs.append((_float(s, "s"), _float(t, "t")))
    return pairs


# -- output ------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, str):
        return x
    return repr(float(x))


def render_csv(columns: list, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def render_json(payload) -> str:
    return json.dumps(_jsonable(payload), indent=2, allow_nan=True) + "\n"


def _jsonable(obj):
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


def resolve_output(path: str) -> str:
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not os.path.isabs(path):
        return os.path.join(base, path)
    return path


def output_format(args) -> str:
    if args.format:
        return args.format
    return "json" if str(args.output).lower().endswith(".json") else "csv"


def write_atomic(path: str, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file and rename."""
    if path == "-":
        sys.stdout.write(text)
        return
    path = resolve_output(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".logshot-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(args, columns, rows, payload) -> None:
    if output_format(args) == "json":
        write_atomic(args.output, render_json(payload))
    else:
        write_atomic(args.output, render_csv(columns, rows))


def _note(args, text):
    if args.output != "-":
        print(text)


# -- commands ----------------------------------------------------------------

def _kernel(args, family=None):
    return Kernel(family or args.kernel, args.beta)


def cmd_simulate(args) -> int:
    grid = parse_grid(args.grid)
    noise = parse_noise(args.noise, float(grid[-1]))
    kernel = _kernel(args, "log" if args.compare_poly else args.kernel)
    config = SimConfig(kernel, noise, args.lam, grid, seed=args.seed, ensemble_size=args.paths)
    if args.compare_poly:
        kernels = [Kernel("log", args.beta), Kernel("poly", args.beta)]
        ens = simulate_ensemble(config, kernels=kernels, workers=args.threads)
    else:
        ens = {kernel.family: simulate_ensemble(config, workers=args.threads)}
    families = list(ens)
    columns = ["t"]
    blocks = []
    for m in range(args.paths):
        for fam in families:
            columns.append(fam if args.paths == 1 else f"{fam}_{m}")
            blocks.append(ens[fam].values[m])
    data = np.column_stack([grid] + blocks)
    payload = {"command": "simulate", "seed": args.seed, "beta": args.beta, "lambda": args.lam,
               "noise": args.noise, "t": grid,
               "paths": {fam: ens[fam].values for fam in families}}
    emit(args, columns, data, payload)
    if args.compare_poly:
        qv = {fam: [float(np.sum(np.diff(v) ** 2)) for v in ens[fam].values] for fam in families}
        _note(args, "realized QV " + ", ".join(f"{fam}={np.mean(qv[fam]):.6g}" for fam in families))
    return EXIT_OK


def cmd_cov(args) -> int:
    pairs = parse_pairs(args.pairs)
    times = sorted({x for p in pairs for x in p})
    if times[0] <= 0:
        raise UsageError("covariance times must be > 0")
    noise = parse_noise(args.noise, times[-1])
    kernel = _kernel(args)
    config = SimConfig(kernel, noise, args.lam, times, seed=args.seed, ensemble_size=args.paths)
    ens = simulate_ensemble(config, workers=args.threads)
    rows = []
    for s, t in pairs:
        if kernel.family == "poly":
            if not noise.constant:
                raise UsageError("the polynomial kernel covariance needs constant-variance noise")
            target = analysis.cov_poly_numeric(args.beta, args.lam, noise.k2_value, s, t)
        else:
            try:
                target = analysis.cov_closed_form(args.beta, noise, args.lam, s, t)
            except analysis.UnsupportedModelError:
                target = analysis.cov_quadrature(args.beta, noise, args.lam, s, t)
        rep = analysis.empirical_cov(ens, s, t, target=target)
        rows.append([s, t, target, rep.estimate, rep.std_error, rep.z_score])
    columns = ["s", "t", "closed_form", "mc_estimate", "std_error", "z"]
    payload = {"command": "cov", "seed": args.seed, "beta": args.beta, "lambda": args.lam,
               "noise": args.noise, "kernel": kernel.family, "paths": args.paths,
               "rows": [dict(zip(columns, r)) for r in rows]}
    emit(args, columns, rows, payload)
    _note(args, f"max |z| = {max(abs(r[-1]) for r in rows):.3f}")
    return EXIT_OK


def cmd_qv(args) -> int:
    ns = parse_ints(args.n, "n")
    if min(ns) < 1:
        raise UsageError("n must be >= 1")
    noise = parse_noise(args.noise, args.T)
    if not noise.constant:
        raise UsageError("quadratic variation is only available for constant-variance noise")
    log_k, poly_k = Kernel("log", args.beta), Kernel("poly", args.beta)
    rows = []
    for n in ns:
        e_log = analysis.expected_qv(log_k, args.lam, noise, args.T, n)
        e_poly = analysis.expected_qv(poly_k, args.lam, noise, args.T, n)
        mean = se = math.nan
        if args.paths >= 2:
            grid = args.T * np.arange(n + 1) / n
            config = SimConfig(log_k, noise, args.lam, grid, seed=args.seed, ensemble_size=args.paths)
            ens = simulate_ensemble(config, workers=args.threads)
            qv = np.sum(np.diff(ens.values, axis=1) ** 2, axis=1)
            mean, se = float(qv.mean()), float(qv.std(ddof=1) / math.sqrt(qv.size))
        rows.append([n, e_log, e_poly, mean, se])
    columns = ["n", "expected_qv_log", "expected_qv_poly", "mc_qv_mean", "mc_qv_stderr"]
    slopes = {}
    if len(ns) >= 2:
        slopes = {"log": analysis.loglog_slope(ns, [r[1] for r in rows]),
                  "poly": analysis.loglog_slope(ns, [r[2] for r in rows])}
    payload = {"command": "qv", "beta": args.beta, "lambda": args.lam, "T": args.T,
               "noise": args.noise, "seed": args.seed, "paths": args.paths,
               "rows": [dict(zip(columns, r)) for r in rows], "slopes": slopes}
    emit(args, columns, rows, payload)
    if slopes:
        _note(args, f"log-log slope vs n: log kernel {slopes['log']:.4f}, "
                    f"poly kernel {slopes['poly']:.4f} (reference -2 beta = {-2 * args.beta:.4f})")
    return EXIT_OK


def cmd_limit(args) -> int:
    if not 1.0 < args.alpha < 2.0:
        raise UsageError(f"alpha must lie in (1, 2), got {args.alpha!r}")
    times = parse_floats(args.times, "times")
    scales = parse_floats(args.scales, "scales")
    noise = parse_noise(args.noise, max(scales) * max(times))
    reports = []
    for i in range(args.seeds):
        reports.append(analysis.convergence_report(args.alpha, args.lam, noise, times, scales,
                                                   args.paths, args.seed + i, workers=args.threads))
    decreasing = sum(r.frobenius[-1] < r.frobenius[0] for r in reports)
    columns = ["seed", "scale", "frobenius", "max_abs", "max_abs_skewness", "max_abs_excess_kurtosis"]
    rows = [[r.seed, c, r.frobenius[k], r.max_abs[k],
             max(abs(x) for x in r.skewness[k]), max(abs(x) for x in r.excess_kurtosis[k])]
            for r in reports for k, c in enumerate(r.scales)]
    payload = {"command": "limit", "alpha": args.alpha, "lambda": args.lam, "noise": args.noise,
               "times": times, "scales": scales, "paths": args.paths,
               "target": reports[0].target,
               "reports": [r.to_dict() for r in reports],
               "frobenius_decreased": {"seeds": decreasing, "of": len(reports)}}
    emit(args, columns, rows, payload)
    _note(args, f"Frobenius distance decreased from c={scales[0]:g} to c={scales[-1]:g} "
                f"in {decreasing} of {len(reports)} seeds")
    return EXIT_OK


def cmd_hfbm(args) -> int:
    params = HfbmParams(args.alpha)
    grid = parse_grid(args.grid)
    ens = sample_hfbm(params, grid, args.paths, args.seed)
    columns = ["t"] + (["value"] if args.paths == 1 else [f"path_{m}" for m in range(args.paths)])
    data = np.column_stack([grid, ens.values.T])
    payload = {"command": "hfbm", "alpha": args.alpha, "seed": args.seed, "t": grid,
               "paths": ens.values, "covariance": cov_matrix(params, grid).entries}
    lemma = None
    if args.check_lemma:
        if not params.long_memory:
            raise UsageError("the increment-variance property suite needs alpha in (1, 2)")
        lemma = lemma_checks(args.alpha, args.check_lemma, seed=args.seed)
        payload["lemma"] = {k: {"passed": p, "total": n} for k, (p, n) in lemma.items()}
    emit(args, columns, data, payload)
    if lemma is not None:
        for name, (passed, total) in lemma.items():
            _note(args, f"{'PASS' if passed == total else 'FAIL'} {name}: {passed}/{total}")
        if any(p != n for p, n in lemma.values()):
            return EXIT_NUMERICAL
    return EXIT_OK


# -- argument parser ---------------------------------------------------------

def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _beta(text):
    v = float(text)
    if not 0.0 < v < 0.5:
        raise argparse.ArgumentTypeError(f"beta must lie in (0, 1/2), got {text}")
    return v


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {text}")
    return v


NOISE_HELP = ("amplitude law given the arrival time, as variant[:key=value,...]: "
              "gaussian-const:K2 or rademacher-const:K2 (constant variance), "
              "powerlaw:K=,gamma= (K_2(u) = K + u^-gamma), "
              "logdecay:K=,gamma=[,horizon=] (K_2(u) = K - gamma log u), "
              "bounded-powerlaw:K=,gamma= (K_2(u) = K + (1+u)^-gamma); "
              "add law=rademacher for +-sqrt(K_2) amplitudes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="logshot", description=__doc__.split("\n")[0],
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, paths_default):
        p.add_argument("-o", "--output", required=True,
                       help=f"output file ('-' for stdout); relative paths resolve against "
                            f"${OUTPUT_DIR_ENV} when set")
        p.add_argument("--format", choices=("csv", "json"),
                       help="output format (default: json for *.json, csv otherwise)")
        p.add_argument("--seed", type=int, default=DEFAULT_SEED,
                       help=f"root seed; path m uses the sub-stream (seed, m) (default {DEFAULT_SEED})")
        p.add_argument("--paths", type=_positive_int, default=paths_default,
                       help=f"Monte Carlo ensemble size M (default {paths_default})")
        p.add_argument("--threads", type=_positive_int, default=1,
                       help="worker threads; results do not depend on it")

    def shot(p):
        p.add_argument("--beta", type=_beta, default=0.25,
                       help="response exponent beta in (0, 1/2) (default 0.25)")
        p.add_argument("--lambda", dest="lam", type=_positive_float, default=1.0,
                       help="Poisson rate of the shot epochs (default 1)")

    p = sub.add_parser("simulate", help="simulate shot-noise paths on a grid")
    shot(p)
    p.add_argument("--kernel", choices=("log", "poly"), default="log",
                   help="response (t/u logarithmic or t-u polynomial), default log")
    p.add_argument("--noise", default="gaussian-const:1", help=NOISE_HELP)
    p.add_argument("--grid", default="0:50:500",
                   help="time grid start:stop:points, ends included (default 0:50:500)")
    p.add_argument("--compare-poly", action="store_true",
                   help="write the logarithmic and the polynomial path built from the "
                        "same epochs and amplitudes")
    common(p, 1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("cov", help="closed-form covariance against Monte Carlo")
    shot(p)
    p.add_argument("--kernel", choices=("log", "poly"), default="log",
                   help="response kernel (default log)")
    p.add_argument("--noise", default="gaussian-const:1", help=NOISE_HELP)
    p.add_argument("--pairs", default="1:1,1:2,1:4,2:3",
                   help="comma-separated s:t time pairs (default 1:1,1:2,1:4,2:3)")
    common(p, 100_000)
    p.set_defaults(func=cmd_cov)

    p = sub.add_parser("qv", help="expected and realized quadratic variation against n")
    shot(p)
    p.add_argument("--noise", default="gaussian-const:1",
                   help="constant-variance amplitude law (gaussian-const:K2 or rademacher-const:K2)")
    p.add_argument("--T", type=_positive_float, default=1.0, help="time horizon (default 1)")
    p.add_argument("--n", default="64,128,256,512,1024,2048,4096",
                   help="comma-separated numbers of subintervals of [0, T]")
    common(p, 0)
    p.set_defaults(func=cmd_qv)

    p = sub.add_parser("limit", help="distance of the scaled process to the H-fBm limit")
    p.add_argument("--alpha", type=float, default=1.5,
                   help="limit index alpha in (1, 2); the response exponent is (alpha-1)/2")
    p.add_argument("--lambda", dest="lam", type=_positive_float, default=1.0,
                   help="Poisson rate of the shot epochs (default 1)")
    p.add_argument("--noise", default="bounded-powerlaw:K=1,gamma=0.5",
                   help=NOISE_HELP + "; must be bounded with a positive limit K")
    p.add_argument("--times", default="0.5,1,2,4", help="observation times (default 0.5,1,2,4)")
    p.add_argument("--scales", default="10,100,1000",
                   help="time-scale factors c, first and last are compared (default 10,100,1000)")
    p.add_argument("--seeds", type=_positive_int, default=1,
                   help="number of consecutive root seeds, starting at --seed (default 1)")
    common(p, 50_000)
    p.set_defaults(func=cmd_limit)

    p = sub.add_parser("hfbm", help="exact Gaussian samples of Hadamard fractional Brownian motion")
    p.add_argument("--alpha", type=float, default=1.5,
                   help="index alpha in (0, 1) or (1, 2); alpha = 1 is Brownian motion")
    p.add_argument("--grid", default="0:4:41", help="time grid start:stop:points (default 0:4:41)")
    p.add_argument("--check-lemma", type=int, default=0, metavar="N",
                   help="also run the increment-variance property suite on N random triples")
    common(p, 1)
    p.set_defaults(func=cmd_hfbm)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DomainError as exc:
        print(f"logshot {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (NumericalError, AccuracyError) as exc:
        print(f"logshot {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
