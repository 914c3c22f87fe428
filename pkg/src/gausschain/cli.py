"""Command-line front end.

Every subcommand writes a JSON report (``sample`` writes CSV).  Wall-clock
measurements live under the report's ``"timing"`` key; everything else is a
deterministic function of the configuration and seed.

Exit codes: 0 success, 1 numeric failure, 2 usage or I/O error.
"""

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .baseline import CHOLESKY_CAP, cholesky, mc_estimate
from .chain import iter_checkpoints
from .covariance import from_descriptor, validate
from .diagnostics import (
    ORACLE_CAP,
    certify_exp_lipschitz,
    chain_covariance_series,
    check_trace_series,
    expected_m_norms,
    exp_lipschitz_grid,
    gaussian_w2,
)
from .errors import CapacityError, NumericError
from .estimators import estimate_mse, mcmc_estimate, wasserstein_bound
from .functionals import parse_functional
from .rng import RngStream

log = logging.getLogger("gausschain")

MODES = ("estimate", "mse", "compare", "diagnose", "sample")
# Plain Monte Carlo draws come from a stream id no replication uses.
MC_STREAM_ID = 2**64 - 1


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    mode: str
    model: dict
    h: str = "max"
    n: int = None
    b: int = None
    replications: int = 100
    seed: int = 0
    threads: int = None
    n_prime: int = 10_000
    checkpoints: list = field(default_factory=list)
    nmax: int = None

    def validate(self):
        if self.mode not in MODES:
            raise UsageError(f"unknown mode {self.mode!r}")
        if self.n is not None and self.n < 0:
            raise UsageError("n must be >= 0")
        if self.n is not None and self.b is not None and not 0 <= self.b < max(self.n, 1):
            raise UsageError(f"need 0 <= b < n, got n={self.n}, b={self.b}")
        if self.replications < 0:
            raise UsageError("replications must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise UsageError("seed must be a 64-bit unsigned integer")
        if self.threads is not None and self.threads < 1:
            raise UsageError("threads must be >= 1")
        return self


# -- config assembly --------------------------------------------------------------

_KEYWORDS = ("identity", "scaledexp", "powexp", "temperature")


def model_descriptor(spec, d=None, r=None, theta=None, ratio=None):
    """Resolve ``--model`` (keyword, inline JSON or file path) to a descriptor dict."""
    if isinstance(spec, dict):
        desc = dict(spec)
    elif spec is None:
        raise UsageError("--model is required")
    elif spec in _KEYWORDS:
        if d is None:
            raise UsageError(f"--model {spec} needs --d")
        desc = {"type": "scaledexp" if spec == "temperature" else spec, "d": d}
    elif spec.lstrip().startswith("{"):
        try:
            desc = json.loads(spec)
        except json.JSONDecodeError as exc:
            raise UsageError(f"bad inline model JSON: {exc}") from None
    else:
        try:
            with open(spec) as fh:
                desc = json.load(fh)
        except OSError as exc:
            raise UsageError(f"cannot read model file {spec!r}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"bad model file {spec!r}: {exc}") from None
    if d is not None and "d" not in desc and "values" not in desc and "locations" not in desc:
        desc["d"] = d
    for key, val in (("r", r), ("theta", theta), ("ratio", ratio)):
        if val is not None:
            desc[key] = val
    return desc


def functional_spec(h):
    """Accept a spec string or a ``{"type", "params"}`` descriptor."""
    if isinstance(h, str):
        return h
    if isinstance(h, dict):
        params = h.get("params", {})
        if isinstance(params, dict):
            arg = ",".join(f"{k}={v}" for k, v in params.items())
        elif isinstance(params, list):
            arg = ",".join(str(v) for v in params)
        else:
            arg = str(params)
        return f"{h['type']}:{arg}" if arg else h["type"]
    raise UsageError(f"bad functional descriptor {h!r}")


def build_config(args):
    base = {}
    if args.config:
        try:
            with open(args.config) as fh:
                base = json.load(fh)
        except OSError as exc:
            raise UsageError(f"cannot read config {args.config!r}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"bad config {args.config!r}: {exc}") from None
        if not isinstance(base, dict):
            raise UsageError("config must be a JSON object")

    def pick(name, key=None):
        val = getattr(args, name, None)
        return val if val is not None else base.get(key or name)

    d = pick("d")
    model = model_descriptor(
        pick("model"), d, pick("r"), pick("theta"), pick("ratio")
    )
    checkpoints = pick("checkpoints") or []
    if isinstance(checkpoints, str):
        checkpoints = [int(c) for c in checkpoints.split(",") if c.strip()]
    cfg = RunConfig(
        mode=args.command,
        model=model,
        h=functional_spec(pick("h") or "max"),
        n=pick("n"),
        b=pick("b"),
        replications=int(pick("replications") if pick("replications") is not None else 100),
        seed=int(pick("seed") or 0),
        threads=pick("threads"),
        n_prime=int(pick("n_prime", "nPrime") or 10_000),
        checkpoints=[int(c) for c in checkpoints],
        nmax=pick("nmax", "nMax"),
    )
    return cfg.validate()


# -- subcommands ------------------------------------------------------------------


def _chain_length(cfg, d):
    n = cfg.n if cfg.n is not None else 100 * d
    b = cfg.b if cfg.b is not None else n // 2
    if n < 1:
        raise UsageError("n must be >= 1")
    if not 0 <= b < n:
        raise UsageError(f"need 0 <= b < n, got n={n}, b={b}")
    return n, b


def _header(cfg, model):
    return {
        "command": cfg.mode,
        "model": {"type": cfg.model.get("type"), "d": model.dim},
        "functional": cfg.h,
        "seed": cfg.seed,
    }


def cmd_estimate(cfg, model):
    h = parse_functional(cfg.h, model.dim)
    n, b = _chain_length(cfg, model.dim)
    t0 = time.perf_counter()
    est = mcmc_estimate(model, h, n, b, seed=cfg.seed)
    report = _header(cfg, model)
    report.update(n=n, b=b, estimate=est.estimate)
    report["timing"] = {"seconds": time.perf_counter() - t0, "backend": _backend.name()}
    return report


def cmd_mse(cfg, model):
    h = parse_functional(cfg.h, model.dim)
    n, b = _chain_length(cfg, model.dim)
    t0 = time.perf_counter()
    rep = estimate_mse(model, h, n, b, cfg.replications, cfg.seed, cfg.threads)
    report = _header(cfg, model)
    report.update(rep.as_dict())
    report["timing"] = {"seconds": time.perf_counter() - t0, "backend": _backend.name()}
    return report


def cmd_compare(cfg, model):
    d = model.dim
    h = parse_functional(cfg.h, d)
    n, b = _chain_length(cfg, d)
    report = _header(cfg, model)
    report.update(n=n, b=b, nPrime=cfg.n_prime, warnings=[])
    timing = {"backend": _backend.name()}

    t0 = time.perf_counter()
    est = mcmc_estimate(model, h, n, b, seed=cfg.seed)
    timing["mcmcSeconds"] = time.perf_counter() - t0
    report["mcmc"] = {"estimate": est.estimate}

    factor = None
    if d > CHOLESKY_CAP:
        report["warnings"].append(f"d={d} exceeds the factorization cap {CHOLESKY_CAP}; MCMC only")
    else:
        t0 = time.perf_counter()
        try:
            factor = cholesky(model)
        except NumericError as exc:
            report["warnings"].append(f"factorization failed: {exc}; MCMC only")
        timing["choleskySeconds"] = time.perf_counter() - t0

    report["mc"] = None
    if factor is not None:
        t0 = time.perf_counter()
        mc = mc_estimate(factor, h, cfg.n_prime, RngStream(cfg.seed, MC_STREAM_ID))
        timing["mcSimulationSeconds"] = time.perf_counter() - t0
        report["mc"] = {
            "estimate": mc["mean"],
            "sigmaHat": mc["stdev"],
            "stderr": math.sqrt(mc["var_of_mean"]),
        }

    report["mse"] = None
    timing["timeRatio"] = None
    if cfg.replications >= 2 and factor is None:
        report["warnings"].append("MSE needs exact starts from the factorization; skipped")
    elif cfg.replications >= 2:
        t0 = time.perf_counter()
        rep = estimate_mse(model, h, n, b, cfg.replications, cfg.seed, cfg.threads, factor=factor)
        timing["mseSeconds"] = time.perf_counter() - t0
        report["mse"] = rep.as_dict()
        if rep.mse > 0:
            # Time for each method to reach the same accuracy: MC needs
            # sigma^2 / MSE draws; MCMC needs one chain of n steps.
            per_draw = timing["mcSimulationSeconds"] / cfg.n_prime
            tau_mc = timing["choleskySeconds"] + per_draw * mc["stdev"] ** 2 / rep.mse
            timing["timeRatio"] = tau_mc / timing["mcmcSeconds"]
    report["timing"] = timing
    return report


def _w2_checkpoints(nmax):
    pts = {nmax}
    k = 1
    while k < nmax:
        pts.add(k)
        k *= 2
    return sorted(pts)


def cmd_diagnose(cfg, model):
    d = model.dim
    if d > ORACLE_CAP:
        raise CapacityError(f"diagnose needs d <= {ORACLE_CAP}, got {d}")
    nmax = int(cfg.nmax if cfg.nmax is not None else (cfg.n if cfg.n is not None else 100))
    if nmax < 1:
        raise UsageError("diagnose needs n >= 1")
    t0 = time.perf_counter()
    v = model.materialize()
    val = validate(model)
    trace = expected_m_norms(v, nmax)
    j = np.arange(1, nmax + 1)
    lam = val.min_eigenvalue
    geometric = (d * d * (1 - lam / d) ** np.arange(nmax + 1)).tolist() if lam > 0 else None

    w2 = []
    covs = chain_covariance_series(v, _w2_checkpoints(nmax))
    for n, c in covs.items():
        w2.append({
            "n": n,
            "gelbrichLower": gaussian_w2(c, v),
            "traceUpper": math.sqrt(max(float(trace.values[n]), 0.0)),
            "bound": wasserstein_bound(d, n),
        })

    cert = certify_exp_lipschitz(*exp_lipschitz_grid())
    report = _header(cfg, model)
    del report["functional"]
    report.update(
        nMax=nmax,
        validation=val.as_dict(),
        traceDeficitSeries=trace.values.tolist(),
        bounds={"dSqOverN": [None] + (d * d / j).tolist(), "geometric": geometric},
        w2Estimates=w2,
        certifications={
            "traceSeries": check_trace_series(trace, lam if lam > 0 else None),
            "expLipschitz": cert.as_dict() | {"ok": cert.ok},
        },
    )
    report["timing"] = {"seconds": time.perf_counter() - t0}
    return report


def cmd_sample(cfg, model):
    """CSV rows ``n,x0,...`` at each checkpoint (default: the final step only)."""
    n = cfg.n if cfg.n is not None else 0
    points = sorted(set(cfg.checkpoints)) if cfg.checkpoints else [n]
    if points and points[0] < 0:
        raise UsageError("checkpoints must be >= 0")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n"] + [f"x{k}" for k in range(model.dim)])
    for step, x in iter_checkpoints(model, points, stream=RngStream(cfg.seed, 0)):
        w.writerow([step] + [repr(float(v)) for v in x])
    return buf.getvalue()


COMMANDS = {
    "estimate": cmd_estimate,
    "mse": cmd_mse,
    "compare": cmd_compare,
    "diagnose": cmd_diagnose,
    "sample": cmd_sample,
}


# -- entry point ------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="gausschain",
        description="Sample N(0, V) with an O(d)-per-step Markov chain.",
    )
    parser.add_argument("--log-level", default="WARNING")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in MODES:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config; flags override its keys")
        p.add_argument("--model", help="FILE, inline JSON, or one of " + ", ".join(_KEYWORDS))
        p.add_argument("--d", type=int)
        p.add_argument("--r", type=float, help="kernel range")
        p.add_argument("--theta", type=float, help="powered-exponential exponent")
        p.add_argument("--ratio", type=float, help="scaled-exponential sill/variance ratio")
        p.add_argument("--h", help="functional spec, e.g. max:sqrt8, norm, coord:0")
        p.add_argument("--n", type=int)
        p.add_argument("--b", type=int)
        p.add_argument("--replications", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--threads", type=int)
        p.add_argument("--out", help="write the report here instead of stdout")
        if name == "compare":
            p.add_argument("--n-prime", dest="n_prime", type=int, help="plain Monte Carlo draws")
        if name == "diagnose":
            p.add_argument("--nmax", type=int, help="longest horizon (default --n or 100)")
        if name == "sample":
            p.add_argument("--checkpoints", help="comma-separated step counts")
    return parser


def _emit(text, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(message)s")
    try:
        cfg = build_config(args)
        model = from_descriptor(cfg.model)
        result = COMMANDS[cfg.mode](cfg, model)
        for msg in result.get("warnings", []) if isinstance(result, dict) else []:
            log.warning(msg)
        text = result if isinstance(result, str) else json.dumps(result, sort_keys=True, indent=2) + "\n"
        _emit(text, args.out)
    except (UsageError, CapacityError, KeyError, TypeError) as exc:
        print(f"gausschain: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"gausschain: error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"gausschain: numeric failure: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"gausschain: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
