"""Command-line front end.

Exit codes: 0 on success, 1 on usage errors, 2 on domain errors (bad input
files, numerical contracts that cannot be met).  JSON reports and CSV tables
both carry a ``schema_version`` field.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ZetaLabError
from .evaluator import EvalConfig, log_along_path

SCHEMA_VERSION = 1
CONFIG_ENV = "ZETALAB_CONFIG_DIR"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


@dataclass
class RunConfig:
    subcommand: str
    eval_config: EvalConfig = field(default_factory=EvalConfig)
    fe_file: str | None = None
    seed: int = 0
    output: str | None = None
    fmt: str = "json"
    threads: int = 1


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------

def _pair(text: str) -> tuple:
    parts = [float(x) for x in text.split(",")]
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected two comma-separated numbers, got {text!r}")
    return tuple(parts)


def _complex(text: str) -> complex:
    """``RE``, ``RE,IM`` or a Python literal such as ``0.5+14j``."""
    try:
        parts = [float(x) for x in text.split(",")]
    except ValueError:
        try:
            return complex(text.replace(" ", ""))
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected RE, RE,IM or RE+IMj, got {text!r}") from None
    if len(parts) == 1:
        return complex(parts[0])
    if len(parts) == 2:
        return complex(*parts)
    raise argparse.ArgumentTypeError(f"expected RE, RE,IM or RE+IMj, got {text!r}")


def _jsonable(x):
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.complexfloating):
        return [float(x.real), float(x.imag)]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    return x


def _load_eval_config(path: str | None) -> EvalConfig:
    if path is None:
        base = os.environ.get(CONFIG_ENV)
        cand = Path(base) / "eval.json" if base else None
        if cand is None or not cand.exists():
            return EvalConfig()
        path = str(cand)
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"config file not found: {p}")
    data = json.loads(p.read_text())
    return EvalConfig(**{k: data[k] for k in ("target_abs_error", "max_terms", "t_cap") if k in data})


def _fe_data(args):
    from .funceq import FunctionalEquationData

    if getattr(args, "file", None):
        path = Path(args.file)
        if not path.exists():
            raise FileNotFoundError(f"functional-equation file not found: {path}")
        return FunctionalEquationData.load(path)
    name = getattr(args, "builtin", "zeta") or "zeta"
    if name == "zeta":
        return FunctionalEquationData.zeta()
    if name.startswith("zeta^"):
        return FunctionalEquationData.zeta_power(int(name[5:]))
    raise UsageError(f"unknown builtin tuple {name!r}")


def _euler_spec(args):
    from .coeffs import EulerProductSpec

    if getattr(args, "spec", None):
        path = Path(args.spec)
        if not path.exists():
            raise FileNotFoundError(f"Euler-product spec not found: {path}")
        return EulerProductSpec.load(path)
    return EulerProductSpec.zeta()


def _target(name: str, cfg: EvalConfig):
    from .funceq import synthetic_class_g
    from .zeta import GonekEvaluator, ZetaEvaluator

    if name == "zeta":
        return ZetaEvaluator(cfg)
    if name.startswith("zetaX:"):
        return GonekEvaluator(float(name.split(":", 1)[1]))
    if name in ("g_0", "g_1_zeta"):
        return synthetic_class_g(name)
    raise UsageError(f"unknown target {name!r}")


class _Out:
    """Report sink: JSON object or CSV table, to a file or stdout."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg

    def _write(self, text: str) -> None:
        if self.cfg.output:
            Path(self.cfg.output).write_text(text)
        else:
            sys.stdout.write(text)

    def json(self, payload: dict) -> None:
        body = {"schema_version": SCHEMA_VERSION}
        body.update(_jsonable(payload))
        self._write(json.dumps(body, indent=2, sort_keys=True) + "\n")

    def table(self, header: list, rows) -> None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["schema_version"] + header)
        for r in rows:
            w.writerow([SCHEMA_VERSION] + [repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
        self._write(buf.getvalue())

    def emit(self, payload: dict, header: list | None = None, rows=None) -> None:
        if self.cfg.fmt == "csv" and header is not None:
            self.table(header, rows)
        else:
            self.json(payload)


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_coeffs(args, cfg: RunConfig, out: _Out) -> None:
    from .coeffs import abscissa_estimates, log_coeffs, power_coeffs

    spec = _euler_spec(args)
    if args.action == "power":
        seq = power_coeffs(spec, args.kappa, args.N)
    elif args.action == "log":
        seq = log_coeffs(spec, args.N)
    else:
        seq = power_coeffs(spec, args.kappa, args.N)
        grid = np.unique(np.geomspace(10, args.N, 40).astype(int))
        rep = abscissa_estimates(seq, grid)
        out.json({"sigma_c_estimate": rep.sigma_c_estimate, "sigma_a_estimate": rep.sigma_a_estimate,
                  "gap_ok": rep.gap_ok()})
        return
    vals = np.asarray(seq.values, dtype=complex)
    rows = [(n, vals[n - 1].real, vals[n - 1].imag) for n in range(1, seq.length + 1)]
    out.emit({"N": seq.length, "values": [[v.real, v.imag] for v in vals]}, ["n", "re", "im"], rows)


def cmd_funceq(args, cfg: RunConfig, out: _Out) -> None:
    from .funceq import delta_asymptotic, delta_eval, delta_invariants, delta_log

    p = _fe_data(args)
    if args.action == "invariants":
        out.json(delta_invariants(p).as_dict())
        return
    s = args.s
    payload = {"s": s, "delta": complex(delta_eval(p, s))}
    if args.action == "eval":
        try:
            payload["log_delta"] = complex(delta_log(p, s))
        except ZetaLabError as exc:
            payload["log_delta"] = None
            payload["log_delta_error"] = str(exc)
    else:
        payload["asymptotic"] = complex(delta_asymptotic(p, s))
    out.json(payload)


def cmd_zeta(args, cfg: RunConfig, out: _Out) -> None:
    from .zeta import ZetaEvaluator

    z = ZetaEvaluator(cfg.eval_config)
    if args.grid:
        t1, t2 = args.grid
        t = np.linspace(t1, t2, args.n)
        v = z.values(args.sigma + 1j * t)
        rows = [(ti, vi.real, vi.imag, abs(vi), math.atan2(vi.imag, vi.real)) for ti, vi in zip(t, v)]
        out.table(["t", "re", "im", "abs", "arg"], rows)
        return
    s = args.s
    val = z.value(s)
    payload = {"s": s, "value": val}
    try:
        payload["derivative"] = z.derivative(s, 1)
    except ZetaLabError as exc:
        payload["derivative_error"] = str(exc)
    try:
        payload["log"] = log_along_path(z, s)
    except ZetaLabError as exc:
        payload["log_error"] = str(exc)
    out.json(payload)


def cmd_apoints(args, cfg: RunConfig, out: _Out) -> None:
    from .apoints import ScanRectangle, count_apoints, littlewood_check, locate_apoints, rvm_compare

    f = _target(args.target, cfg.eval_config)
    a = args.a
    if args.action == "rvm":
        out.json(rvm_compare(f, a, _fe_data(args), args.T, seed=cfg.seed).as_dict())
        return
    rect = ScanRectangle(*args.sigma, *args.t)
    if args.action == "count":
        out.json({"count": count_apoints(f, a, rect, seed=cfg.seed), "rect": [*args.sigma, *args.t]})
    elif args.action == "locate":
        pts = locate_apoints(f, a, rect, seed=cfg.seed)
        rows = [(p.beta, p.gamma, p.multiplicity, p.residual) for p in pts]
        out.emit({"points": [p.as_dict() for p in pts]}, ["beta", "gamma", "multiplicity", "residual"], rows)
    else:
        out.json({"residual": littlewood_check(f, a, rect, seed=cfg.seed)})


def cmd_scan(args, cfg: RunConfig, out: _Out) -> None:
    from .scaling import (
        ScalingProfile,
        construct_tau_sequence,
        delta_limit_shape,
        lehto_scan,
    )

    profile = ScalingProfile.parse(args.mu)
    if args.action == "lehto":
        f = _target(args.target, cfg.eval_config)
        recs = lehto_scan(f, args.range, profile, args.band, _fe_data(args), threads=cfg.threads)
        rows = [r.as_row() for r in recs]
        if cfg.fmt == "json":
            out.json({"records": [dict(zip(["tau", "radius", "score", "abs_value", "predicted_bound"], r)) for r in rows]})
        else:
            out.table(["tau", "radius", "score", "abs_value", "predicted_bound"], rows)
    elif args.action == "limit":
        r = 0.9 * np.sqrt(np.linspace(0, 1, 6))[1:]
        th = np.linspace(0, 2 * math.pi, 17)[:-1]
        grid = np.concatenate([[0], (r[:, None] * np.exp(1j * th[None, :])).ravel()])
        out.json(delta_limit_shape(_fe_data(args), profile, args.tau, grid).as_dict())
    else:
        taus = construct_tau_sequence(_fe_data(args), args.ell, args.count, args.tau_min)
        out.emit({"taus": taus}, ["k", "tau"], list(enumerate(taus)))


def cmd_moments(args, cfg: RunConfig, out: _Out) -> None:
    from .moments import build_exclusion, continuous_moment, discrete_moment
    from .zeta import ZetaEvaluator

    f = ZetaEvaluator(cfg.eval_config)
    alpha = args.alpha if args.alpha is not None else args.sigma
    n_blocks = math.ceil(args.T / args.l) + 1
    excl = build_exclusion(f, args.l, alpha, args.M, n_blocks)
    if args.discrete:
        N = int(args.T / args.l) - 1
        rep = discrete_moment(f, args.sigma, args.lam, args.l, args.k, N, excl, _euler_spec(args))
    else:
        rep = continuous_moment(f, args.sigma, args.k, args.T, excl, _euler_spec(args))
    if args.bitmap:
        with open(args.bitmap, "w", newline="") as fh:
            excl.to_bitmap_csv(fh)
    out.json({"report": rep.as_dict(), "exclusion": {k: v for k, v in excl.as_dict().items() if k != "excluded"}})


def cmd_clt(args, cfg: RunConfig, out: _Out) -> None:
    from .clt import selberg_clt

    f = _target(args.target, cfg.eval_config)
    res = selberg_clt(f, args.T, bins=args.bins, samples=args.samples, seed=cfg.seed, n_L=args.n_L,
                      m=args.m, im_samples=args.im_samples)
    if args.hist:
        with open(args.hist, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["schema_version", "lo", "hi", "count_re", "count_im"])
            e = res.histogram_edges
            for i in range(e.size - 1):
                w.writerow([SCHEMA_VERSION, repr(float(e[i])), repr(float(e[i + 1])), int(res.histogram_re[i]), int(res.histogram_im[i])])
    out.json(res.as_dict())


def cmd_torus(args, cfg: RunConfig, out: _Out) -> None:
    from .coeffs import power_coeffs
    from .torus import TorusPoint, birkhoff_vs_space, plancherel_check

    a = power_coeffs(_euler_spec(args), args.kappa, args.N)
    if args.action == "plancherel":
        r = plancherel_check(a, args.sigma, args.samples, seed=cfg.seed)
        out.json(r._asdict())
    else:
        r = birkhoff_vs_space(a, args.sigma, args.T, TorusPoint.zero())
        out.json(r._asdict())


def cmd_report(args, cfg: RunConfig, out: _Out) -> None:
    """Small diagnostic bundle over several modules."""
    from .apoints import rvm_compare
    from .coeffs import CoefficientSequence
    from .funceq import FunctionalEquationData, delta_invariants
    from .scaling import ScalingProfile
    from .torus import plancherel_check
    from .zeta import ZetaEvaluator

    p = FunctionalEquationData.zeta()
    z = ZetaEvaluator(cfg.eval_config)
    profiles = {"constant": ScalingProfile.constant(1.0), "invloglog": ScalingProfile.inverse_loglog(),
                "loglog": ScalingProfile.loglog()}
    out.json({
        "invariants": delta_invariants(p).as_dict(),
        "rvm": rvm_compare(z, 0, p, args.T, seed=cfg.seed).as_dict(),
        "regimes": {k: v.regime()[0] for k, v in profiles.items()},
        "plancherel": plancherel_check(CoefficientSequence.ones(200), 0.75, 2000, seed=cfg.seed)._asdict(),
    })


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="root seed for Monte-Carlo and perturbations")
    common.add_argument("--out", "-o", help="output path (default stdout)")
    common.add_argument("--format", choices=("json", "csv"), default=None)
    common.add_argument("--config", help=f"JSON eval config (default ${CONFIG_ENV}/eval.json)")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1)

    fe = _Parser(add_help=False)
    g = fe.add_mutually_exclusive_group()
    g.add_argument("--file", help="functional-equation tuple file")
    g.add_argument("--builtin", default="zeta", help="zeta or zeta^m")

    spec = _Parser(add_help=False)
    spec.add_argument("--spec", help="Euler-product spec file (default: zeta)")

    parser = _Parser(prog="zetalab", description="Value distribution toolkit for zeta-type functions.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("coeffs", parents=[common, spec], help="Dirichlet coefficients")
    p.add_argument("action", choices=("power", "log", "abscissa"))
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--N", type=int, default=100)
    p.set_defaults(func=cmd_coeffs, default_format="csv")

    p = sub.add_parser("funceq", parents=[common, fe], help="functional-equation factor")
    p.add_argument("action", choices=("invariants", "eval", "asym"))
    p.add_argument("--s", type=_complex, default=complex(0.5, 100))
    p.set_defaults(func=cmd_funceq, default_format="json")

    p = sub.add_parser("zeta", parents=[common], help="zeta values")
    p.add_argument("--s", type=_complex, default=complex(0.5, 14))
    p.add_argument("--grid", type=_pair, help="t1,t2 sweep (CSV)")
    p.add_argument("--sigma", type=float, default=0.5)
    p.add_argument("--n", type=int, default=101)
    p.set_defaults(func=cmd_zeta, default_format="json")

    p = sub.add_parser("apoints", parents=[common, fe], help="a-point counting and location")
    p.add_argument("action", choices=("count", "locate", "rvm", "littlewood"))
    p.add_argument("--a", type=_complex, default=0j)
    p.add_argument("--T", type=float, default=100.0)
    p.add_argument("--sigma", type=_pair, default=(-1.0, 3.0), help="sigma_lo,sigma_hi")
    p.add_argument("--t", type=_pair, default=(10.0, 30.0), help="t_lo,t_hi")
    p.add_argument("--target", default="zeta")
    p.set_defaults(func=cmd_apoints, default_format="json")

    p = sub.add_parser("scan", parents=[common, fe], help="rescaling and filling-disc scans")
    p.add_argument("action", choices=("lehto", "limit", "tau-seq"))
    p.add_argument("--range", type=_pair, default=(20.0, 200.0))
    p.add_argument("--mu", default="loglog")
    p.add_argument("--band", type=_pair, default=(0.5, 2.0))
    p.add_argument("--target", default="zeta")
    p.add_argument("--tau", type=float, nargs="+", default=[1e3, 1e4, 1e5])
    p.add_argument("--ell", type=float, default=0.0)
    p.add_argument("--count", type=int, default=5)
    p.add_argument("--tau-min", type=float, default=1e3)
    p.set_defaults(func=cmd_scan, default_format="csv")

    p = sub.add_parser("moments", parents=[common, spec], help="moments off a density-zero block set")
    p.add_argument("--sigma", type=float, default=0.75)
    p.add_argument("--alpha", type=float)
    p.add_argument("--k", type=float, default=1.0)
    p.add_argument("--T", type=float, default=1000.0)
    p.add_argument("--l", type=float, default=1.0)
    p.add_argument("--M", type=float, default=25.0)
    p.add_argument("--lam", type=float, default=0.0)
    p.add_argument("--discrete", action="store_true")
    p.add_argument("--bitmap", help="write the exclusion bitmap CSV here")
    p.set_defaults(func=cmd_moments, default_format="json")

    p = sub.add_parser("clt", parents=[common], help="value distribution on the critical line")
    p.add_argument("--T", type=float, default=1e4)
    p.add_argument("--bins", type=int, default=40)
    p.add_argument("--samples", type=int, default=20_000)
    p.add_argument("--im-samples", type=int, default=1000)
    p.add_argument("--n-L", type=float, default=1.0)
    p.add_argument("--m", type=float, default=2.0)
    p.add_argument("--hist", help="write the histogram CSV here")
    p.add_argument("--target", default="zeta")
    p.set_defaults(func=cmd_clt, default_format="json")

    p = sub.add_parser("torus", parents=[common, spec], help="truncated torus checks")
    p.add_argument("action", choices=("plancherel", "birkhoff"))
    p.add_argument("--N", type=int, default=200)
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--sigma", type=float, default=0.75)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--T", type=float, default=2000.0)
    p.set_defaults(func=cmd_torus, default_format="json")

    p = sub.add_parser("report", parents=[common], help="diagnostic summary")
    p.add_argument("--T", type=float, default=100.0)
    p.set_defaults(func=cmd_report, default_format="json")
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    try:
        cfg = RunConfig(args.command, _load_eval_config(args.config), getattr(args, "file", None), args.seed,
                        args.out, args.format or args.default_format, max(1, args.threads))
        args.func(args, cfg, _Out(cfg))
    except UsageError as exc:
        print(f"zetalab: error: {exc}", file=sys.stderr)
        return 1
    except (ZetaLabError, FileNotFoundError, ValueError) as exc:
        print(f"zetalab: {exc}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
