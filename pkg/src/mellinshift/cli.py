"""Command-line front end: ``mellinshift {check,symbol,winding,verify,certificate}``.

Exit codes: 0 ok, 1 negative or failed verdict, 2 invalid input,
3 winding not stabilized.
"""

from __future__ import annotations

import argparse
import contextlib
import io
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np
import scipy.fft as sfft
from threadpoolctl import threadpool_limits

from . import __version__
from .config import ConfigError, RunConfig, load_config
from .fredholm import (
    FREDHOLM_INDEX_ZERO,
    AnalysisError,
    ConditionViolated,
    WindingError,
    certificate_grid_min,
    check_main_condition,
    compute_certificate,
    fredholm_report,
    winding_ladder,
)
from .grid import VALIDATION_GRID, GridSpec
from .shifts import (
    BoundsWarning,
    ShiftError,
    composed_shift,
    estimate_bounds,
    shift_from_spec,
    validate_shift,
)
from .symbols import g_homotopy, g_pdo_symbol
from .verify import run_verification

EXIT_OK, EXIT_NEGATIVE, EXIT_INVALID, EXIT_UNSTABLE = 0, 1, 2, 3
VERIFY_GRID = GridSpec(20.0, 1024)


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def _clean(obj):
    """JSON-safe copy: tuples to lists, non-finite floats to strings, numpy scalars to Python."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [_clean(obj.real), _clean(obj.imag)]
    return obj


def _dump(report: dict) -> str:
    return json.dumps(_clean(report), indent=2, sort_keys=True) + "\n"


def _write(out: str | None, text: str):
    if out:
        Path(out).write_text(text)


def _delta(cfg: RunConfig):
    alpha, beta = cfg.shifts()
    try:
        return alpha, beta, composed_shift(alpha, beta, cfg.i, cfg.j)
    except ShiftError as exc:
        raise ConfigError(str(exc)) from None


# ---------------------------------------------------------------------------
# commands


def cmd_check(cfg: RunConfig, stdout) -> int:
    params = cfg.params()
    alpha, beta = cfg.shifts()
    grid = cfg.grid(VALIDATION_GRID)
    try:
        verdict = fredholm_report(params, alpha, beta, cfg.i, cfg.j, grid=grid, taus=cfg.taus())
    except ShiftError as exc:
        raise ConfigError(str(exc)) from None
    cond = verdict.condition
    print(f"operator U_alpha^{cfg.i} P+ + U_beta^{cfg.j} P-  with alpha={alpha.name}, beta={beta.name}",
          file=stdout)
    print(f"p={params.p:g} gamma={params.gamma:g}", file=stdout)
    print(f"omega range [{verdict.bounds.inf_omega:.6g}, {verdict.bounds.sup_omega:.6g}]"
          f"{'' if verdict.bounds.reliable else ' (unreliable)'}", file=stdout)
    print(f"condition: lower={cond.lower:.5f} upper={cond.upper:.5f} holds={cond.holds}", file=stdout)
    if verdict.certificate is not None:
        c = verdict.certificate
        print(f"certificate: c={c.c:.6g} observed min |g~|={verdict.observed_min:.6g}", file=stdout)
        print(f"winding: {[r.winding for r in verdict.winding.results]}", file=stdout)
    for note in verdict.warnings:
        print(f"warning: {note}", file=stdout)
    print(f"verdict: {verdict.verdict}", file=stdout)
    _write(cfg.out, _dump({"command": "check", "config": cfg.echo(), **verdict.as_dict()}))
    return EXIT_OK if verdict.verdict == FREDHOLM_INDEX_ZERO else EXIT_NEGATIVE


def _axis(values, lo, hi, n, log=False):
    if values is not None:
        return np.asarray(values, dtype=float)
    if n == 1:
        return np.array([lo], dtype=float)
    if log:
        return np.geomspace(lo, hi, n)
    return np.linspace(lo, hi, n)


def cmd_symbol(cfg: RunConfig, stdout) -> int:
    params = cfg.params()
    _, _, delta = _delta(cfg)
    opt = cfg.symbol
    if opt.t_values is None and not 0 < opt.t_min <= opt.t_max:
        raise ConfigError("need 0 < t_min <= t_max")
    if opt.x_values is None and not opt.x_min <= opt.x_max:
        raise ConfigError("need x_min <= x_max")
    if opt.t_values is not None and any(not v > 0 for v in opt.t_values):
        raise ConfigError("t values must be positive")
    if not 0 <= opt.theta <= 1:
        raise ConfigError("theta must lie in [0, 1]")
    t = _axis(opt.t_values, opt.t_min, opt.t_max, opt.n_t, log=True)
    x = _axis(opt.x_values, opt.x_min, opt.x_max, opt.n_x)
    w = np.broadcast_to(np.asarray(delta.omega(t), dtype=float), t.shape)
    g = g_homotopy(w[:, None], params, x[None, :], opt.theta)
    buf = io.StringIO()
    buf.write(f"# g symbol samples: p={_fmt(params.p)} re_gamma={_fmt(params.re_gamma)} "
              f"im_gamma={_fmt(params.im_gamma)} theta={_fmt(opt.theta)}\n")
    buf.write(f"# alpha={cfg.alpha if isinstance(cfg.alpha, str) else json.dumps(cfg.alpha, sort_keys=True)} "
              f"beta={cfg.beta if isinstance(cfg.beta, str) else json.dumps(cfg.beta, sort_keys=True)} "
              f"i={cfg.i} j={cfg.j} shift={delta.name}\n")
    buf.write("t,x,re_g,im_g,abs_g\n")
    for a, ta in enumerate(t):
        for b, xb in enumerate(x):
            v = complex(g[a, b])
            buf.write(",".join(_fmt(z) for z in (ta, xb, v.real, v.imag, abs(v))) + "\n")
    text = buf.getvalue()
    if cfg.out:
        _write(cfg.out, text)
        print(f"wrote {t.size * x.size} samples to {cfg.out}", file=stdout)
    else:
        stdout.write(text)
    return EXIT_OK


def cmd_winding(cfg: RunConfig, stdout) -> int:
    params = cfg.params()
    _, _, delta = _delta(cfg)
    symbol = g_pdo_symbol(delta, params)
    x_max = abs(params.im_gamma) + 8.0
    try:
        ladder = winding_ladder(symbol, cfg.taus(), x_max=x_max)
    except WindingError as exc:
        print(f"not stabilized: {exc}", file=stdout)
        _write(cfg.out, _dump({"command": "winding", "config": cfg.echo(), "stabilized": False,
                               "error": str(exc)}))
        return EXIT_UNSTABLE
    for r in ladder.results:
        print(f"tau={r.tau:.6g} winding={r.winding} arg_increment={r.arg_increment:.3e} "
              f"samples={r.samples_used} stabilized={r.stabilized}", file=stdout)
    report = {"command": "winding", "config": cfg.echo(), "symbol": symbol.label, **ladder.as_dict()}
    _write(cfg.out, _dump(report))
    if not ladder.stabilized:
        print("not stabilized across the tau ladder", file=stdout)
        return EXIT_UNSTABLE
    print(f"winding number: {ladder.winding}", file=stdout)
    return EXIT_OK if ladder.winding == 0 else EXIT_NEGATIVE


# shifts exercised by `verify` when the configuration names none
VERIFY_PRESETS = ("oscillating(0.5,0.5)", "dilation(1)")


def cmd_verify(cfg: RunConfig, stdout) -> int:
    params = cfg.params()
    _, _, delta = _delta(cfg)
    if delta.is_constant and delta.omega(1.0) == 0:
        shifts = [shift_from_spec(s) for s in VERIFY_PRESETS]
    else:
        shifts = [delta]
    grid = cfg.grid(VERIFY_GRID)
    fixture = cfg.verify.fixture
    if fixture is not None and not Path(fixture).is_file():
        raise ConfigError(f"fixture {fixture} not found")
    reports = []
    for shift in shifts:
        try:
            rep = run_verification(params, shift, grid, seed=cfg.seed, fixture=fixture,
                                   ladder=tuple(cfg.verify.ladder) if cfg.verify.ladder else None)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        print(rep.text(), file=stdout)
        reports.append(rep)
    ok = all(r.passed for r in reports)
    print(f"verify: {'PASS' if ok else 'FAIL'}", file=stdout)
    _write(cfg.out, _dump({"command": "verify", "config": cfg.echo(), "passed": ok,
                           "runs": [r.as_dict() for r in reports]}))
    return EXIT_OK if ok else EXIT_NEGATIVE


def cmd_certificate(cfg: RunConfig, stdout) -> int:
    params = cfg.params()
    _, _, delta = _delta(cfg)
    grid = cfg.grid(VALIDATION_GRID)
    try:
        validate_shift(delta, grid)
    except ShiftError as exc:
        raise ConfigError(str(exc)) from None
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", BoundsWarning)
        bounds = estimate_bounds(delta, grid)
    notes = [str(w.message) for w in caught]
    cond = check_main_condition(params, bounds)
    report = {"command": "certificate", "config": cfg.echo(), "bounds": bounds.as_dict(),
              "condition": cond.as_dict(), "warnings": notes}
    try:
        cert = compute_certificate(params, bounds)
    except ConditionViolated as exc:
        print(str(exc), file=stdout)
        _write(cfg.out, _dump({**report, "certificate": None, "error": "certificate undefined"}))
        return EXIT_NEGATIVE
    w = np.broadcast_to(np.asarray(delta.omega(grid.t), dtype=float), grid.t.shape)
    samples = np.append(w[:: max(1, grid.N // 2048)], [bounds.inf_omega, bounds.sup_omega])
    observed, arg = certificate_grid_min(params, samples, x_max=abs(params.im_gamma) + 8.0)
    margin = observed - cert.c
    print(f"q={cert.q:.10g} M(omega)={cert.M_omega:.10g}", file=stdout)
    print(f"c1={cert.c1:.10g} c2={cert.c2:.10g} c={cert.c:.10g}", file=stdout)
    print(f"observed min |g~|={observed:.10g} at (omega, x, theta)=({arg[0]:.6g}, {arg[1]:.6g}, {arg[2]:.3g})",
          file=stdout)
    print(f"soundness margin={margin:.6g}", file=stdout)
    report.update(certificate=cert.as_dict(), observed_min=observed, argmin=list(arg), margin=margin)
    _write(cfg.out, _dump(report))
    if margin < 0:
        print("soundness check FAILED: certificate exceeds the observed minimum", file=stdout)
        return EXIT_NEGATIVE
    return EXIT_OK


COMMANDS = {
    "check": cmd_check,
    "symbol": cmd_symbol,
    "winding": cmd_winding,
    "verify": cmd_verify,
    "certificate": cmd_certificate,
}


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INVALID)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON run configuration")
    common.add_argument("--p", type=float)
    common.add_argument("--re-gamma", type=float)
    common.add_argument("--im-gamma", type=float)
    common.add_argument("--alpha", metavar="EXPR", help="preset like 'oscillating(0.5,0.5)' or omega(t)")
    common.add_argument("--beta", metavar="EXPR")
    common.add_argument("--i", type=int)
    common.add_argument("--j", type=int)
    common.add_argument("--grid-n", type=int)
    common.add_argument("--grid-u", type=float)
    common.add_argument("--tau-ladder", metavar="LIST", help="comma separated, e.g. 'e^3,e^5,e^8'")
    common.add_argument("--threads", type=int)
    common.add_argument("--out", metavar="PATH", help="structured report (JSON) or CSV for 'symbol'")
    common.add_argument("--seed", type=int)

    parser = _Parser(prog="mellinshift", description="Fredholm analysis of weighted shift operators")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("check", parents=[common], help="sufficient Fredholm condition and index")
    sp = sub.add_parser("symbol", parents=[common], help="CSV samples of the symbol g")
    sp.add_argument("--t-min", type=float)
    sp.add_argument("--t-max", type=float)
    sp.add_argument("--n-t", type=int)
    sp.add_argument("--x-min", type=float)
    sp.add_argument("--x-max", type=float)
    sp.add_argument("--n-x", type=int)
    sp.add_argument("--theta", type=float)
    sub.add_parser("winding", parents=[common], help="winding number over the tau ladder")
    vp = sub.add_parser("verify", parents=[common], help="operator identity suite")
    vp.add_argument("--fixture", metavar="PATH", help="alternative golden symbol table")
    sub.add_parser("certificate", parents=[common], help="lower bound for |g~| and its soundness")
    return parser


def _overrides(ns: argparse.Namespace) -> dict:
    taus = None
    if ns.tau_ladder is not None:
        taus = [v.strip() for v in ns.tau_ladder.split(",") if v.strip()]
    out = {
        "p": ns.p, "re_gamma": ns.re_gamma, "im_gamma": ns.im_gamma,
        "alpha": ns.alpha, "beta": ns.beta, "i": ns.i, "j": ns.j,
        "grid_n": ns.grid_n, "grid_u": ns.grid_u, "tau_ladder": taus,
        "threads": ns.threads, "out": ns.out, "seed": ns.seed,
    }
    for name in ("t_min", "t_max", "n_t", "x_min", "x_max", "n_x", "theta"):
        if hasattr(ns, name):
            out[f"symbol.{name}"] = getattr(ns, name)
    if hasattr(ns, "fixture"):
        out["verify.fixture"] = ns.fixture
    return out


def main(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    try:
        ns = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = load_config(ns.config, _overrides(ns))
        cfg.params()
        cfg.shifts()
        limits = threadpool_limits(cfg.threads) if cfg.threads else contextlib.nullcontext()
        with limits, sfft.set_workers(cfg.threads or 1):
            return COMMANDS[ns.command](cfg, stdout)
    except ConfigError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except AnalysisError as exc:
        print(f"analysis failed: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE
    except WindingError as exc:
        print(f"not stabilized: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE


if __name__ == "__main__":
    sys.exit(main())
