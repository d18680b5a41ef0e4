"""Sufficient Fredholm condition, ellipticity certificate and index via winding numbers."""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .grid import VALIDATION_GRID, GridSpec
from .shifts import (
    Shift,
    ShiftBoundsReport,
    composed_shift,
    estimate_bounds,
    validate_shift,
)
from .symbols import AdmissibleParams, PdoSymbol, g_homotopy, g_pdo_symbol

__all__ = [
    "FREDHOLM_INDEX_ZERO",
    "CONDITION_VIOLATED_INCONCLUSIVE",
    "ConditionReport",
    "Certificate",
    "ConditionViolated",
    "WindingError",
    "AnalysisError",
    "EllipticityResult",
    "WindingResult",
    "WindingLadder",
    "FredholmVerdict",
    "DEFAULT_TAUS",
    "check_main_condition",
    "compute_certificate",
    "certificate_grid_min",
    "ellipticity_scan",
    "winding_number",
    "winding_ladder",
    "fredholm_report",
]

FREDHOLM_INDEX_ZERO = "FREDHOLM_INDEX_ZERO"
CONDITION_VIOLATED_INCONCLUSIVE = "CONDITION_VIOLATED_INCONCLUSIVE"
DEFAULT_TAUS = (math.e ** 3, math.e ** 5, math.e ** 8)

PHASE_STEP_MAX = math.pi / 2
ARG_TOL = 1e-3
MAX_BOUNDARY_SAMPLES = 2 ** 20


class ConditionViolated(ValueError):
    pass


class WindingError(RuntimeError):
    pass


class AnalysisError(RuntimeError):
    pass


@dataclass(frozen=True)
class ConditionReport:
    lower: float
    upper: float
    holds: bool
    strip: float
    inputs_echo: dict = field(default_factory=dict)
    warnings: tuple[str, ...] = ()

    @property
    def I(self) -> float:  # noqa: E743
        return min(self.lower, self.strip)

    @property
    def S(self) -> float:
        return max(self.upper, self.strip)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["I"], d["S"] = self.I, self.S
        d["warnings"] = list(self.warnings)
        return d


def check_main_condition(params: AdmissibleParams, bounds: ShiftBoundsReport,
                         echo: dict | None = None) -> ConditionReport:
    """Evaluate ``0 < 1/p + Re g + inf(omega Im g)/2pi`` and ``1/p + Re g + sup(...)/2pi < 1``."""
    if not isinstance(params, AdmissibleParams):
        raise TypeError("params must be AdmissibleParams")
    im = params.im_gamma
    if im >= 0:
        inf_prod, sup_prod = im * bounds.inf_omega, im * bounds.sup_omega
    else:
        inf_prod, sup_prod = im * bounds.sup_omega, im * bounds.inf_omega
    lower = params.strip + inf_prod / (2 * math.pi)
    upper = params.strip + sup_prod / (2 * math.pi)
    notes = ()
    if not bounds.reliable:
        notes = ("omega bounds flagged unreliable: omega has not stabilized at the grid ends",)
    inputs = {"p": params.p, "gamma": [params.re_gamma, params.im_gamma]}
    inputs.update(echo or {})
    return ConditionReport(
        lower=lower,
        upper=upper,
        holds=bool(lower > 0 and upper < 1),
        strip=params.strip,
        inputs_echo=inputs,
        warnings=notes,
    )


@dataclass(frozen=True)
class Certificate:
    """Lower bound ``c`` for ``|g~(t, x, theta)|`` together with its ingredients."""

    q: float
    M_omega: float
    c1: float
    c2: float
    c: float
    J_halfwidth: float
    degenerate: bool = False

    def as_dict(self) -> dict:
        return asdict(self)


def _c1(q: float, m: float, b: float) -> float:
    # sin(pi/2q) / sqrt(sinh^2 A + sin^2 b), written with e^{-A} to avoid overflow
    a = math.pi ** 2 / (q * m)
    e = math.exp(-2 * a)
    return 2 * math.sin(math.pi / (2 * q)) * math.exp(-a) / math.sqrt((1 - e) ** 2 + 4 * e * math.sin(b) ** 2)


def _c2(q: float, m: float, b: float) -> float:
    a = math.pi ** 2 / (q * m)
    if a > 350:
        return 1.0
    return (1.0 + math.sin(b) ** 2 / math.sinh(a) ** 2) ** -0.5


def compute_certificate(params: AdmissibleParams, bounds: ShiftBoundsReport) -> Certificate:
    """The explicit constant ``c = min(c1, c2)^2`` bounding ``|g~|`` from below.

    Raises :class:`ConditionViolated` when the main condition fails.  For
    ``M(omega) = 0`` the symbol is identically one and ``c = 1``.
    """
    cond = check_main_condition(params, bounds)
    lo, hi = cond.I, 1.0 - cond.S
    if lo <= 0 or hi <= 0:
        raise ConditionViolated(
            f"certificate undefined: I = {cond.I:.6g}, S = {cond.S:.6g} (need I > 0 and S < 1)"
        )
    q = 1.0 / min(lo, hi)
    m = bounds.M_omega
    if m == 0:
        return Certificate(q=q, M_omega=0.0, c1=1.0, c2=1.0, c=1.0,
                           J_halfwidth=math.inf, degenerate=True)
    b = math.pi * params.strip
    c1, c2 = _c1(q, m, b), _c2(q, m, b)
    return Certificate(q=q, M_omega=m, c1=c1, c2=c2, c=min(c1, c2) ** 2,
                       J_halfwidth=math.pi / (q * m))


def certificate_grid_min(params: AdmissibleParams, omega_values, x_max: float | None = None,
                         n_x: int = 1001, n_theta: int = 11) -> tuple[float, tuple[float, float, float]]:
    """Minimum of ``|g~|`` over ``omega_values x x-grid x theta-grid``.

    ``omega_values`` are samples of ``omega(t)``; ``g~`` sees ``t`` only
    through them.  The ``x`` grid always contains ``+-Im gamma`` and the
    limits ``x = +-inf``.  Returns the minimum and its ``(omega, x, theta)``.
    """
    if x_max is None:
        x_max = abs(params.im_gamma) + 8.0
    w = np.unique(np.asarray(omega_values, dtype=float).ravel())
    x = np.concatenate([np.linspace(-x_max, x_max, n_x),
                        [params.im_gamma, -params.im_gamma, -np.inf, np.inf]])
    theta = np.linspace(0.0, 1.0, n_theta)
    best, arg = np.inf, (0.0, 0.0, 0.0)
    for th in theta:
        for chunk in np.array_split(w, max(1, w.size * x.size // 2_000_000)):
            vals = np.abs(g_homotopy(chunk[:, None], params, x[None, :], th))
            k = int(np.argmin(vals))
            if vals.flat[k] < best:
                i, j = np.unravel_index(k, vals.shape)
                best, arg = float(vals.flat[k]), (float(chunk[i]), float(x[j]), float(th))
    return best, arg


@dataclass(frozen=True)
class EllipticityResult:
    min_modulus: float
    argmin: tuple[float, float]
    fiber_min: float
    limit_min: float
    elliptic: bool

    def as_dict(self) -> dict:
        return asdict(self)


def ellipticity_scan(symbol: PdoSymbol, grid: GridSpec = VALIDATION_GRID,
                     x_max: float = 8.0, n_x: int = 2001, zero_tol: float = 1e-10,
                     fiber_decades: float = 1.0) -> EllipticityResult:
    """Minimum of ``|a(t, x)|`` over the grid in ``t``, ``[-x_max, x_max]`` and ``x = +-inf``.

    The fiber values over the endpoints of ``R_+`` are approximated by the
    minimum over the outermost ``fiber_decades`` decades of the ``t`` grid.
    """
    if not x_max > 0:
        raise ValueError("x_max must be positive")
    x = np.concatenate([np.linspace(-x_max, x_max, n_x), [-np.inf, np.inf]])
    t = grid.t[:1] if symbol.t_independent else grid.t
    row_min = np.empty(t.size)
    row_arg = np.empty(t.size, dtype=int)
    rows = max(1, 2_000_000 // x.size)
    for start in range(0, t.size, rows):
        vals = np.abs(symbol.values(t[start:start + rows, None], x[None, :]))
        row_arg[start:start + rows] = np.argmin(vals, axis=1)
        row_min[start:start + rows] = vals[np.arange(vals.shape[0]), row_arg[start:start + rows]]
    k = int(np.argmin(row_min))
    n_end = max(1, int(round(fiber_decades * math.log(10) / grid.h)))
    if symbol.t_independent:
        fiber = float(row_min[0])
    else:
        fiber = float(min(row_min[:n_end].min(), row_min[-n_end:].min()))
    limit_min = min(abs(symbol.limit_plus_inf), abs(symbol.limit_minus_inf))
    m = float(row_min[k])
    return EllipticityResult(
        min_modulus=m,
        argmin=(float(t[k]), float(x[row_arg[k]])),
        fiber_min=fiber,
        limit_min=float(limit_min),
        elliptic=bool(m > zero_tol),
    )


@dataclass(frozen=True)
class WindingResult:
    tau: float
    winding: int
    arg_increment: float
    samples_used: int
    stabilized: bool
    min_modulus: float = math.nan

    def as_dict(self) -> dict:
        return asdict(self)


def _boundary_values(symbol: PdoSymbol, tau: float, n: int, x_max: float) -> np.ndarray:
    """Symbol values along the counter-clockwise boundary of ``[1/tau, tau] x [-inf, inf]``."""
    lo, hi = 1.0 / tau, tau
    t_run = np.exp(np.linspace(math.log(lo), math.log(hi), n))
    x_run = np.concatenate([[-np.inf], np.linspace(-x_max, x_max, n), [np.inf]])
    bottom = symbol.values(t_run, -np.inf)
    right = symbol.values(hi, x_run)
    top = symbol.values(t_run[::-1], np.inf)
    left = symbol.values(lo, x_run[::-1])
    return np.concatenate([bottom, right, top, left, bottom[:1]])


def _x_extent(symbol: PdoSymbol, tau: float, x_max: float, tol: float = 1e-9) -> float:
    # grow x_max until the symbol sits on its limits at both vertical edges
    for _ in range(12):
        ends = symbol.values(np.array([1 / tau, tau, 1 / tau, tau]),
                             np.array([x_max, x_max, -x_max, -x_max]))
        limits = np.array([symbol.limit_plus_inf] * 2 + [symbol.limit_minus_inf] * 2)
        if np.all(np.abs(ends - limits) <= tol * max(1.0, float(np.max(np.abs(limits))))):
            return x_max
        x_max *= 2
    raise WindingError(f"symbol does not approach its limits for |x| <= {x_max:g}")


def winding_number(symbol: PdoSymbol, tau: float, refinement=None,
                   x_max: float = 8.0) -> WindingResult:
    """Winding of ``a`` along the boundary of ``Pi_tau``, refined until the increment settles.

    ``refinement`` is the ladder of per-edge sample counts (default
    ``2^10 ... 2^20``).  Each level must keep every phase step below
    ``pi/2``; two consecutive admissible levels whose total increments agree
    to ``1e-3`` stop the ladder.
    """
    if not tau > 1:
        raise ValueError("tau must exceed 1")
    if refinement is None:
        refinement = [2 ** k for k in range(10, 21)]
    x_max = _x_extent(symbol, tau, x_max)
    previous = None
    last_error = None
    for n in refinement:
        v = _boundary_values(symbol, tau, int(n), x_max)
        mod = np.abs(v)
        if mod.min() == 0 or not np.all(np.isfinite(v)):
            raise WindingError("symbol vanishes (or is not finite) on the boundary")
        steps = np.angle(v[1:] / v[:-1])
        if np.max(np.abs(steps)) >= PHASE_STEP_MAX:
            last_error = f"phase step {np.max(np.abs(steps)):.3g} >= pi/2 with {n} samples per edge"
            previous = None
            continue
        total = float(np.sum(steps))
        if previous is not None and abs(total - previous) < ARG_TOL:
            w = int(round(total / (2 * math.pi)))
            return WindingResult(
                tau=float(tau), winding=w, arg_increment=total, samples_used=int(4 * n),
                stabilized=abs(total - 2 * math.pi * w) < ARG_TOL,
                min_modulus=float(mod.min()),
            )
        previous = total
    if last_error:
        raise WindingError(f"phase step too large: {last_error}")
    raise WindingError("arg increment did not settle under refinement")


@dataclass(frozen=True)
class WindingLadder:
    results: tuple[WindingResult, ...]
    winding: int | None
    stabilized: bool

    def as_dict(self) -> dict:
        return {"results": [r.as_dict() for r in self.results],
                "winding": self.winding, "stabilized": self.stabilized}


def winding_ladder(symbol: PdoSymbol, taus=DEFAULT_TAUS, x_max: float = 8.0) -> WindingLadder:
    results = tuple(winding_number(symbol, tau, x_max=x_max) for tau in taus)
    values = {r.winding for r in results}
    ok = len(values) == 1 and all(r.stabilized for r in results)
    return WindingLadder(results, values.pop() if len(values) == 1 else None, ok)


@dataclass
class FredholmVerdict:
    verdict: str
    params: AdmissibleParams
    alpha: str
    beta: str
    i: int
    j: int
    bounds: ShiftBoundsReport
    condition: ConditionReport
    certificate: Certificate | None = None
    ellipticity: EllipticityResult | None = None
    observed_min: float | None = None
    winding: WindingLadder | None = None
    warnings: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "params": {"p": self.params.p, "re_gamma": self.params.re_gamma,
                       "im_gamma": self.params.im_gamma},
            "alpha": self.alpha,
            "beta": self.beta,
            "i": self.i,
            "j": self.j,
            "bounds": self.bounds.as_dict(),
            "condition": self.condition.as_dict(),
            "certificate": None if self.certificate is None else self.certificate.as_dict(),
            "ellipticity": None if self.ellipticity is None else self.ellipticity.as_dict(),
            "observed_min": self.observed_min,
            "winding": None if self.winding is None else self.winding.as_dict(),
            "warnings": list(self.warnings),
        }


def fredholm_report(params: AdmissibleParams, alpha: Shift, beta: Shift, i: int, j: int,
                    grid: GridSpec = VALIDATION_GRID, taus=DEFAULT_TAUS,
                    scan_stride: int = 16) -> FredholmVerdict:
    """Run the whole decision chain for ``A_ij = U_alpha^i P+ + U_beta^j P-``.

    The verdict is either :data:`FREDHOLM_INDEX_ZERO` or
    :data:`CONDITION_VIOLATED_INCONCLUSIVE`; the condition is only
    sufficient, so a violation proves nothing.
    """
    notes: list[str] = []
    for s in (alpha, beta):
        v = validate_shift(s, grid)
        if not v.so_ok:
            notes.append(f"shift {s.name!r}: slow oscillation not corroborated at the grid ends")
    delta = composed_shift(alpha, beta, i, j)
    if (i, j) not in ((0, 0), (1, 0)):
        validate_shift(delta, grid)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        bounds = estimate_bounds(delta, grid)
    notes.extend(str(w.message) for w in caught)
    cond = check_main_condition(params, bounds, echo={"alpha": alpha.name, "beta": beta.name,
                                                      "i": int(i), "j": int(j)})
    out = FredholmVerdict(CONDITION_VIOLATED_INCONCLUSIVE, params, alpha.name, beta.name,
                          int(i), int(j), bounds, cond, warnings=notes)
    if not cond.holds:
        return out

    cert = compute_certificate(params, bounds)
    coarse = GridSpec(grid.U, max(16, grid.N // scan_stride), grid.p)
    x_max = abs(params.im_gamma) + 8.0
    symbol = g_pdo_symbol(delta, params)
    ell = ellipticity_scan(symbol, coarse, x_max=x_max)
    w = np.broadcast_to(delta.omega(coarse.t), coarse.t.shape)
    observed, _ = certificate_grid_min(params, np.append(w, [bounds.inf_omega, bounds.sup_omega]),
                                       x_max=x_max)
    if observed < cert.c:
        raise AnalysisError(f"certificate c = {cert.c:.6g} exceeds observed min |g~| = {observed:.6g}")
    ladder = winding_ladder(symbol, taus, x_max=x_max)
    if not ladder.stabilized or ladder.winding != 0:
        raise AnalysisError(f"winding ladder gave {[r.winding for r in ladder.results]} "
                            "although the sufficient condition holds")
    out.verdict = FREDHOLM_INDEX_ZERO
    out.certificate, out.ellipticity, out.observed_min, out.winding = cert, ell, observed, ladder
    return out
