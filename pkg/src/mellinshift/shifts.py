"""Slowly oscillating shifts ``alpha(t) = t * exp(omega(t))``.

All arithmetic is done in the log variable ``u = log t``: a shift acts as
``u -> u + omega(e^u)`` and its log-derivative is
``Omega(t) = 1 + t omega'(t)``.
"""

from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.ndimage import maximum_filter1d, minimum_filter1d

from .expr import ExpressionError, parse_expression
from .grid import VALIDATION_GRID, GridSpec

__all__ = [
    "Shift",
    "ShiftError",
    "ShiftBoundsReport",
    "ShiftValidation",
    "BoundsWarning",
    "identity_shift",
    "dilation_shift",
    "oscillating_shift",
    "shift_from_expression",
    "shift_from_callable",
    "shift_from_spec",
    "PRESETS",
    "eval_shift",
    "eval_shift_derivative",
    "invert_shift",
    "iterate_shift",
    "shift_power",
    "compose",
    "composed_shift",
    "composed_omega",
    "estimate_bounds",
    "dyadic_oscillation",
    "validate_shift",
]

FD_STEP = 1e-7
SO_THRESHOLD = 1e-2
DECADE = math.log(10.0)


class ShiftError(ValueError):
    """The shift is not admissible (non-positive ``Omega``, divergent inverse, ...)."""


class BoundsWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Shift:
    """A shift given by its exponent ``omega`` and derivative ``omega'``.

    Both callables take and return numpy arrays.  ``omega_range`` optionally
    records analytically known ``(inf, sup)`` of ``omega`` over all of
    ``R_+``; grid scans are widened to include it.
    """

    omega: Callable
    omega_prime: Callable
    name: str
    derivative_kind: str = "analytic"
    omega_range: tuple[float, float] | None = None
    is_constant: bool = False
    source: str | None = None
    # log-derivative d(log alpha)/d(log t); built from omega_prime when None
    _log_slope: Callable | None = field(default=None, repr=False, compare=False)

    def psi(self, t):
        t = np.asarray(t, dtype=float)
        if self._log_slope is not None:
            return self._log_slope(t) - 1.0
        return t * self.omega_prime(t)

    def big_omega(self, t):
        t = np.asarray(t, dtype=float)
        if self._log_slope is not None:
            return self._log_slope(t)
        return 1.0 + t * self.omega_prime(t)

    def __call__(self, t):
        return eval_shift(self, t)

    def inverse(self) -> "Shift":
        return shift_power(self, -1)


def _positive(t):
    t = np.asarray(t, dtype=float)
    if np.any(~(t > 0)):
        raise ValueError("t must be positive")
    return t


# ---------------------------------------------------------------------------
# constructors


def shift_from_expression(source: str, name: str | None = None,
                          omega_range: tuple[float, float] | None = None) -> Shift:
    expr = parse_expression(source)
    return Shift(
        omega=expr,
        omega_prime=expr.diff,
        name=name or source,
        omega_range=omega_range,
        is_constant=expr.is_constant,
        source=source,
    )


def shift_from_callable(omega: Callable, name: str = "omega",
                        omega_prime: Callable | None = None,
                        omega_range: tuple[float, float] | None = None) -> Shift:
    """Wrap an opaque callable; without ``omega_prime`` a central difference in ``u`` is used."""
    if omega_prime is not None:
        return Shift(omega, omega_prime, name, omega_range=omega_range)

    def fd_prime(t):
        t = np.asarray(t, dtype=float)
        u = np.log(t)
        step = FD_STEP * np.maximum(1.0, np.abs(u))
        d = (np.asarray(omega(np.exp(u + step))) - np.asarray(omega(np.exp(u - step)))) / (2 * step)
        return d / t

    return Shift(omega, fd_prime, name, derivative_kind="finite-difference",
                 omega_range=omega_range)


def identity_shift() -> Shift:
    return shift_from_expression("0", name="identity", omega_range=(0.0, 0.0))


def dilation_shift(c: float) -> Shift:
    c = float(c)
    return shift_from_expression(repr(c), name=f"dilation({c:g})", omega_range=(c, c))


def oscillating_shift(a: float = 0.5, b: float = 0.5) -> Shift:
    """``omega(t) = a sin(b log(1 + log^2 t))``; admissible when ``|a b| < 1``."""
    a, b = float(a), float(b)
    if abs(a * b) >= 1:
        raise ShiftError("oscillating(a, b) needs |a*b| < 1 for 1 + t omega' > 0")
    return shift_from_expression(
        f"{a!r}*sin({b!r}*log(1 + log(t)**2))",
        name=f"oscillating({a:g},{b:g})",
        omega_range=(-abs(a), abs(a)),
    )


PRESETS: dict[str, Callable[..., Shift]] = {
    "identity": identity_shift,
    "dilation": dilation_shift,
    "oscillating": oscillating_shift,
}

_PRESET_RE = re.compile(r"^\s*([a-z_]+)\s*(?:\(([^()]*)\))?\s*$")


def shift_from_spec(spec) -> Shift:
    """Build a shift from a preset call (``"dilation(1)"``), an expression or a mapping.

    Mappings use the keys ``omega`` (or ``preset``), ``name`` and ``omega_range``.
    """
    if isinstance(spec, Shift):
        return spec
    if isinstance(spec, dict):
        unknown = set(spec) - {"omega", "preset", "name", "omega_range"}
        if unknown:
            raise ShiftError(f"unknown shift keys: {sorted(unknown)}")
        if "preset" in spec:
            return shift_from_spec(spec["preset"])
        if "omega" not in spec:
            raise ShiftError("shift mapping needs 'omega' or 'preset'")
        rng = spec.get("omega_range")
        if rng is not None:
            rng = (float(rng[0]), float(rng[1]))
        return shift_from_expression(str(spec["omega"]), spec.get("name"), rng)
    if not isinstance(spec, str):
        raise ShiftError(f"cannot build a shift from {spec!r}")
    m = _PRESET_RE.match(spec)
    if m and m.group(1) in PRESETS:
        args = []
        if m.group(2) and m.group(2).strip():
            try:
                args = [float(a) for a in m.group(2).split(",")]
            except ValueError:
                raise ShiftError(f"bad preset arguments in {spec!r}") from None
        try:
            return PRESETS[m.group(1)](*args)
        except TypeError as exc:
            raise ShiftError(f"{spec!r}: {exc}") from None
    try:
        return shift_from_expression(spec)
    except ExpressionError as exc:
        raise ShiftError(str(exc)) from None


# ---------------------------------------------------------------------------
# evaluation


def eval_shift(shift: Shift, t):
    t = _positive(t)
    return t * np.exp(shift.omega(t))


def eval_shift_derivative(shift: Shift, t):
    """``alpha'(t) = Omega(t) e^{omega(t)}``."""
    t = _positive(t)
    big = shift.big_omega(t)
    if np.any(~(big > 0)):
        raise ShiftError(f"shift {shift.name!r}: alpha' <= 0 (Omega = 1 + t omega' not positive)")
    return big * np.exp(shift.omega(t))


def _invert_log(shift: Shift, v, tol: float, max_iter: int = 100):
    """Solve ``u + omega(e^u) = v`` for ``u`` (vectorized safeguarded Newton)."""
    v = np.asarray(v, dtype=float)
    scalar = v.ndim == 0
    v = np.atleast_1d(v)

    def resid(u):
        return u + shift.omega(np.exp(u)) - v

    lo, hi = v - 1.0, v + 1.0
    for _ in range(64):
        bad = resid(lo) > 0
        if not bad.any():
            break
        lo = np.where(bad, lo - 2.0 * (hi - lo), lo)
    for _ in range(64):
        bad = resid(hi) < 0
        if not bad.any():
            break
        hi = np.where(bad, hi + 2.0 * (hi - lo), hi)
    if np.any(resid(lo) > 0) or np.any(resid(hi) < 0):
        raise ShiftError(f"cannot bracket the inverse of {shift.name!r}; omega unbounded?")

    # absolute tolerance in u, but never below a few ulps of |v|
    tol = np.maximum(tol, 8 * np.finfo(float).eps * np.abs(v))
    u = np.clip(v - shift.omega(np.exp(v)), lo, hi)
    for _ in range(max_iter):
        g = resid(u)
        done = np.abs(g) <= tol
        if done.all():
            break
        hi = np.where(g > 0, u, hi)
        lo = np.where(g < 0, u, lo)
        slope = shift.big_omega(np.exp(u))
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = u - g / slope
        ok = np.isfinite(newton) & (newton > lo) & (newton < hi)
        u = np.where(done, u, np.where(ok, newton, 0.5 * (lo + hi)))
    else:
        if np.any(np.abs(resid(u)) > tol):
            raise ShiftError(f"inverse of {shift.name!r} did not converge in {max_iter} iterations")
    return u[0] if scalar else u


def invert_shift(shift: Shift, s, tol: float = 1e-12):
    """``alpha_{-1}(s)``: the ``t`` with ``alpha(t) = s`` to relative accuracy ``tol``."""
    s = _positive(s)
    if not tol > 0:
        raise ValueError("tol must be positive")
    return np.exp(_invert_log(shift, np.log(s), math.log1p(tol)))


# ---------------------------------------------------------------------------
# composition


def compose(steps: Sequence[tuple[Shift, int]], name: str) -> Shift:
    """The shift obtained by applying ``steps`` left to right.

    Each step is ``(shift, +1)`` for ``alpha`` or ``(shift, -1)`` for
    ``alpha_{-1}``.  The exponent is accumulated as a sum of increments in
    ``u`` so that a single forward step reproduces ``omega`` exactly; the
    log-slope is the product of the per-step slopes (chain rule).
    """
    steps = [(s, int(k)) for s, k in steps]
    if any(k not in (1, -1) for _, k in steps):
        raise ValueError("step powers must be +1 or -1")

    def walk(t):
        u = np.log(_positive(t))
        total = np.zeros_like(u)
        slope = np.ones_like(u)
        for s, k in steps:
            cur = u + total
            if k == 1:
                tc = np.exp(cur)
                slope = slope * s.big_omega(tc)
                total = total + s.omega(tc)
            else:
                new = _invert_log(s, cur, 1e-14)
                slope = slope / s.big_omega(np.exp(new))
                total = total + (new - cur)
        return total, slope

    def omega(t):
        out = walk(t)[0]
        return out[()] if np.ndim(out) == 0 else out

    def log_slope(t):
        out = walk(t)[1]
        return out[()] if np.ndim(out) == 0 else out

    def omega_prime(t):
        t = np.asarray(t, dtype=float)
        return (log_slope(t) - 1.0) / t

    constant = all(s.is_constant for s, _ in steps)
    rng = None
    if all(s.omega_range is not None and s.is_constant for s, _ in steps):
        c = sum(k * s.omega_range[0] for s, k in steps)
        rng = (c, c)
    if not steps:
        rng = (0.0, 0.0)
    return Shift(omega, omega_prime, name, derivative_kind="chain-rule",
                 omega_range=rng, is_constant=constant, _log_slope=log_slope)


def shift_power(shift: Shift, i: int) -> Shift:
    """``alpha_i``; negative powers iterate the inverse."""
    i = int(i)
    if i == 1:
        return shift
    sign = 1 if i >= 0 else -1
    return compose([(shift, sign)] * abs(i), name=f"{shift.name}^{i}")


def iterate_shift(shift: Shift, i: int, t):
    return eval_shift(shift_power(shift, i), t)


def composed_shift(alpha: Shift, beta: Shift, i: int, j: int) -> Shift:
    """``delta_{ij} = alpha_i o beta_{-j}`` (``beta_{-j}`` is applied first)."""
    i, j = int(i), int(j)
    steps = [(beta, -1 if j > 0 else 1)] * abs(j) + [(alpha, 1 if i > 0 else -1)] * abs(i)
    if i == 1 and j == 0:
        return alpha
    return compose(steps, name=f"({alpha.name})_{i} o ({beta.name})_{-j}")


def composed_omega(alpha: Shift, beta: Shift, i: int, j: int, t):
    """``omega_{ij}(t) = log(alpha_i(beta_{-j}(t)) / t)``."""
    return composed_shift(alpha, beta, i, j).omega(_positive(t))


# ---------------------------------------------------------------------------
# bounds and validation


@dataclass(frozen=True)
class ShiftBoundsReport:
    inf_omega: float
    sup_omega: float
    inf_Omega: float
    M_omega: float
    grid: GridSpec
    endpoint_oscillation: tuple[float, float] = (0.0, 0.0)
    reliable: bool = True

    def __post_init__(self):
        if self.inf_omega > self.sup_omega:
            raise ValueError("inf_omega > sup_omega")

    def as_dict(self) -> dict:
        return {
            "inf_omega": self.inf_omega,
            "sup_omega": self.sup_omega,
            "inf_Omega": self.inf_Omega,
            "M_omega": self.M_omega,
            "grid": {"U": self.grid.U, "N": self.grid.N},
            "endpoint_oscillation": list(self.endpoint_oscillation),
            "reliable": self.reliable,
        }


def dyadic_oscillation(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Sliding ``max - min`` over windows of length ``log 2`` in ``u``.

    These windows are the dyadic intervals ``[r, 2r]`` in ``t``.
    """
    width = max(2, int(round(math.log(2.0) / grid.h)) + 1)
    values = np.asarray(values, dtype=float)
    return maximum_filter1d(values, width, mode="nearest") - minimum_filter1d(values, width, mode="nearest")


def _end_slices(grid: GridSpec, decades: float):
    n = min(grid.N // 2, max(1, int(round(decades * DECADE / grid.h))))
    return slice(0, n), slice(grid.N - n, grid.N)


def estimate_bounds(shift_omega, grid: GridSpec = VALIDATION_GRID,
                    threshold: float = SO_THRESHOLD) -> ShiftBoundsReport:
    """Grid ``inf``/``sup`` of ``omega`` plus endpoint stabilization diagnostics.

    ``shift_omega`` is a :class:`Shift` or a bare callable.  A bound is
    flagged unreliable (with a :class:`BoundsWarning`) when the dyadic
    oscillation over the last decade at either end exceeds ``threshold``.
    """
    omega = getattr(shift_omega, "omega", shift_omega)
    w = np.asarray(omega(grid.t), dtype=float)
    if w.shape != grid.t.shape:
        w = np.broadcast_to(w, grid.t.shape)
    if not np.all(np.isfinite(w)):
        raise ShiftError("omega is not finite on the grid")
    lo, hi = float(w.min()), float(w.max())
    declared = getattr(shift_omega, "omega_range", None)
    if declared is not None:
        lo, hi = min(lo, declared[0]), max(hi, declared[1])
    osc = dyadic_oscillation(w, grid)
    left, right = _end_slices(grid, 1.0)
    end_osc = (float(osc[left].max()), float(osc[right].max()))
    reliable = max(end_osc) <= threshold
    if not reliable:
        warnings.warn(
            f"omega has not stabilized at the grid ends (dyadic oscillation {max(end_osc):.3g}); "
            "inf/sup may be underestimated",
            BoundsWarning,
            stacklevel=2,
        )
    inf_big = float("nan")
    if isinstance(shift_omega, Shift):
        inf_big = float(np.min(shift_omega.big_omega(grid.t)))
    return ShiftBoundsReport(
        inf_omega=lo,
        sup_omega=hi,
        inf_Omega=inf_big,
        M_omega=max(abs(lo), abs(hi)),
        grid=grid,
        endpoint_oscillation=end_osc,
        reliable=reliable,
    )


@dataclass(frozen=True)
class ShiftValidation:
    name: str
    M_omega: float
    sup_psi: float
    inf_Omega: float
    increasing: bool
    so_oscillation: dict
    so_ok: bool

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def validate_shift(shift: Shift, grid: GridSpec = VALIDATION_GRID, decades: int = 5,
                   threshold: float = SO_THRESHOLD) -> ShiftValidation:
    """Check admissibility of ``shift`` on ``grid``.

    Raises :class:`ShiftError` if ``omega`` or ``psi`` is not finite or
    ``Omega`` is not positive.  Slow oscillation is only corroborated: the
    dyadic oscillation of ``omega`` and ``psi`` over the outermost
    ``decades`` decades must stay below ``threshold`` and must not grow
    towards the ends.
    """
    t = grid.t
    w = np.broadcast_to(np.asarray(shift.omega(t), dtype=float), t.shape)
    psi = np.broadcast_to(np.asarray(shift.psi(t), dtype=float), t.shape)
    if not (np.all(np.isfinite(w)) and np.all(np.isfinite(psi))):
        raise ShiftError(f"shift {shift.name!r}: omega or t*omega' not finite on the grid")
    big = 1.0 + psi
    if big.min() <= 0:
        k = int(np.argmin(big))
        raise ShiftError(
            f"shift {shift.name!r}: 1 + t omega'(t) = {big[k]:.3g} <= 0 at t = {t[k]:.3g}"
        )
    increasing = bool(np.all(np.diff(grid.u + w) > 0))

    per_decade = max(1, int(round(DECADE / grid.h)))
    report = {}
    ok = True
    for label, values in (("omega", w), ("psi", psi)):
        osc = dyadic_oscillation(values, grid)
        for end, sl in zip(("zero", "infinity"), _end_slices(grid, decades)):
            seg = osc[sl] if end == "infinity" else osc[sl][::-1]
            # inner -> outer decade maxima
            chunks = [seg[k:k + per_decade] for k in range(0, len(seg), per_decade)]
            maxima = [float(c.max()) for c in chunks if len(c)]
            report[f"{label}@{end}"] = maxima
            if maxima[-1] > threshold or maxima[-1] > maxima[0] * (1 + 1e-9) + 1e-12:
                ok = False
    return ShiftValidation(
        name=shift.name,
        M_omega=float(np.max(np.abs(w))),
        sup_psi=float(np.max(np.abs(psi))),
        inf_Omega=float(big.min()),
        increasing=increasing,
        so_oscillation=report,
        so_ok=ok,
    )
