"""Scalar and bivariate Mellin symbols.

Everything here is evaluated pointwise in double-precision complex
arithmetic and broadcasts over numpy arrays.  The hyperbolic functions are
written through ``exp(-2|z|)`` so that nothing overflows for large ``|x|``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "AdmissibleParams",
    "ParameterError",
    "PdoSymbol",
    "HomotopySymbol",
    "coth_safe",
    "csch_safe",
    "s_gamma",
    "r_gamma",
    "p_gamma_pm",
    "b_symbol",
    "c_symbol",
    "g_symbol",
    "g_homotopy",
    "g_factorized_modulus",
    "g_pdo_symbol",
    "c_pdo_symbol",
    "g_homotopy_symbol",
]


class ParameterError(ValueError):
    """Raised for parameters outside the admissible range."""


@dataclass(frozen=True)
class AdmissibleParams:
    """Exponent ``p`` and weight ``gamma`` with ``0 < 1/p + Re gamma < 1``."""

    p: float
    gamma: complex = 0j

    def __post_init__(self):
        p = float(self.p)
        gamma = complex(self.gamma)
        if not np.isfinite(p) or not 1.0 < p:
            raise ParameterError(f"p must satisfy 1 < p < inf, got {self.p!r}")
        if not (np.isfinite(gamma.real) and np.isfinite(gamma.imag)):
            raise ParameterError(f"gamma must be finite, got {self.gamma!r}")
        strip = 1.0 / p + gamma.real
        if not 0.0 < strip < 1.0:
            raise ParameterError(
                f"0 < 1/p + Re(gamma) < 1 violated: 1/p + Re(gamma) = {strip!r}"
            )
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "gamma", gamma)

    @property
    def strip(self) -> float:
        """``1/p + Re gamma``, the position inside the admissible strip."""
        return 1.0 / self.p + self.gamma.real

    @property
    def re_gamma(self) -> float:
        return self.gamma.real

    @property
    def im_gamma(self) -> float:
        return self.gamma.imag

    def conjugate(self) -> "AdmissibleParams":
        return AdmissibleParams(self.p, self.gamma.conjugate())


def _check(params) -> AdmissibleParams:
    if not isinstance(params, AdmissibleParams):
        raise ParameterError(f"expected AdmissibleParams, got {type(params).__name__}")
    return params


def _z(params: AdmissibleParams, x):
    # pi*(x + i/p + i*gamma) = pi*(x - Im gamma) + i*pi*(1/p + Re gamma)
    x = np.asarray(x, dtype=float)
    return np.pi * (x - params.im_gamma) + 1j * np.pi * params.strip


def coth_safe(z):
    """``coth(z)`` without overflow; ``Re z = +-inf`` maps to ``+-1``."""
    z = np.asarray(z, dtype=complex)
    sgn = np.where(z.real >= 0, 1.0, -1.0)
    with np.errstate(invalid="ignore", over="ignore"):
        w = sgn * z
        e = np.exp(-2.0 * w)
        out = sgn * (1.0 + e) / (-np.expm1(-2.0 * w))
    out = np.where(np.isinf(z.real), sgn + 0j, out)
    return out[()] if out.ndim == 0 else out


def csch_safe(z):
    """``1/sinh(z)`` without overflow; ``Re z = +-inf`` maps to ``0``."""
    z = np.asarray(z, dtype=complex)
    sgn = np.where(z.real >= 0, 1.0, -1.0)
    with np.errstate(invalid="ignore", over="ignore"):
        w = sgn * z
        out = sgn * 2.0 * np.exp(-w) / (-np.expm1(-2.0 * w))
    out = np.where(np.isinf(z.real), 0j, out)
    return out[()] if out.ndim == 0 else out


def s_gamma(params: AdmissibleParams, x):
    """Symbol of the weighted Cauchy singular operator, ``coth(pi(x + i/p + i gamma))``."""
    return coth_safe(_z(_check(params), x))


def r_gamma(params: AdmissibleParams, x):
    """Symbol of the Mellin convolution ``R_gamma``, ``1/sinh(pi(x + i/p + i gamma))``."""
    return csch_safe(_z(_check(params), x))


def p_gamma_pm(params: AdmissibleParams, x, sign: int):
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    return 0.5 * (1.0 + sign * s_gamma(params, x))


def b_symbol(omega_value, params: AdmissibleParams, x):
    omega_value = np.asarray(omega_value, dtype=float)
    x = np.asarray(x, dtype=float)
    return np.exp(1j * omega_value * x) * r_gamma(params, x)


def c_symbol(shift_data, params: AdmissibleParams, x, sign: int | None = None):
    """Symbol realizing ``U_alpha R_gamma`` as a Mellin PDO.

    ``shift_data`` is the pair ``(omega(t), Omega(t))`` with
    ``Omega = 1 + t omega'(t)``.  With ``sign=None`` the weighted symbol
    ``Omega^{1/p} e^{i omega x} r_gamma(x)`` is returned; ``sign=+1`` or
    ``-1`` gives the unweighted ``e^{+-i omega x} r_gamma(x)``.
    """
    omega_value, big_omega = shift_data
    big_omega = np.asarray(big_omega, dtype=float)
    if np.any(~(big_omega > 0)):
        raise ParameterError("Omega = 1 + t*omega'(t) must be positive")
    omega_value = np.asarray(omega_value, dtype=float)
    x = np.asarray(x, dtype=float)
    r = r_gamma(params, x)
    if sign is None:
        return big_omega ** (1.0 / params.p) * np.exp(1j * omega_value * x) * r
    if sign not in (1, -1):
        raise ValueError("sign must be +1, -1 or None")
    return np.exp(sign * 1j * omega_value * x) * r


def g_homotopy(omega_value, params: AdmissibleParams, x, theta):
    """The homotopy ``g~(t, x, theta)`` joining ``1`` (theta=0) to ``g`` (theta=1)."""
    params = _check(params)
    theta = np.asarray(theta, dtype=float)
    if np.any((theta < 0) | (theta > 1)) or np.any(np.isnan(theta)):
        raise ValueError("theta must lie in [0, 1]")
    omega_value = np.asarray(omega_value, dtype=float)
    x = np.asarray(x, dtype=float)
    big = np.exp(2 * np.pi * params.im_gamma)
    small = np.exp(-2 * np.pi * params.im_gamma)
    rr = r_gamma(params, x) * r_gamma(params.conjugate(), x)
    with np.errstate(invalid="ignore"):
        phase = theta * omega_value * x
        e = np.exp(1j * phase)  # phase is real, so e^{-i phase} = conj(e)
        bracket = big * (1.0 - np.conj(e)) + small * (1.0 - e)
        out = 1.0 + 0.25 * bracket * rr
    # rr underflows to 0 at |x| = inf; the bracket is then nan
    out = np.where(np.isinf(x), 1.0 + 0j, out)
    return out[()] if np.ndim(out) == 0 else out


def g_symbol(omega_value, params: AdmissibleParams, x):
    """Symbol ``g_{omega,gamma}(t, x)`` of the Mellin PDO similar to ``A_{alpha,gamma}``.

    Shares its code path with :func:`g_homotopy` at ``theta=1`` so the two
    agree bit for bit.
    """
    return g_homotopy(omega_value, params, x, 1.0)


def g_factorized_modulus(omega_value, params: AdmissibleParams, x, theta):
    """The two real factors ``(g_plus, g_minus)`` with ``g_plus*g_minus = |g~|``.

    Each factor is ``sqrt((sinh^2 a + sin^2(b +- phi)) / (sinh^2 a + sin^2 b))``
    with ``a = pi(x -+ Im gamma)``, ``b = pi(1/p + Re gamma)`` and
    ``phi = theta*omega*x/2``.  It is evaluated as
    ``sqrt(1 + sin(phi') sin(2b + phi') / (sinh^2 a + sin^2 b))`` which is
    free of overflow and of the cancellation in the numerator.
    """
    params = _check(params)
    theta = np.asarray(theta, dtype=float)
    if np.any((theta < 0) | (theta > 1)) or np.any(np.isnan(theta)):
        raise ValueError("theta must lie in [0, 1]")
    x = np.asarray(x, dtype=float)
    phi = 0.5 * theta * np.asarray(omega_value, dtype=float) * x
    b = np.pi * params.strip
    factors = []
    for sign in (1, -1):
        a = np.pi * (x - sign * params.im_gamma)
        with np.errstate(over="ignore"):
            denom = np.sinh(a) ** 2 + np.sin(b) ** 2
        ratio = 1.0 + np.sin(sign * phi) * np.sin(2 * b + sign * phi) / denom
        factors.append(np.sqrt(np.maximum(ratio, 0.0)))
    g_plus, g_minus = factors
    if g_plus.ndim == 0:
        return float(g_plus), float(g_minus)
    return g_plus, g_minus


# ---------------------------------------------------------------------------
# Bivariate symbol handles


@dataclass(frozen=True)
class PdoSymbol:
    """A symbol ``a(t, x)`` on ``R_+ x R`` together with its limits at ``x = +-inf``.

    ``eval`` must broadcast over numpy arrays of ``t`` and ``x``.
    """

    eval: Callable
    limit_plus_inf: complex
    limit_minus_inf: complex
    label: str = ""
    t_independent: bool = False

    def __call__(self, t, x):
        return self.eval(t, x)

    def values(self, t, x):
        """Evaluate with ``x = +-inf`` replaced by the stored limits."""
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        t_b, x_b = np.broadcast_arrays(t, x)
        finite = np.isfinite(x_b)
        out = np.empty(t_b.shape, dtype=complex)
        out[finite] = self.eval(t_b[finite], x_b[finite])
        out[x_b == np.inf] = self.limit_plus_inf
        out[x_b == -np.inf] = self.limit_minus_inf
        return out


@dataclass(frozen=True)
class HomotopySymbol:
    eval3: Callable
    label: str = ""

    def __call__(self, t, x, theta):
        return self.eval3(t, x, theta)

    def at(self, theta: float) -> PdoSymbol:
        return PdoSymbol(
            eval=lambda t, x: self.eval3(t, x, theta),
            limit_plus_inf=1.0 + 0j,
            limit_minus_inf=1.0 + 0j,
            label=f"{self.label}[theta={theta:g}]",
        )


def _omega_of(shift):
    # accept a Shift or any callable t -> omega(t)
    return getattr(shift, "omega", shift)


def g_pdo_symbol(shift, params: AdmissibleParams) -> PdoSymbol:
    omega = _omega_of(shift)
    name = getattr(shift, "name", "omega")
    return PdoSymbol(
        eval=lambda t, x: g_symbol(omega(np.asarray(t, dtype=float)), params, x),
        limit_plus_inf=1.0 + 0j,
        limit_minus_inf=1.0 + 0j,
        label=f"g[{name}; p={params.p:g}, gamma={params.gamma:g}]",
        t_independent=bool(getattr(shift, "is_constant", False)),
    )


def g_homotopy_symbol(shift, params: AdmissibleParams) -> HomotopySymbol:
    omega = _omega_of(shift)
    name = getattr(shift, "name", "omega")
    return HomotopySymbol(
        eval3=lambda t, x, theta: g_homotopy(omega(np.asarray(t, dtype=float)), params, x, theta),
        label=f"g~[{name}; p={params.p:g}, gamma={params.gamma:g}]",
    )


def c_pdo_symbol(shift, params: AdmissibleParams, sign: int | None = None) -> PdoSymbol:
    """``c_{omega,gamma}`` (weighted, ``sign=None``) or ``c^{+-}`` as a :class:`PdoSymbol`."""

    def ev(t, x):
        t = np.asarray(t, dtype=float)
        return c_symbol((shift.omega(t), shift.big_omega(t)), params, x, sign)

    tag = "c" if sign is None else ("c+" if sign > 0 else "c-")
    return PdoSymbol(ev, 0j, 0j, label=f"{tag}[{shift.name}]")
