"""The ten acceptance criteria, each at its stated tolerance and time budget.

Every test records a single ``criterion N [PASS|FAIL]`` line; the lines are
repeated in the pytest terminal summary.
"""

import io
import math
import time
import warnings

import numpy as np
import pytest

from mellinshift import cli
from mellinshift.fredholm import (
    DEFAULT_TAUS,
    certificate_grid_min,
    check_main_condition,
    compute_certificate,
    winding_ladder,
)
from mellinshift.grid import GridSpec
from mellinshift.operators import (
    LP_MU,
    GridExitWarning,
    MuParts,
    TestFunctionFamily,
    apply_pdo,
    build_A_alpha_gamma,
    finite_section_invertibility,
    kernel_identity_residual,
    mellin_multiplier_op,
    pv_cauchy_op,
    refinement_ladder,
    relative_residual,
    similarity_residual,
)
from mellinshift.shifts import (
    BoundsWarning,
    ShiftBoundsReport,
    dilation_shift,
    estimate_bounds,
    oscillating_shift,
    shift_from_expression,
)
from mellinshift.symbols import (
    AdmissibleParams,
    c_pdo_symbol,
    g_pdo_symbol,
    p_gamma_pm,
    r_gamma,
    s_gamma,
)

SEED = 20240611


def quiet(fn, *args, **kwargs):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GridExitWarning)
        return fn(*args, **kwargs)


def random_params(rng, strip=(0.02, 0.98), im=2.0, p=(1.1, 6.0)):
    pv = float(rng.uniform(*p))
    return AdmissibleParams(pv, complex(rng.uniform(*strip) - 1 / pv, rng.uniform(-im, im)))


# -- 1


def test_criterion_1_scalar_identities(acceptance):
    rng = np.random.default_rng(SEED)
    t0 = time.perf_counter()
    worst = {"product": 0.0, "difference": 0.0, "projection": 0.0}
    for _ in range(10_000):
        a = random_params(rng)
        b = AdmissibleParams(a.p, complex(rng.uniform(0.02, 0.98) - 1 / a.p, rng.uniform(-2, 2)))
        x = rng.uniform(-12, 12)
        sa, sb, ra, rb = s_gamma(a, x), s_gamma(b, x), r_gamma(a, x), r_gamma(b, x)
        d = np.pi * (a.gamma - b.gamma)
        worst["product"] = max(worst["product"], abs(sa * sb - 1 - np.cos(d) * ra * rb))
        worst["difference"] = max(worst["difference"], abs(sa - sb + 1j * np.sin(d) * ra * rb))
        proj = p_gamma_pm(a, x, -1) * p_gamma_pm(b, x, 1) + np.exp(1j * np.pi * (b.gamma - a.gamma)) / 4 * ra * rb
        worst["projection"] = max(worst["projection"], abs(proj))
    elapsed = time.perf_counter() - t0
    ok = max(worst.values()) < 1e-12 and elapsed < 5
    acceptance(1, "scalar identity suite", ok,
               ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + f" (< 1e-12) over 10^4 draws, {elapsed:.1f} s")
    assert ok


# -- 2


def test_criterion_2_kernel_identity(acceptance):
    rng = np.random.default_rng(SEED + 2)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(10):
        pr = random_params(rng, strip=(0.1, 0.9), im=1.5, p=(1.2, 5.0))
        k = float(np.exp(rng.uniform(-2, 2)))
        q, c = kernel_identity_residual(k, pr, float(rng.uniform(-3, 3)))
        worst = max(worst, abs(q - c))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-8 and elapsed < 10
    acceptance(2, "Mellin kernel identity by quadrature", ok,
               f"max |quad - closed| {worst:.1e} (< 1e-8) at 10 points, {elapsed:.1f} s")
    assert ok


# -- 3

CROSS_PARAMS = [
    AdmissibleParams(2.0, 0j),
    AdmissibleParams(2.0, 0.1 + 0.3j),
    AdmissibleParams(3.0, 0.2 - 0.5j),
    AdmissibleParams(1.5, -0.3 + 1.0j),
    AdmissibleParams(4.0, 0.45 + 0.2j),
]


def test_criterion_3_cross_discretization(acceptance):
    grid0 = GridSpec(20.0, 4096)
    family = TestFunctionFamily.default()
    t0 = time.perf_counter()
    worst = 0.0
    for pr in CROSS_PARAMS:
        grid = grid0.with_p(pr.p)
        F = family.matrix(grid)
        S = pv_cauchy_op(pr, grid, lazy=True, space=LP_MU)
        C = mellin_multiplier_op(lambda x, pr=pr: s_gamma(pr, x), grid, padding=2, lazy=True)
        worst = max(worst, relative_residual(S.apply(F), C.apply(F)))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-3 and elapsed < 60
    acceptance(3, "PV quadrature vs Mellin multiplier", ok,
               f"max relative L2 {worst:.1e} (< 1e-3), {len(CROSS_PARAMS)} (p, gamma) x 5 functions, "
               f"N=4096 U=20, {elapsed:.1f} s")
    assert ok


# -- 4


def test_criterion_4_pdo_realization(acceptance):
    grid = GridSpec(20.0, 4096)
    shift = oscillating_shift()
    family = TestFunctionFamily.default()
    t0 = time.perf_counter()
    worst = 0.0
    for pr in (AdmissibleParams(2.0, 0.1 + 0.3j), AdmissibleParams(3.0, 0.2 - 0.5j)):
        g = grid.with_p(pr.p)
        F = family.matrix(g)
        parts = quiet(MuParts.build, pr, shift, g)
        lhs = parts.U.apply(parts.R.apply(F))
        rhs = apply_pdo(c_pdo_symbol(shift, pr), g, F, padding=2)
        worst = max(worst, relative_residual(lhs, rhs))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-3 and elapsed < 60
    acceptance(4, "U_alpha R_gamma as the PDO with symbol c", ok,
               f"max relative L2 {worst:.1e} (< 1e-3), oscillating preset, N=4096, {elapsed:.1f} s")
    assert ok


# -- 5


def test_criterion_5_similarity(acceptance):
    pr = AdmissibleParams(2.0, 0.1 + 0.3j)
    shift = oscillating_shift()
    t0 = time.perf_counter()
    grids = refinement_ladder(GridSpec(20.0, 1024), (1024, 2048, 4096))
    vals = [similarity_residual(pr, shift, g) for g in grids]
    elapsed = time.perf_counter() - t0
    decreasing = vals[0] > vals[1] > vals[2]
    ok = decreasing and vals[-1] < 1e-2 and elapsed < 180
    acceptance(5, "Phi A Phi^-1 vs Op(g) modulo compacts", ok,
               "residuals " + " > ".join(f"{v:.2e}" for v in vals)
               + f" at N=1024/2048/4096 (fixed h, U=20/40/80), final < 1e-2, {elapsed:.1f} s")
    assert ok


# -- 6 and 7 share their draws


def _draw_suite(n=100):
    rng = np.random.default_rng(SEED + 6)
    grid = GridSpec(40.0, 4096)
    draws = []
    while len(draws) < n:
        pr = random_params(rng, strip=(0.1, 0.9), im=1.5, p=(1.2, 5.0))
        kind = rng.integers(3)
        if kind == 0:
            a = float(rng.uniform(0.1, 1.5))
            shift = oscillating_shift(a, float(rng.uniform(0.1, 0.95 / a)))
        elif kind == 1:
            shift = shift_from_expression(f"{rng.uniform(-1.2, 1.2)!r}*arctan(log(t))")
        else:
            shift = dilation_shift(float(rng.uniform(-2, 2)))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", BoundsWarning)
            bounds = estimate_bounds(shift, grid)
        if check_main_condition(pr, bounds).holds:
            draws.append((pr, shift, bounds))
    return draws


@pytest.fixture(scope="module")
def suite():
    return _draw_suite()


def test_criterion_6_certificate_soundness(acceptance, suite):
    t0 = time.perf_counter()
    violations, samples, worst_margin = 0, math.inf, math.inf
    n_theta = 11
    for pr, shift, bounds in suite:
        cert = compute_certificate(pr, bounds)
        w = np.broadcast_to(np.asarray(shift.omega(bounds.grid.t), dtype=float), bounds.grid.t.shape)
        w = np.unique(np.concatenate([w[:: max(1, w.size // 44)], [bounds.inf_omega, bounds.sup_omega]]))
        # the x grid grows so that every draw sees at least 10^6 (omega, x, theta) samples
        n_x = math.ceil(10 ** 6 / (w.size * n_theta))
        observed, _ = certificate_grid_min(pr, w, n_x=n_x, n_theta=n_theta)
        samples = min(samples, w.size * (n_x + 4) * n_theta)
        violations += observed < cert.c
        worst_margin = min(worst_margin, observed - cert.c)
    elapsed = time.perf_counter() - t0
    ok = violations == 0 and samples >= 10 ** 6 and elapsed < 120 and len(suite) >= 100
    acceptance(6, "certificate soundness", ok,
               f"{violations} violations over {len(suite)} draws, >= {samples:.2e} samples each, "
               f"min margin {worst_margin:.2e}, {elapsed:.1f} s")
    assert ok


def test_criterion_7_index_zero(acceptance, suite):
    t0 = time.perf_counter()
    bad = []
    for pr, shift, _ in suite:
        ladder = winding_ladder(g_pdo_symbol(shift, pr), DEFAULT_TAUS, x_max=abs(pr.im_gamma) + 8)
        if not (ladder.stabilized and ladder.winding == 0):
            bad.append((pr, shift.name, [r.winding for r in ladder.results]))
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 120
    acceptance(7, "winding number zero", ok,
               f"{len(suite) - len(bad)}/{len(suite)} draws give 0 at tau = e^3, e^5, e^8, {elapsed:.1f} s")
    assert ok, bad[:3]


# -- 8


def test_criterion_8_condition_arithmetic(acceptance):
    grid = GridSpec(10.0, 64)

    def report(p, gamma, lo, hi):
        return check_main_condition(AdmissibleParams(p, gamma), ShiftBoundsReport(lo, hi, 1.0, max(abs(lo), abs(hi)), grid))

    # hand arithmetic: strip + Im(gamma) * omega / (2 pi)
    real = [report(p, re, lo, hi) for p, re, lo, hi in [(2, 0, -1, 1), (3, 0.4, -2, 0.5), (1.5, -0.2, 5, 5)]]
    ex2 = report(2, 0.1 + 0.3j, -1, 1)
    ex3 = report(2, 0.4 + 2j, 1, 1)
    checks = [
        all(r.holds and abs(r.lower - r.strip) < 1e-5 and abs(r.upper - r.strip) < 1e-5 for r in real),
        abs(ex2.lower - 0.55225) < 1e-5 and abs(ex2.upper - 0.64775) < 1e-5 and ex2.holds,
        abs(ex3.upper - 1.21831) < 1e-5 and not ex3.holds,
    ]
    ok = all(checks)
    acceptance(8, "condition arithmetic", ok,
               f"Im gamma = 0 holds; lower {ex2.lower:.5f} upper {ex2.upper:.5f} holds; "
               f"upper {ex3.upper:.5f} fails (tol 1e-5)")
    assert ok


# -- 9

FINITE_SECTION_MEMBERS = [
    (AdmissibleParams(2.0, 0.1 + 0.3j), oscillating_shift()),
    (AdmissibleParams(2.0, 0.1 + 0.3j), oscillating_shift(1.0, 0.5)),
    (AdmissibleParams(3.0, 0.2 - 0.5j), oscillating_shift(0.8, 0.6)),
    (AdmissibleParams(1.5, -0.2 + 0.4j), shift_from_expression("0.7*arctan(log(t))")),
    (AdmissibleParams(2.5, 0.1 + 0.2j), dilation_shift(0.6)),
]


# arctan(log t) has not settled at |log t| = 40; its bounds are still within the condition
@pytest.mark.filterwarnings("ignore::mellinshift.shifts.BoundsWarning")
def test_criterion_9_finite_sections(acceptance):
    t0 = time.perf_counter()
    reports = []
    for pr, shift in FINITE_SECTION_MEMBERS:
        assert check_main_condition(pr, estimate_bounds(shift, GridSpec(40.0, 4096))).holds
        reports.append(finite_section_invertibility(
            lambda n, pr=pr, shift=shift: quiet(build_A_alpha_gamma, pr, shift, GridSpec(20.0, n), space=LP_MU),
            ladder=(256, 512, 1024)))
    elapsed = time.perf_counter() - t0
    kernels = max(max(r.kernel_dim) for r in reports)
    change = max(r.max_relative_change for r in reports)
    ok = kernels == 0 and change <= 0.2 and elapsed < 300
    acceptance(9, "finite-section evidence", ok,
               f"kernel dim {kernels}, sigma_min in [{min(min(r.sigma_min) for r in reports):.3f}, "
               f"{max(max(r.sigma_min) for r in reports):.3f}], max change {100 * change:.2f}% (<= 20%) "
               f"over N=256/512/1024 for 5 members, {elapsed:.1f} s")
    assert ok


# -- 10


def test_criterion_10_end_to_end(acceptance):
    out = io.StringIO()
    t0 = time.perf_counter()
    code = cli.main(["verify", "--grid-n", "1024"], stdout=out)
    elapsed = time.perf_counter() - t0
    failing = [line.strip() for line in out.getvalue().splitlines() if "[FAIL" in line or "[COARSE" in line]
    ok = code == 0 and elapsed < 120
    acceptance(10, "mellinshift verify on shipped presets", ok,
               f"exit {code}, {out.getvalue().count('[PASS')} checks passed, N=1024, {elapsed:.1f} s")
    assert ok, failing
