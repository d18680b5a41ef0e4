"""Fredholm analysis of weighted shift operators with singular integral projections on L^p(R_+).

Submodules:

* :mod:`~mellinshift.symbols`: Mellin symbols ``s_gamma``, ``r_gamma``, ``c``, ``g`` and the homotopy ``g~``.
* :mod:`~mellinshift.shifts`: slowly oscillating shifts ``alpha(t) = t e^{omega(t)}``.
* :mod:`~mellinshift.fredholm`: the sufficient condition, the certificate and winding numbers.
* :mod:`~mellinshift.operators`: discretized operators on a log-uniform grid.
* :mod:`~mellinshift.verify`: the operator-identity suite.
"""

__version__ = "0.1.0"

from .fredholm import (  # noqa: E402
    CONDITION_VIOLATED_INCONCLUSIVE,
    FREDHOLM_INDEX_ZERO,
    check_main_condition,
    compute_certificate,
    fredholm_report,
    winding_number,
)
from .grid import GridSpec  # noqa: E402
from .shifts import composed_shift, estimate_bounds, shift_from_spec  # noqa: E402
from .symbols import AdmissibleParams, g_symbol, r_gamma, s_gamma  # noqa: E402

__all__ = [
    "AdmissibleParams",
    "GridSpec",
    "FREDHOLM_INDEX_ZERO",
    "CONDITION_VIOLATED_INCONCLUSIVE",
    "check_main_condition",
    "compute_certificate",
    "composed_shift",
    "estimate_bounds",
    "fredholm_report",
    "g_symbol",
    "r_gamma",
    "s_gamma",
    "shift_from_spec",
    "winding_number",
]
