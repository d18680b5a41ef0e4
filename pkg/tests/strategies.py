"""Hypothesis strategies shared by the test modules."""

from hypothesis import strategies as st

from mellinshift.symbols import AdmissibleParams

exponents = st.floats(1.05, 8.0)
strips = st.floats(0.02, 0.98)
imag_parts = st.floats(-2.0, 2.0)
reals = st.floats(-12.0, 12.0)


@st.composite
def params(draw, p=exponents, strip=strips, im=imag_parts):
    pv = draw(p)
    return AdmissibleParams(pv, complex(draw(strip) - 1 / pv, draw(im)))


@st.composite
def param_pairs(draw):
    """Two admissible parameter sets sharing ``p``."""
    pv = draw(exponents)
    a = AdmissibleParams(pv, complex(draw(strips) - 1 / pv, draw(imag_parts)))
    b = AdmissibleParams(pv, complex(draw(strips) - 1 / pv, draw(imag_parts)))
    return a, b
