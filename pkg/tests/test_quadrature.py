import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nahmzeta.quadrature import (QuadratureSpec, chebyshev_nodes, fsum_complex, integrate,
                                 integrate_chebyshev, tanh_sinh_nodes)


def test_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(rule="simpson")
    with pytest.raises(ValueError):
        QuadratureSpec(panels=0)
    with pytest.raises(ValueError):
        QuadratureSpec(tol=0)
    assert QuadratureSpec(panels=3).refined().panels == 6


@pytest.mark.parametrize("rule", ["gauss-legendre", "gauss-chebyshev", "tanh-sinh"])
def test_smooth_integral(rule):
    val, err = integrate(np.exp, 0.0, 1.0, QuadratureSpec(rule=rule, panels=4))
    assert val == pytest.approx(math.e - 1, rel=1e-13)
    assert err < 1e-8


def test_chebyshev_weight_exact():
    # int_a^b dx / sqrt((x-a)(b-x)) = pi for any interval
    x, da, db, w = chebyshev_nodes(-2.0, 5.0, 2, 16)
    assert fsum_complex(w) == pytest.approx(math.pi, rel=1e-15)
    val, _ = integrate_chebyshev(lambda x, da, db: x, -2.0, 5.0)
    assert val == pytest.approx(math.pi * 1.5, rel=1e-14)


def test_tanh_sinh_inverse_sqrt_endpoints():
    x, da, db, w = tanh_sinh_nodes(0.0, 1.0, 7)
    val = fsum_complex(w / np.sqrt(da * db))
    assert val == pytest.approx(math.pi, rel=1e-14)


@given(st.floats(-5, 5), st.floats(0.1, 5))
def test_endpoint_offsets_consistent(a, width):
    b = a + width
    x, da, db, _ = tanh_sinh_nodes(a, b, 5)
    assert np.all(da >= 0) and np.all(db >= 0)
    assert np.allclose(da + db, width, rtol=1e-14)


def test_fsum_complex_order_fixed():
    v = np.array([1e16, 1.0, -1e16, 1j])
    assert fsum_complex(v) == 1.0 + 1j
