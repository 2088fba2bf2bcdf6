import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from complex_momentum.errors import DegenerateCubic, DimensionTooLarge, NonSquare
from complex_momentum.numcore import (
    ComplexScalar,
    CubicPolynomial,
    cubic_roots,
    dense_spectrum,
    solve_cubic,
    spectral_radius,
)

finite = st.floats(-10, 10, allow_nan=False)
cplx = st.builds(complex, finite, finite)


@given(cplx, cplx)
def test_scalar_product_cartesian_matches_polar(z1, z2):
    a, b = ComplexScalar.coerce(z1), ComplexScalar.coerce(z2)
    cart, pol = complex(a * b), complex(a.mul_polar(b))
    assert abs(cart - pol) <= 1e-9 * (1 + abs(cart))
    assert abs(cart - z1 * z2) <= 1e-12 * (1 + abs(cart))


def test_phase_range_and_conjugate():
    assert ComplexScalar(-1.0, 0.0).phase() == pytest.approx(math.pi)
    assert ComplexScalar(-1.0, -0.0).phase() == pytest.approx(math.pi)
    z = ComplexScalar.from_polar(2.0, 0.3)
    assert z.magnitude() == pytest.approx(2.0)
    assert complex(z.conjugate()) == pytest.approx(complex(z).conjugate())
    assert complex(z**3) == pytest.approx(complex(z) ** 3)
    assert complex(z - 1) == pytest.approx(complex(z) - 1)


@settings(max_examples=200)
@given(cplx, cplx, cplx)
def test_roots_of_monic_from_known_roots(r1, r2, r3):
    # expand (x - r1)(x - r2)(x - r3)
    c2 = -(r1 + r2 + r3)
    c1 = r1 * r2 + r1 * r3 + r2 * r3
    c0 = -r1 * r2 * r3
    got = np.sort_complex(cubic_roots(1, c2, c1, c0))
    ref = np.sort_complex(np.roots([1, c2, c1, c0]).astype(complex))
    # residual check is robust for clustered roots
    p = CubicPolynomial(1, c2, c1, c0)
    scale = 1 + max(abs(r1), abs(r2), abs(r3)) ** 3
    assert np.all(np.abs(p(got)) <= 1e-9 * scale)
    assert np.allclose(np.sort(np.abs(got)), np.sort(np.abs(ref)), atol=1e-4 * scale ** (1 / 3))


def test_roots_triple_and_zero():
    r = cubic_roots(1, -3, 3, -1)  # (x - 1)^3
    assert np.allclose(r, 1, atol=1e-5)
    r = cubic_roots(2, 0, 0, 0)
    assert np.allclose(r, 0)


def test_roots_vectorised_shape():
    c = np.ones((4, 5))
    assert cubic_roots(c, 0, c, 1).shape == (4, 5, 3)


def test_degenerate_cubic_raises():
    with pytest.raises(DegenerateCubic):
        cubic_roots(0, 1, 2, 3)
    with pytest.raises(DegenerateCubic):
        cubic_roots(0, 0, 0, 0)
    with pytest.raises(DegenerateCubic):
        solve_cubic(CubicPolynomial(1e-20, 1, 1, 1))


def test_polynomial_derivative():
    p = CubicPolynomial(2, -1j, 3, 1)
    x, h = 0.3 + 0.2j, 1e-6
    assert p.derivative(x) == pytest.approx((p(x + h) - p(x - h)) / (2 * h), rel=1e-6)


def test_dense_spectrum_rotation_and_validation():
    R = np.array([[0.0, 1.0], [-1.0, 0.0]])
    assert np.allclose(np.sort_complex(dense_spectrum(R)), [-1j, 1j])
    assert spectral_radius(2 * R) == pytest.approx(2.0)
    assert dense_spectrum(np.zeros((0, 0))).size == 0
    with pytest.raises(NonSquare):
        dense_spectrum(np.zeros((2, 3)))
    with pytest.raises(DimensionTooLarge):
        dense_spectrum(np.eye(65))


def test_dense_spectrum_matches_trace_and_determinant(rng):
    M = rng.normal(size=(7, 7))
    ev = dense_spectrum(M)
    assert np.sum(ev) == pytest.approx(np.trace(M))
    assert np.prod(ev) == pytest.approx(np.linalg.det(M))
    assert cmath.isclose(np.sum(ev), np.trace(M), abs_tol=1e-10)
