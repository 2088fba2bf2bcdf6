"""Complex scalars, cubic root finding and small dense spectra.

These are the low-level oracles the spectral analysis leans on. Dense
matrices are plain 2-D numpy arrays; ``as_square`` validates them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateCubic, DimensionTooLarge, NonSquare

MAX_DENSE_DIM = 64
DEGENERACY_RTOL = 1e-14

_OMEGA = np.exp(2j * np.pi / 3)


@dataclass(frozen=True)
class ComplexScalar:
    """A complex number kept in Cartesian form with polar accessors."""

    re: float
    im: float = 0.0

    @classmethod
    def from_polar(cls, magnitude: float, phase: float) -> ComplexScalar:
        return cls(magnitude * math.cos(phase), magnitude * math.sin(phase))

    @classmethod
    def coerce(cls, z) -> ComplexScalar:
        if isinstance(z, ComplexScalar):
            return z
        z = complex(z)
        return cls(z.real, z.imag)

    def magnitude(self) -> float:
        return math.hypot(self.re, self.im)

    def phase(self) -> float:
        """Argument in (-pi, pi]."""
        theta = math.atan2(self.im, self.re)
        return math.pi if theta == -math.pi else theta

    def conjugate(self) -> ComplexScalar:
        return ComplexScalar(self.re, -self.im)

    def __complex__(self) -> complex:
        return complex(self.re, self.im)

    def __add__(self, other) -> ComplexScalar:
        other = ComplexScalar.coerce(other)
        return ComplexScalar(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __neg__(self) -> ComplexScalar:
        return ComplexScalar(-self.re, -self.im)

    def __sub__(self, other) -> ComplexScalar:
        return self + (-ComplexScalar.coerce(other))

    def __mul__(self, other) -> ComplexScalar:
        # (a + ib)(c + id) = (ac - bd) + i(ad + bc)
        other = ComplexScalar.coerce(other)
        return ComplexScalar(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def mul_polar(self, other) -> ComplexScalar:
        """Product via magnitudes and phases: |z1||z2| exp(i(arg z1 + arg z2))."""
        other = ComplexScalar.coerce(other)
        return ComplexScalar.from_polar(
            self.magnitude() * other.magnitude(), self.phase() + other.phase()
        )

    def __pow__(self, k: int) -> ComplexScalar:
        return ComplexScalar.from_polar(self.magnitude() ** k, self.phase() * k)


@dataclass(frozen=True)
class CubicPolynomial:
    """c3*x**3 + c2*x**2 + c1*x + c0 with complex coefficients."""

    c3: complex
    c2: complex
    c1: complex
    c0: complex

    def __post_init__(self):
        for name in ("c3", "c2", "c1", "c0"):
            object.__setattr__(self, name, complex(getattr(self, name)))

    @property
    def coefficients(self) -> tuple[complex, complex, complex, complex]:
        return (self.c3, self.c2, self.c1, self.c0)

    def __call__(self, x):
        return ((self.c3 * x + self.c2) * x + self.c1) * x + self.c0

    def derivative(self, x):
        return (3 * self.c3 * x + 2 * self.c2) * x + self.c1

    def roots(self) -> np.ndarray:
        return solve_cubic(self)


def cubic_roots(c3, c2, c1, c0) -> np.ndarray:
    """Vectorised roots of c3 x^3 + c2 x^2 + c1 x + c0.

    Coefficients broadcast against each other; the result has shape
    ``broadcast_shape + (3,)``. Uses the depressed-cubic closed form with the
    larger-magnitude branch for the cube-root argument, then one Newton
    polish per root that is kept only when it lowers the residual.
    """
    c3, c2, c1, c0 = np.broadcast_arrays(*(np.asarray(c, dtype=complex) for c in (c3, c2, c1, c0)))
    scale = np.maximum.reduce([np.abs(c3), np.abs(c2), np.abs(c1), np.abs(c0)])
    if np.any(np.abs(c3) <= DEGENERACY_RTOL * scale) or np.any(scale == 0):
        raise DegenerateCubic("leading coefficient is numerically zero")

    a, b, c = c2 / c3, c1 / c3, c0 / c3
    p = b - a * a / 3
    q = 2 * a**3 / 27 - a * b / 3 + c
    disc = np.sqrt(q * q / 4 + p**3 / 27)
    w1, w2 = -q / 2 + disc, -q / 2 - disc
    w = np.where(np.abs(w1) >= np.abs(w2), w1, w2)
    C = np.power(w, 1 / 3)

    ks = _OMEGA ** np.arange(3)
    Ck = C[..., None] * ks
    zero = np.abs(C)[..., None] == 0
    safe = np.where(zero, 1.0, Ck)
    t = np.where(zero, 0.0, Ck - p[..., None] / (3 * safe))
    x = t - a[..., None] / 3

    C3, C2, C1, C0 = (v[..., None] for v in (c3, c2, c1, c0))
    px = ((C3 * x + C2) * x + C1) * x + C0
    dpx = (3 * C3 * x + 2 * C2) * x + C1
    ok = dpx != 0
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        x_new = np.where(ok, x - px / np.where(ok, dpx, 1.0), x)
        px_new = ((C3 * x_new + C2) * x_new + C1) * x_new + C0
    better = np.isfinite(px_new) & (np.abs(px_new) < np.abs(px))
    return np.where(better, x_new, x)


def solve_cubic(p: CubicPolynomial) -> np.ndarray:
    """The three roots of ``p`` (with multiplicity) as a complex array."""
    return cubic_roots(*p.coefficients)


def as_square(m, max_dim: int | None = None) -> np.ndarray:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NonSquare(f"expected a square matrix, got shape {m.shape}")
    if max_dim is not None and m.shape[0] > max_dim:
        raise DimensionTooLarge(f"dimension {m.shape[0]} exceeds {max_dim}")
    return m


def dense_spectrum(m) -> np.ndarray:
    """Eigenvalues of a small dense matrix (LAPACK geev)."""
    m = as_square(m, MAX_DENSE_DIM)
    if m.shape[0] == 0:
        return np.zeros(0, dtype=complex)
    return np.linalg.eigvals(m).astype(complex)


def spectral_radius(m) -> float:
    eigs = dense_spectrum(m)
    return float(np.max(np.abs(eigs))) if eigs.size else 0.0
