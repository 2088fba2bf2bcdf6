"""Augmented dynamics of complex momentum and predicted convergence rates.

Simultaneous complex momentum on a quadratic game ``g(w) = J w`` is a
linear map on the stacked state ``[Re mu, Im mu, w]``. Its 3d x 3d matrix
``R`` decomposes along the eigenvalues of ``J`` into 3x3 blocks, so the
spectrum of ``R`` is the union of the roots of one cubic per eigenvalue.
The cubic path is the one used for predictions; ``rate_for_full_R`` is the
dense cross-check.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionTooLarge, EmptyGrid
from .numcore import MAX_DENSE_DIM, CubicPolynomial, as_square, cubic_roots, spectral_radius

CONVERGENCE_MARGIN = 1e-12


@dataclass(frozen=True)
class AugmentedJacobian:
    R: np.ndarray
    dim: int

    def state(self, mu, omega) -> np.ndarray:
        mu = np.asarray(mu, dtype=complex)
        return np.concatenate([mu.real, mu.imag, np.asarray(omega, dtype=float)])

    def unpack(self, z):
        d = self.dim
        return z[:d] + 1j * z[d : 2 * d], z[2 * d :]


def build_R(J, alpha, beta) -> AugmentedJacobian:
    """Jacobian of one simultaneous complex-momentum step on ``g(w) = J w``.

    Rows act on ``[Re mu, Im mu, w]``; the parameter row uses ``Re(alpha)``
    on the gradient term so complex step sizes are handled too.
    """
    J = np.asarray(as_square(J), dtype=float)
    d = J.shape[0]
    alpha, beta = complex(alpha), complex(beta)
    ab = alpha * beta
    I, Z = np.eye(d), np.zeros((d, d))
    R = np.block(
        [
            [beta.real * I, -beta.imag * I, -J],
            [beta.imag * I, beta.real * I, Z],
            [ab.real * I, -ab.imag * I, I - alpha.real * J],
        ]
    )
    return AugmentedJacobian(R, d)


def block_matrix(lam, alpha, beta) -> np.ndarray:
    """The 3x3 block of R acting on the eigenspace of eigenvalue ``lam``."""
    lam, alpha, beta = complex(lam), complex(alpha), complex(beta)
    ab = alpha * beta
    return np.array(
        [
            [beta.real, -beta.imag, -lam],
            [beta.imag, beta.real, 0],
            [ab.real, -ab.imag, 1 - alpha.real * lam],
        ],
        dtype=complex,
    )


def _char_coefficients(lam, alpha, beta):
    """Coefficients (x^3, x^2, x, 1) of det(R_k - x I); arrays broadcast."""
    lam = np.asarray(lam, dtype=complex)
    alpha = np.asarray(alpha, dtype=complex)
    beta = np.asarray(beta, dtype=complex)
    a, b = beta.real, beta.imag
    c, d = alpha.real, alpha.imag
    r, u = lam.real, lam.imag
    # -a^2 x + a^2 + acrx + iacux + 2ax^2 - 2ax - b^2 x + b^2 + bdrx + ibdux - crx^2 - icux^2 - x^3 + x^2
    c3 = -np.ones_like(a + r)
    c2 = 2 * a - c * r - 1j * c * u + 1
    c1 = -(a**2) + a * c * r + 1j * a * c * u - 2 * a - b**2 + b * d * r + 1j * b * d * u
    c0 = a**2 + b**2 + 0 * r
    return c3, c2, c1, c0


def char_poly(lam, alpha, beta) -> CubicPolynomial:
    """Cubic whose roots are the eigenvalues of ``block_matrix(lam, alpha, beta)``."""
    return CubicPolynomial(*(complex(v) for v in _char_coefficients(lam, alpha, beta)))


# Specialised forms, each valid under its stated precondition.


def char_poly_imaginary(u, alpha, beta) -> CubicPolynomial:
    """``lam = i u`` (purely adversarial eigenvalue)."""
    alpha, beta = complex(alpha), complex(beta)
    a, b, c, d = beta.real, beta.imag, alpha.real, alpha.imag
    # -a^2 x + a^2 + iacux + 2ax^2 - 2ax - b^2 x + b^2 + ibdux - icux^2 - x^3 + x^2
    return CubicPolynomial(
        -1,
        2 * a - 1j * c * u + 1,
        -(a**2) + 1j * a * c * u - 2 * a - b**2 + 1j * b * d * u,
        a**2 + b**2,
    )


def char_poly_imaginary_real_step(u, alpha: float, beta) -> CubicPolynomial:
    """``lam = i u`` and real ``alpha``."""
    beta = complex(beta)
    a, b, c = beta.real, beta.imag, float(alpha)
    # x(-a^2 + iacu - 2a - b^2) + a^2 + x^2(2a - icu + 1) + b^2 - x^3
    return CubicPolynomial(-1, 2 * a - 1j * c * u + 1, -(a**2) + 1j * a * c * u - 2 * a - b**2, a**2 + b**2)


def char_poly_proportional(alpha_prime: float, beta) -> CubicPolynomial:
    """``lam = i u`` with ``alpha = alpha_prime / |u|``; independent of ``u``."""
    beta = complex(beta)
    a, m2, ap = beta.real, abs(beta) ** 2, float(alpha_prime)
    # x(Re(b)(i a' - 2) - |b|^2) + x^2(2 Re(b) - i a' + 1) + |b|^2 - x^3
    return CubicPolynomial(-1, 2 * a - 1j * ap + 1, a * (1j * ap - 2) - m2, m2)


def char_poly_imaginary_beta(alpha_prime: float, beta_magnitude: float) -> CubicPolynomial:
    """Proportional step size with ``Re(beta) = 0``."""
    m2, ap = float(beta_magnitude) ** 2, float(alpha_prime)
    # |b|^2 - x|b|^2 - x^2(i a' - 1) - x^3
    return CubicPolynomial(-1, -(1j * ap - 1), -m2, m2)


@dataclass
class RatePrediction:
    rho: float
    per_eigenvalue_roots: dict = field(repr=False)
    converges: bool


def augmented_roots(spectrum, alpha, beta) -> np.ndarray:
    """Roots for every eigenvalue; shape ``(len(spectrum), 3)``."""
    spectrum = np.atleast_1d(np.asarray(spectrum, dtype=complex))
    return cubic_roots(*_char_coefficients(spectrum, alpha, beta))


def predicted_rho(spectrum, alpha, beta) -> np.ndarray:
    """Vectorised spectral radius of R over broadcast ``alpha``/``beta`` arrays."""
    spectrum = np.atleast_1d(np.asarray(spectrum, dtype=complex))
    alpha = np.asarray(alpha, dtype=complex)[..., None]
    beta = np.asarray(beta, dtype=complex)[..., None]
    roots = cubic_roots(*_char_coefficients(spectrum, alpha, beta))
    return np.abs(roots).max(axis=(-1, -2))


def convergence_rate(spectrum, alpha, beta) -> RatePrediction:
    """Predicted linear rate: the largest root magnitude over all eigenvalues."""
    spectrum = np.atleast_1d(np.asarray(spectrum, dtype=complex))
    if spectrum.size == 0:
        raise ValueError("spectrum must be nonempty")
    roots = augmented_roots(spectrum, alpha, beta)
    per = {complex(lam): r for lam, r in zip(spectrum, roots)}
    rho = float(np.abs(roots).max())
    return RatePrediction(rho, per, rho < 1 - CONVERGENCE_MARGIN)


def rate_for_full_R(J, alpha, beta) -> float:
    J = as_square(J)
    if 3 * J.shape[0] > MAX_DENSE_DIM:
        raise DimensionTooLarge(f"3d = {3 * J.shape[0]} exceeds {MAX_DENSE_DIM}")
    return spectral_radius(build_R(J, alpha, beta).R)


# --------------------------------------------------------------------------
# grid search


@dataclass
class GridSearchResult:
    """Best cell plus the full table of per-cell metrics.

    ``rho``, ``steps`` and ``grad_evals`` are arrays of shape
    ``(len(alpha_grid), len(mag_grid), len(arg_grid))``; the simulated ones
    are None when the search ran on a spectrum only.
    """

    best: dict
    alpha_grid: np.ndarray
    mag_grid: np.ndarray
    arg_grid: np.ndarray
    rho: np.ndarray
    steps: np.ndarray | None = None
    grad_evals: np.ndarray | None = None
    status: np.ndarray | None = None

    def rows(self):
        for (i, j, k) in itertools.product(*(range(n) for n in self.rho.shape)):
            row = {
                "alpha": float(self.alpha_grid[i]),
                "beta_mag": float(self.mag_grid[j]),
                "beta_arg": float(self.arg_grid[k]),
                "rho": float(self.rho[i, j, k]),
            }
            if self.steps is not None:
                row.update(
                    steps=float(self.steps[i, j, k]),
                    grad_evals=float(self.grad_evals[i, j, k]),
                    status=str(self.status[i, j, k]),
                )
            else:
                row["status"] = "converged" if self.rho[i, j, k] < 1 - CONVERGENCE_MARGIN else "diverged"
            yield row


def _argmin_with_ties(score: np.ndarray, alpha_grid, mag_grid, arg_grid) -> tuple[int, int, int]:
    """Lowest score; ties go to smaller |beta|, then alpha, then |arg beta|."""
    best = np.min(score)
    cand = np.argwhere(score == best)
    key = [(mag_grid[j], alpha_grid[i], abs(arg_grid[k]), i, j, k) for i, j, k in cand]
    i, j, k = min(key)[3:]
    return int(i), int(j), int(k)


def grid_search(
    target,
    alpha_grid,
    mag_grid,
    arg_grid,
    objective: str = "rho",
    omega0=None,
    mode: str = "simultaneous",
    tol_rel: float = 1e-6,
    max_evals: int = 100_000,
) -> GridSearchResult:
    """Search (alpha, |beta|, arg beta) for the best complex-momentum setting.

    ``target`` is either a spectrum (objective ``rho``) or a ``GameSpec``, in
    which case every cell is also simulated and ``objective`` may be
    ``steps`` or ``grad_evals`` (distance below ``tol_rel`` times the initial
    distance within ``max_evals`` evaluations).
    """
    from .games import GameSpec, game_spectrum
    from .optimizers import AltCM, SimCM, simulate_batch

    alpha_grid = np.atleast_1d(np.asarray(alpha_grid, dtype=float))
    mag_grid = np.atleast_1d(np.asarray(mag_grid, dtype=float))
    arg_grid = np.atleast_1d(np.asarray(arg_grid, dtype=float))
    if min(alpha_grid.size, mag_grid.size, arg_grid.size) == 0:
        raise EmptyGrid("every grid needs at least one value")
    A, M, P = np.meshgrid(alpha_grid, mag_grid, arg_grid, indexing="ij")
    B = M * np.exp(1j * P)

    game = target if isinstance(target, GameSpec) else None
    spectrum = game_spectrum(game) if game is not None else np.asarray(target, dtype=complex)
    rho = predicted_rho(spectrum, A, B)
    result = GridSearchResult({}, alpha_grid, mag_grid, arg_grid, rho)

    if game is None:
        if objective != "rho":
            raise ValueError("a spectrum only supports the 'rho' objective")
        score = rho
    else:
        omega0 = np.ones(game.dim) if omega0 is None else np.asarray(omega0, dtype=float)
        tol = tol_rel * float(np.linalg.norm(omega0 - game.fixed_point))
        cls = {"simultaneous": SimCM, "alternating": AltCM}[mode]
        opt = cls(alpha=A.ravel(), beta=B.ravel())
        out = simulate_batch(game, opt, omega0, tol, max_evals)
        shape = A.shape
        result.steps = out.steps.reshape(shape)
        result.grad_evals = out.grad_evals.reshape(shape)
        result.status = out.status.reshape(shape)
        score = {"rho": rho, "steps": result.steps, "grad_evals": result.grad_evals}[objective]

    i, j, k = _argmin_with_ties(score, alpha_grid, mag_grid, arg_grid)
    result.best = {
        "alpha": float(alpha_grid[i]),
        "beta_mag": float(mag_grid[j]),
        "beta_arg": float(arg_grid[k]),
        "rho": float(rho[i, j, k]),
        "index": (i, j, k),
        "score": float(score[i, j, k]),
    }
    return result


def alternating_operator(J, alpha, beta, split: int) -> np.ndarray:
    """Matrix of one alternating complex-momentum step on ``g(w) = J w``.

    Acts on ``[Re mu, Im mu, w]`` like ``build_R``. There is no per-eigenvalue
    reduction for alternating updates, so the operator is assembled by
    applying the (linear) step to each basis state. ``alpha``/``beta`` may be
    arrays, giving a stack of operators of shape ``batch + (3d, 3d)``.
    """
    from .games import quadratic_game
    from .optimizers import CMConfig, CMState, step_alt_cm

    J = np.asarray(as_square(J), dtype=float)
    d = J.shape[0]
    game = quadratic_game(J, split=split)
    alpha, beta = np.broadcast_arrays(np.asarray(alpha, dtype=complex), np.asarray(beta, dtype=complex))
    batch = alpha.shape
    cfg = CMConfig.__new__(CMConfig)  # skip the |beta| >= 1 warning for grids
    cfg.alpha, cfg.beta = alpha, beta
    cols = []
    for k in range(3 * d):
        z = np.zeros(3 * d)
        z[k] = 1.0
        state = CMState(
            np.broadcast_to(z[2 * d :], batch + (d,)).copy(),
            np.broadcast_to(z[:d] + 1j * z[d : 2 * d], batch + (d,)).copy(),
        )
        out = step_alt_cm(state, cfg, game)
        cols.append(np.concatenate([out.mu.real, out.mu.imag, out.omega], axis=-1))
    return np.stack(cols, axis=-1)


def alternating_rho(J, alpha, beta, split: int) -> np.ndarray:
    """Spectral radius of ``alternating_operator`` (vectorised over alpha/beta)."""
    M = alternating_operator(J, alpha, beta, split)
    return np.abs(np.linalg.eigvals(M)).max(axis=-1)
