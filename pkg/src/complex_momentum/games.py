"""Differentiable games as joint-gradient vector fields.

Every game stacks the players' own-loss gradients so that both players
*descend* on the joint gradient; for a zero-sum ``min_x max_y f`` the second
block is ``-df/dy``. Gradient oracles accept a batch of joint parameters with
shape ``(..., d)`` so sweeps can simulate many cells at once.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import expit

from .errors import DimensionMismatch, JacobianUnavailable, UnknownPreset
from .numcore import MAX_DENSE_DIM, dense_spectrum

INTERP_DIAGONAL_RANGE = (0.25, 4.0)


@dataclass(frozen=True)
class JointParams:
    """Joint parameters with the first ``split`` entries owned by player A."""

    values: np.ndarray
    split: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if not 0 <= self.split <= values.shape[-1]:
            raise DimensionMismatch(f"split {self.split} outside [0, {values.shape[-1]}]")

    @property
    def player_a(self) -> np.ndarray:
        return self.values[..., : self.split]

    @property
    def player_b(self) -> np.ndarray:
        return self.values[..., self.split :]


@dataclass(frozen=True)
class GameSpec:
    dim: int
    split: int
    grad: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray] | None = None
    fixed_point: np.ndarray | None = None
    analytic_spectrum: np.ndarray | None = None
    matrix: np.ndarray | None = None  # J for quadratic games, grad(w) = J w
    name: str = "game"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0 <= self.split <= self.dim:
            raise DimensionMismatch(f"split {self.split} outside [0, {self.dim}]")
        if self.fixed_point is not None:
            fp = np.asarray(self.fixed_point, dtype=float)
            if fp.shape != (self.dim,):
                raise DimensionMismatch("fixed point has the wrong shape")
            object.__setattr__(self, "fixed_point", fp)

    def check(self, omega) -> np.ndarray:
        omega = np.asarray(omega, dtype=float)
        if omega.shape[-1:] != (self.dim,):
            raise DimensionMismatch(f"{self.name} expects {self.dim} parameters, got {omega.shape}")
        return omega


def finite_difference_jacobian(grad, omega, h: float = 1e-5) -> np.ndarray:
    """Central differences; column k is d grad / d omega_k."""
    omega = np.asarray(omega, dtype=float)
    d = omega.shape[0]
    J = np.empty((d, d))
    for k in range(d):
        e = np.zeros(d)
        e[k] = h
        J[:, k] = (grad(omega + e) - grad(omega - e)) / (2 * h)
    return J


def quadratic_game(J, split: int | None = None, name: str = "quadratic", **kwargs) -> GameSpec:
    """Game with linear joint gradient ``grad(w) = J @ w``."""
    J = np.array(J, dtype=float)
    if J.ndim != 2 or J.shape[0] != J.shape[1]:
        raise DimensionMismatch(f"J must be square, got {J.shape}")
    d = J.shape[0]
    split = d // 2 if split is None else split
    J.setflags(write=False)

    def grad(omega):
        return np.asarray(omega, dtype=float) @ J.T

    def jacobian(omega):
        return J.copy()

    return GameSpec(
        dim=d,
        split=split,
        grad=grad,
        jacobian=jacobian,
        fixed_point=np.zeros(d),
        matrix=J,
        name=name,
        **kwargs,
    )


def dirac_gan() -> GameSpec:
    """Dirac-GAN: ``min_x max_y -log(1 + exp(-x y)) - log 2``.

    The joint gradient is ``[y s, -x s]`` with ``s = sigmoid(-x y)``; at the
    origin its Jacobian is ``[[0, 1/2], [-1/2, 0]]``.
    """

    def grad(omega):
        omega = np.asarray(omega, dtype=float)
        x, y = omega[..., 0], omega[..., 1]
        s = expit(-x * y)
        return np.stack([y * s, -x * s], axis=-1)

    def jacobian(omega):
        x, y = np.asarray(omega, dtype=float)
        s = expit(-x * y)
        ds = s * (1 - s)
        return np.array(
            [
                [-y * y * ds, s - x * y * ds],
                [-s + x * y * ds, x * x * ds],
            ]
        )

    return GameSpec(
        dim=2,
        split=1,
        grad=grad,
        jacobian=jacobian,
        fixed_point=np.zeros(2),
        name="dirac",
    )


def dirac_loss(x, y):
    return -np.logaddexp(0.0, -x * y) - np.log(2.0)


def bilinear_game(A) -> GameSpec:
    """Zero-sum ``min_x max_y x^T A y`` with Jacobian ``[[0, A], [-A^T, 0]]``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    da, db = A.shape
    J = np.block([[np.zeros((da, da)), A], [-A.T, np.zeros((db, db))]])
    sv = np.linalg.svd(A, compute_uv=False)
    spectrum = np.concatenate([1j * sv, -1j * sv, np.zeros(abs(da - db), dtype=complex)])
    return quadratic_game(J, split=da, name="bilinear", analytic_spectrum=spectrum)


def _diag(v, n: int | None = None) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim == 2:
        off = v - np.diag(np.diag(v))
        if v.shape[0] != v.shape[1] or np.any(off != 0):
            raise DimensionMismatch("expected a diagonal matrix")
        v = np.diag(v)
    if v.ndim == 0 and n is not None:
        v = np.full(n, float(v))
    if n is not None and v.shape != (n,):
        raise DimensionMismatch(f"expected {n} diagonal entries, got {v.shape}")
    return v


def interpolated_game(A, B1, B2, gamma) -> GameSpec:
    """Game mixing a bilinear coupling with per-player quadratic bowls.

    ``min_x max_y x^T (gA) y + 1/2 x^T ((I-g) B1) x - 1/2 y^T ((I-g) B2) y``
    with all matrices diagonal. Each coordinate pair j gives a 2x2 Jacobian
    block ``[[(1-g_j) b1_j, g_j a_j], [-g_j a_j, (1-g_j) b2_j]]``; with
    ``A = B1 = B2`` its eigenvalues are ``a_j ((1 - g_j) +- i g_j)``, so
    ``g = 0`` is pure minimisation and ``g = 1`` is purely adversarial.
    """
    a = _diag(A)
    n = a.shape[0]
    b1, b2, g = _diag(B1, n), _diag(B2, n), _diag(gamma, n)
    if np.any((g < 0) | (g > 1)):
        raise ValueError("gamma entries must lie in [0, 1]")
    p, s, c = (1 - g) * b1, (1 - g) * b2, g * a
    J = np.block([[np.diag(p), np.diag(c)], [np.diag(-c), np.diag(s)]])
    # eigenvalues of [[p, c], [-c, s]]
    mid = (p + s) / 2
    root = np.sqrt(((p - s) / 2).astype(complex) ** 2 - c**2)
    spectrum = np.concatenate([mid + root, mid - root])
    return quadratic_game(
        J,
        split=n,
        name="interp",
        analytic_spectrum=spectrum,
        meta={"a": a, "b1": b1, "b2": b2, "gamma": g},
    )


def sample_gamma(n: int, gamma_max: float, seed: int) -> np.ndarray:
    """Per-coordinate adversarialness, gamma_j ~ U[0, gamma_max].

    The largest draw is pinned to ``gamma_max`` so the requested maximum
    adversarialness is actually present in the game.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    g = rng.uniform(0.0, gamma_max, size=n)
    if n:
        g[np.argmax(g)] = gamma_max
    return g


def interp_sweep_game(n: int, gamma_max: float, seed: int = 0) -> GameSpec:
    a = np.linspace(*INTERP_DIAGONAL_RANGE, n)
    game = interpolated_game(a, a, a, sample_gamma(n, gamma_max, seed))
    game.meta.update(n=n, gamma_max=gamma_max, seed=seed)
    return game


def game_spectrum(game: GameSpec, at=None) -> np.ndarray:
    """Spectrum of the joint-gradient Jacobian at ``at`` (default: fixed point)."""
    if game.analytic_spectrum is not None:
        return np.asarray(game.analytic_spectrum, dtype=complex)
    if isinstance(at, JointParams):
        at = at.values
    if at is None:
        at = game.fixed_point if game.fixed_point is not None else np.zeros(game.dim)
    at = game.check(at)
    if game.jacobian is not None:
        return dense_spectrum(game.jacobian(at))
    if game.dim <= MAX_DENSE_DIM:
        return dense_spectrum(finite_difference_jacobian(game.grad, at))
    raise JacobianUnavailable(f"{game.name}: no Jacobian and d={game.dim} > {MAX_DENSE_DIM}")


def make_game(preset: str) -> GameSpec:
    """Build a game from ``dirac``, ``bilinear:<n>`` or ``interp:<n>:<gamma_max>:<seed>``."""
    parts = preset.strip().split(":")
    try:
        if parts[0] == "dirac" and len(parts) == 1:
            return dirac_gan()
        if parts[0] == "bilinear" and len(parts) <= 2:
            n = int(parts[1]) if len(parts) == 2 else 1
            game = bilinear_game(np.eye(n))
            return game
        if parts[0] == "interp" and len(parts) == 4:
            return interp_sweep_game(int(parts[1]), float(parts[2]), int(parts[3]))
    except ValueError as exc:
        raise UnknownPreset(f"bad game preset {preset!r}: {exc}") from exc
    raise UnknownPreset(f"unknown game preset {preset!r}")
