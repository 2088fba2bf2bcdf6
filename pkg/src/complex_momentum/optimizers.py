"""First-order update rules for games behind one stepping interface.

Each rule is a pure function ``step_*(state, cfg, game) -> new_state``. The
states are small dataclasses of numpy arrays; the last axis is the joint
parameter dimension and any leading axes are a batch of independent runs.
Configuration scalars may be arrays of the batch shape, which is how the
grid sweeps simulate every cell at once.

``Optimizer`` subclasses bundle a config with ``init``/``step`` so the run
harness can drive any method the same way.
"""
from __future__ import annotations

import copy
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NonfiniteGradient, NonfiniteIterate
from .games import GameSpec
from .numcore import ComplexScalar

DIVERGENCE_SENTINEL = 1e8


def _coef(x) -> np.ndarray:
    """Scalar or batch-shaped coefficient, broadcastable against (..., d)."""
    if isinstance(x, ComplexScalar):
        x = complex(x)
    return np.asarray(x)[..., None]


def _grad(game: GameSpec, omega: np.ndarray) -> np.ndarray:
    if omega.shape[-1] != game.dim:
        raise DimensionMismatch(f"state has {omega.shape[-1]} parameters, {game.name} has {game.dim}")
    return game.grad(omega)


def _as_complex(x):
    if isinstance(x, ComplexScalar):
        return complex(x)
    x = np.asarray(x)
    return complex(x) if x.ndim == 0 else x.astype(complex)


# --------------------------------------------------------------------------
# configs and states


@dataclass
class CMConfig:
    """Step size alpha (usually real) and complex momentum beta."""

    alpha: complex = 0.1
    beta: complex = 0.0

    def __post_init__(self):
        self.alpha = _as_complex(self.alpha)
        self.beta = _as_complex(self.beta)
        if np.any(np.abs(self.beta) >= 1):
            warnings.warn(f"|beta| >= 1 ({np.max(np.abs(self.beta)):.3g}); momentum will not decay", stacklevel=3)

    @classmethod
    def polar(cls, alpha, magnitude, phase) -> CMConfig:
        return cls(alpha=alpha, beta=np.asarray(magnitude) * np.exp(1j * np.asarray(phase)))


@dataclass
class CMState:
    omega: np.ndarray
    mu: np.ndarray
    steps: int = 0
    grad_evals: int = 0


@dataclass
class SplitCMState:
    """Complex momentum with the buffer stored as two real arrays."""

    omega: np.ndarray
    mu_re: np.ndarray
    mu_im: np.ndarray
    steps: int = 0
    grad_evals: int = 0


@dataclass
class RecurrentConfig:
    betas: np.ndarray  # (K, K); betas[l, k] links buffer l into buffer k
    alphas: np.ndarray  # (K,)
    grad_mask: np.ndarray | None = None  # (K,); default feeds every buffer

    def __post_init__(self):
        self.betas = np.atleast_2d(np.asarray(self.betas, dtype=float))
        K = self.betas.shape[0]
        if self.betas.shape != (K, K):
            raise DimensionMismatch("betas must be K x K")
        self.alphas = np.atleast_1d(np.asarray(self.alphas, dtype=float))
        mask = np.ones(K) if self.grad_mask is None else self.grad_mask
        self.grad_mask = np.atleast_1d(np.asarray(mask, dtype=float))
        if self.alphas.shape != (K,) or self.grad_mask.shape != (K,):
            raise DimensionMismatch("alphas and grad_mask must have length K")

    @property
    def K(self) -> int:
        return self.betas.shape[0]

    @classmethod
    def from_complex(cls, alpha: float, beta) -> RecurrentConfig:
        """Two buffers holding Re(mu) and Im(mu); the gradient enters only Re(mu)."""
        beta = complex(beta)
        return cls(
            betas=[[beta.real, beta.imag], [-beta.imag, beta.real]],
            alphas=[alpha, 0.0],
            grad_mask=[1.0, 0.0],
        )


@dataclass
class BuffersState:
    omega: np.ndarray
    mus: np.ndarray  # (..., K, d)
    steps: int = 0
    grad_evals: int = 0


@dataclass
class EGOGConfig:
    alpha: float = 0.1
    alpha_prime: float = 0.1

    def __post_init__(self):
        if np.any(np.asarray(self.alpha) <= 0) or np.any(np.asarray(self.alpha_prime) < 0):
            raise ValueError("need alpha > 0 and alpha_prime >= 0")


@dataclass
class GradState:
    """Plain parameters plus the last gradient (OG); used by EG and OG."""

    omega: np.ndarray
    prev_grad: np.ndarray
    steps: int = 0
    grad_evals: int = 0


@dataclass
class ComplexAdamConfig:
    alpha: float = 1e-3
    beta1: complex = 0.8 * np.exp(1j * np.pi / 8)
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        self.beta1 = _as_complex(self.beta1)
        if not 0 <= self.beta2 < 1:
            raise ValueError("beta2 must lie in [0, 1)")
        if self.alpha <= 0 or self.epsilon <= 0:
            raise ValueError("alpha and epsilon must be positive")


@dataclass
class ComplexAdamState:
    omega: np.ndarray
    mu: np.ndarray
    v: np.ndarray
    t: int = 0
    grad_evals: int = 0

    @property
    def steps(self) -> int:
        return self.t


# --------------------------------------------------------------------------
# update rules


def step_sim_cm(state: CMState, cfg: CMConfig, game: GameSpec) -> CMState:
    """mu <- beta mu - g(omega);  omega <- omega + Re(alpha mu)."""
    g = _grad(game, state.omega)
    mu = _coef(cfg.beta) * state.mu - g
    omega = state.omega + np.real(_coef(cfg.alpha) * mu)
    return CMState(omega, mu, state.steps + 1, state.grad_evals + 1)


def step_alt_cm(state: CMState, cfg: CMConfig, game: GameSpec) -> CMState:
    """Player A moves first; player B's gradient sees A's new parameters."""
    s = game.split
    alpha, beta = _coef(cfg.alpha), _coef(cfg.beta)
    omega, mu = state.omega, state.mu

    g = _grad(game, omega)
    mu_a = beta * mu[..., :s] - g[..., :s]
    theta_a = omega[..., :s] + np.real(alpha * mu_a)

    mid = np.concatenate([theta_a, omega[..., s:]], axis=-1)
    g = _grad(game, mid)
    mu_b = beta * mu[..., s:] - g[..., s:]
    theta_b = omega[..., s:] + np.real(alpha * mu_b)

    return CMState(
        np.concatenate([theta_a, theta_b], axis=-1),
        np.concatenate([mu_a, mu_b], axis=-1),
        state.steps + 1,
        state.grad_evals + 2,
    )


def step_sim_cm_real(state: SplitCMState, cfg: CMConfig, game: GameSpec) -> SplitCMState:
    """Simultaneous complex momentum using only real arithmetic."""
    alpha, beta = np.asarray(cfg.alpha), np.asarray(cfg.beta)
    a, b = _coef(beta.real), _coef(beta.imag)
    c, d = _coef(alpha.real), _coef(alpha.imag)
    ab_re = c * a - d * b
    ab_im = c * b + d * a

    g = _grad(game, state.omega)
    mu_re = a * state.mu_re - b * state.mu_im - g
    mu_im = b * state.mu_re + a * state.mu_im
    omega = state.omega - c * g + ab_re * state.mu_re - ab_im * state.mu_im
    return SplitCMState(omega, mu_re, mu_im, state.steps + 1, state.grad_evals + 1)


def step_recurrent(state: BuffersState, cfg: RecurrentConfig, game: GameSpec) -> BuffersState:
    """mu_k <- sum_l betas[l, k] mu_l - mask_k g;  omega <- omega + sum_k alpha_k mu_k."""
    if state.mus.shape[-2] != cfg.K:
        raise DimensionMismatch(f"state has {state.mus.shape[-2]} buffers, config has {cfg.K}")
    g = _grad(game, state.omega)
    mus = np.einsum("lk,...ld->...kd", cfg.betas, state.mus) - cfg.grad_mask[:, None] * g[..., None, :]
    omega = state.omega + np.einsum("k,...kd->...d", cfg.alphas, mus)
    return BuffersState(omega, mus, state.steps + 1, state.grad_evals + 1)


def step_aggregated(state: BuffersState, betas, alphas, game: GameSpec) -> BuffersState:
    """Independent buffers with their own decay; parameters move by their weighted sum."""
    betas = np.atleast_1d(np.asarray(betas, dtype=float))
    alphas = np.atleast_1d(np.asarray(alphas, dtype=float))
    if state.mus.shape[-2] != betas.shape[0] or alphas.shape != betas.shape:
        raise DimensionMismatch("buffer count does not match betas/alphas")
    g = _grad(game, state.omega)
    mus = np.empty_like(state.mus)
    omega = state.omega.copy()
    for k in range(betas.shape[0]):
        mus[..., k, :] = betas[k] * state.mus[..., k, :] - g
        omega = omega + alphas[k] * mus[..., k, :]
    return BuffersState(omega, mus, state.steps + 1, state.grad_evals + 1)


def step_eg(state: GradState, cfg: EGOGConfig, game: GameSpec) -> GradState:
    """Extrapolate by alpha_prime, then step by alpha with the midpoint gradient."""
    g = _grad(game, state.omega)
    mid = state.omega - _coef(cfg.alpha_prime) * g
    g_mid = _grad(game, mid)
    omega = state.omega - _coef(cfg.alpha) * g_mid
    return GradState(omega, g, state.steps + 1, state.grad_evals + 2)


def step_og(state: GradState, cfg: EGOGConfig, game: GameSpec) -> GradState:
    """omega <- omega - 2 alpha g + alpha_prime g_prev (g_prev = 0 on the first step)."""
    g = _grad(game, state.omega)
    omega = state.omega - 2 * _coef(cfg.alpha) * g + _coef(cfg.alpha_prime) * state.prev_grad
    return GradState(omega, g, state.steps + 1, state.grad_evals + 1)


def step_complex_adam(state: ComplexAdamState, cfg: ComplexAdamConfig, game: GameSpec) -> ComplexAdamState:
    """Adam with complex beta1 and no bias correction on the momentum buffer.

    The second moment is bias-corrected with ``1 - beta2**t`` for the
    1-based step count ``t``; the parameters move by the real part of the
    freshly updated buffer.
    """
    g = _grad(game, state.omega)
    if not np.all(np.isfinite(g)):
        raise NonfiniteGradient(f"non-finite gradient at step {state.t}")
    t = state.t + 1
    mu = cfg.beta1 * state.mu - g
    v = cfg.beta2 * state.v + (1 - cfg.beta2) * g * g
    v_hat = v / (1 - cfg.beta2**t)
    omega = state.omega + cfg.alpha * np.real(mu) / (np.sqrt(v_hat) + cfg.epsilon)
    return ComplexAdamState(omega, mu, v, t, state.grad_evals + 1)


# --------------------------------------------------------------------------
# uniform interface


def _omega0(omega0) -> np.ndarray:
    return np.array(omega0, dtype=float)


class Optimizer:
    """A configured update rule: ``init(omega0)`` then repeated ``step``."""

    name = "optimizer"
    evals_per_step = 1

    def init(self, omega0):
        raise NotImplementedError

    def step(self, state, game: GameSpec):
        raise NotImplementedError

    def describe(self) -> dict:
        return {"name": self.name}


class SimCM(Optimizer):
    name = "simcm"

    def __init__(self, alpha=0.1, beta=0.0):
        self.cfg = CMConfig(alpha, beta)

    def init(self, omega0):
        omega = _omega0(omega0)
        shape = np.broadcast_shapes(omega.shape, np.shape(self.cfg.beta) + omega.shape[-1:])
        return CMState(np.broadcast_to(omega, shape).copy(), np.zeros(shape, dtype=complex))

    def step(self, state, game):
        return step_sim_cm(state, self.cfg, game)

    def describe(self):
        return {"name": self.name, "alpha": _jsonable(self.cfg.alpha), "beta": _jsonable(self.cfg.beta)}


class AltCM(SimCM):
    name = "altcm"
    evals_per_step = 2

    def step(self, state, game):
        return step_alt_cm(state, self.cfg, game)


class SimCMReal(SimCM):
    name = "simcm_real"

    def init(self, omega0):
        s = super().init(omega0)
        return SplitCMState(s.omega, s.mu.real.copy(), s.mu.imag.copy())

    def step(self, state, game):
        return step_sim_cm_real(state, self.cfg, game)


class RecurrentMomentum(Optimizer):
    name = "recurrent"

    def __init__(self, cfg: RecurrentConfig):
        self.cfg = cfg

    def init(self, omega0):
        omega = _omega0(omega0)
        return BuffersState(omega, np.zeros(omega.shape[:-1] + (self.cfg.K, omega.shape[-1])))

    def step(self, state, game):
        return step_recurrent(state, self.cfg, game)

    def describe(self):
        return {
            "name": self.name,
            "betas": self.cfg.betas.tolist(),
            "alphas": self.cfg.alphas.tolist(),
            "grad_mask": self.cfg.grad_mask.tolist(),
        }


class AggregatedMomentum(Optimizer):
    name = "aggmo"

    def __init__(self, betas, alphas):
        self.betas = np.atleast_1d(np.asarray(betas, dtype=float))
        self.alphas = np.atleast_1d(np.asarray(alphas, dtype=float))

    def init(self, omega0):
        omega = _omega0(omega0)
        return BuffersState(omega, np.zeros(omega.shape[:-1] + (self.betas.size, omega.shape[-1])))

    def step(self, state, game):
        return step_aggregated(state, self.betas, self.alphas, game)

    def describe(self):
        return {"name": self.name, "betas": self.betas.tolist(), "alphas": self.alphas.tolist()}


class Extragradient(Optimizer):
    name = "eg"
    evals_per_step = 2

    def __init__(self, alpha=0.1, alpha_prime=0.1):
        self.cfg = EGOGConfig(alpha, alpha_prime)

    def init(self, omega0):
        omega = _omega0(omega0)
        shape = np.broadcast_shapes(omega.shape, np.shape(self.cfg.alpha_prime) + omega.shape[-1:])
        shape = np.broadcast_shapes(shape, np.shape(self.cfg.alpha) + omega.shape[-1:])
        return GradState(np.broadcast_to(omega, shape).copy(), np.zeros(shape))

    def step(self, state, game):
        return step_eg(state, self.cfg, game)

    def describe(self):
        return {"name": self.name, "alpha": _jsonable(self.cfg.alpha), "alpha_prime": _jsonable(self.cfg.alpha_prime)}


class OptimisticGradient(Extragradient):
    name = "og"
    evals_per_step = 1

    def step(self, state, game):
        return step_og(state, self.cfg, game)


class ComplexAdam(Optimizer):
    name = "cadam"

    def __init__(self, alpha=1e-3, beta1=0.8 * np.exp(1j * np.pi / 8), beta2=0.999, epsilon=1e-8):
        self.cfg = ComplexAdamConfig(alpha, beta1, beta2, epsilon)

    def init(self, omega0):
        omega = _omega0(omega0)
        return ComplexAdamState(omega, np.zeros(omega.shape, dtype=complex), np.zeros(omega.shape))

    def step(self, state, game):
        return step_complex_adam(state, self.cfg, game)

    def describe(self):
        c = self.cfg
        return {"name": self.name, "alpha": c.alpha, "beta1": _jsonable(c.beta1), "beta2": c.beta2, "epsilon": c.epsilon}


def _jsonable(x):
    x = np.asarray(x)
    if np.iscomplexobj(x):
        if x.ndim == 0:
            z = complex(x)
            return [z.real, z.imag] if z.imag else z.real
        return {"re": x.real.tolist(), "im": x.imag.tolist()}
    return x.tolist()


# --------------------------------------------------------------------------
# run harness


@dataclass
class ConvergenceReport:
    """Outcome of a single run.

    ``distances[j]`` is the distance to the fixed point after ``j`` steps (or
    the gradient norm when the game has no known fixed point) and
    ``grad_evals[j]`` the cumulative evaluation count at that point.
    ``steps`` is the first ``j`` with distance <= tol, ``math.inf`` otherwise.
    """

    distances: np.ndarray
    grad_evals: np.ndarray
    grad_norms: np.ndarray
    status: str  # converged | diverged | budget
    steps: float
    total_grad_evals: int
    rate: float
    iterates: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    @property
    def diverged(self) -> bool:
        return self.status == "diverged"

    @property
    def evals_to_converge(self) -> float:
        return float(self.grad_evals[int(self.steps)]) if self.converged else math.inf


def measured_rate(distances) -> float:
    """Per-step linear rate from the trailing half of a distance history.

    Least-squares slope of log-distance against iteration over the final
    50% of points, exponentiated. Returns nan when fewer than three usable
    points remain.
    """
    d = np.asarray(distances, dtype=float)
    n = d.size
    if n < 3:
        return math.nan
    j = np.arange(n)[n // 2 :]
    tail = d[n // 2 :]
    keep = np.isfinite(tail) & (tail > 0)
    if keep.sum() < 3:
        return math.nan
    slope = np.polyfit(j[keep], np.log(tail[keep]), 1)[0]
    return float(math.exp(slope))


def run(
    game: GameSpec,
    optimizer: Optimizer,
    omega0,
    max_steps: int = 10_000,
    tol: float = 1e-6,
    max_evals: int | None = None,
    record_iterates: bool = False,
    raise_on_divergence: bool = False,
) -> ConvergenceReport:
    """Iterate ``optimizer`` on ``game`` from ``omega0``.

    Stops at the first iterate within ``tol`` of the fixed point (gradient
    norm when there is none), when the step or evaluation budget runs out,
    or when the distance exceeds ``DIVERGENCE_SENTINEL`` or goes non-finite.
    """
    state = optimizer.init(omega0)
    fp = game.fixed_point

    def measure(omega):
        g = game.grad(omega)
        gn = float(np.linalg.norm(g))
        dist = float(np.linalg.norm(omega - fp)) if fp is not None else gn
        return dist, gn

    dist, gn = measure(state.omega)
    distances, norms, evals = [dist], [gn], [0]
    iterates = [state.omega.copy()] if record_iterates else None
    status = "budget"
    if dist <= tol:
        status = "converged"
    else:
        for _ in range(max_steps):
            if max_evals is not None and state.grad_evals + optimizer.evals_per_step > max_evals:
                break
            state = optimizer.step(state, game)
            dist, gn = measure(state.omega)
            distances.append(dist)
            norms.append(gn)
            evals.append(state.grad_evals)
            if record_iterates:
                iterates.append(state.omega.copy())
            if not math.isfinite(dist) or dist > DIVERGENCE_SENTINEL:
                status = "diverged"
                if raise_on_divergence:
                    raise NonfiniteIterate(f"distance {dist:.3g} after {state.steps} steps")
                break
            if dist <= tol:
                status = "converged"
                break

    distances = np.array(distances)
    return ConvergenceReport(
        distances=distances,
        grad_evals=np.array(evals),
        grad_norms=np.array(norms),
        status=status,
        steps=float(len(distances) - 1) if status == "converged" else math.inf,
        total_grad_evals=int(evals[-1]),
        rate=measured_rate(distances),
        iterates=np.array(iterates) if record_iterates else None,
        meta={"optimizer": optimizer.describe(), "game": game.name},
    )


# --------------------------------------------------------------------------
# batched simulation for sweeps


@dataclass
class BatchOutcome:
    """Per-cell results of ``simulate_batch``; ``steps``/``grad_evals`` are inf when not converged."""

    status: np.ndarray  # str per cell
    steps: np.ndarray
    grad_evals: np.ndarray
    final_distance: np.ndarray


def _take(obj, keep: np.ndarray, n: int):
    """Copy of a state or config with batch-shaped array fields sliced by ``keep``."""
    obj = copy.copy(obj)
    for name, value in list(vars(obj).items()):
        if isinstance(value, np.ndarray) and value.ndim >= 1 and value.shape[0] == n:
            setattr(obj, name, value[keep])
    return obj


def simulate_batch(
    game: GameSpec,
    optimizer: Optimizer,
    omega0,
    tol: float,
    max_evals: int,
    stop_at_first: bool = False,
) -> BatchOutcome:
    """Run a batch-configured optimizer until every cell has an outcome.

    ``optimizer``'s coefficients must be 1-D arrays of the batch size (only
    the ``cfg`` of SimCM/AltCM/EG/OG style optimizers is sliced). Finished
    cells are dropped from the working set. With ``stop_at_first`` the loop
    ends on the first step at which any cell converges; cells still running
    are reported as ``budget``.
    """
    if game.fixed_point is None:
        raise ValueError("batched simulation needs a game with a known fixed point")
    fp = game.fixed_point
    state = optimizer.init(omega0)
    n = state.omega.shape[0]
    status = np.full(n, "budget", dtype=object)
    steps = np.full(n, math.inf)
    evals = np.full(n, math.inf)
    final = np.linalg.norm(state.omega - fp, axis=-1)

    idx = np.arange(n)
    hit = final <= tol
    status[hit], steps[hit], evals[hit] = "converged", 0, 0
    cfg = optimizer.cfg
    max_steps = max_evals // optimizer.evals_per_step
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(max_steps):
            keep = (status[idx] == "budget")
            if not keep.all():
                size = idx.size
                idx = idx[keep]
                state, cfg = _take(state, keep, size), _take(cfg, keep, size)
            if idx.size == 0 or (stop_at_first and (status == "converged").any()):
                break
            state = optimizer.__class__.step(_with_cfg(optimizer, cfg), state, game)
            dist = np.linalg.norm(state.omega - fp, axis=-1)
            final[idx] = dist
            conv = dist <= tol
            div = ~conv & (~np.isfinite(dist) | (dist > DIVERGENCE_SENTINEL))
            status[idx[conv]] = "converged"
            steps[idx[conv]] = state.steps
            evals[idx[conv]] = state.grad_evals
            status[idx[div]] = "diverged"
    return BatchOutcome(status, steps, evals, final)


def _with_cfg(optimizer: Optimizer, cfg):
    if optimizer.cfg is cfg:
        return optimizer
    opt = copy.copy(optimizer)
    opt.cfg = cfg
    return opt
