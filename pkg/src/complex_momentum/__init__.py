"""Complex momentum for learning in differentiable games."""
from .errors import (
    ComplexMomentumError,
    DegenerateCubic,
    DimensionMismatch,
    DimensionTooLarge,
    EmptyGrid,
    JacobianUnavailable,
    NonfiniteGradient,
    NonfiniteIterate,
    NonSquare,
    UnknownMethod,
    UnknownPreset,
)
from .games import (
    GameSpec,
    JointParams,
    bilinear_game,
    dirac_gan,
    interp_sweep_game,
    game_spectrum,
    interpolated_game,
    make_game,
    quadratic_game,
)
from .numcore import ComplexScalar, CubicPolynomial, cubic_roots, dense_spectrum, solve_cubic, spectral_radius
from .optimizers import (
    AggregatedMomentum,
    AltCM,
    CMConfig,
    ComplexAdam,
    ConvergenceReport,
    Extragradient,
    OptimisticGradient,
    RecurrentConfig,
    RecurrentMomentum,
    SimCM,
    SimCMReal,
    run,
    simulate_batch,
)
from .spectral import (
    alternating_rho,
    build_R,
    char_poly,
    convergence_rate,
    grid_search,
    predicted_rho,
)

__version__ = "0.1.0"
