# %% [markdown]
# # From cooperative to adversarial games
#
# The interpolated game mixes per-player quadratic bowls with a bilinear
# coupling; gamma_max controls how adversarial the worst eigenspace is.
# Small grids here; `gm sweep` runs the full tuning grids.

# %%
import numpy as np

from complex_momentum import harness

cfg = harness.ExperimentConfig(
    "sweep",
    grids={
        "gamma_max": [0.0, 0.5, 1.0],
        "alpha": np.logspace(-2, 0.3, 8).tolist(),
        "momentum": np.linspace(0, 0.95, 8).tolist(),
        "extrapolation": np.logspace(-2, 0.3, 8).tolist(),
    },
    options={"n": 6},
    stop={"max_evals": 20000},
)
res = harness.cmd_coop_adversarial_sweep(cfg)

# %%
for row in res.rows:
    print(f"gamma_max={row['gamma_max']:.2f} {row['method']:8s} evals={row['grad_evals']}")
