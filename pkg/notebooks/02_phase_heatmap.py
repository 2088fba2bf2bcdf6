# %% [markdown]
# # Steps to converge over the momentum phase and magnitude
#
# Fix alpha = 0.1 on the Dirac-GAN and sweep beta = |beta| exp(i arg beta).
# A coarse grid keeps this quick; the CLI default is 32 x 32.

# %%
import numpy as np

from complex_momentum import harness

cfg = harness.ExperimentConfig(
    "heatmap",
    game="dirac",
    alpha=0.1,
    grids={"beta_mag": np.linspace(0, 1, 12, endpoint=False).tolist(), "beta_arg": np.linspace(0, np.pi, 12).tolist()},
)
res = harness.cmd_phase_heatmap(cfg)

# %%
steps = np.array([r["steps"] for r in res.rows]).reshape(12, 12)
with np.printoptions(linewidth=160):
    print(np.where(np.isfinite(steps), steps, -1).astype(int))  # -1: no convergence

# %%
print(res.summary["best_cell"])
print(res.summary["best_rate"])

# %% [markdown]
# Alternating updates let negative momentum (arg beta = pi) converge.

# %%
cfg.options["mode"] = "alternating"
alt = harness.cmd_phase_heatmap(cfg)
print("convergent real-beta cells:", alt.summary["converged_real_beta_cells"])
