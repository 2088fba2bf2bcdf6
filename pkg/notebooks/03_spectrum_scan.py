# %% [markdown]
# # Where the augmented dynamics contract
#
# For eigenvalues +-i every real momentum fails, while each non-real phase
# has some (alpha, |beta|) that converges.

# %%
import numpy as np

from complex_momentum import harness
from complex_momentum.spectral import predicted_rho

args = [0.0, np.pi / 4, np.pi / 2, 3 * np.pi / 4, np.pi]
res = harness.cmd_spectrum_scan(harness.ExperimentConfig("spectrum", game="bilinear:1", grids={"beta_arg": args}))
for arg, info in res.summary["per_arg"].items():
    print(f"arg={float(arg):.4f} converges somewhere: {info['any_converged']}  best rho {info['best_rho']:.4f}")

# %% [markdown]
# The same map, vectorised: rho over (alpha, |beta|) at arg beta = pi/2.

# %%
A, M = np.meshgrid(np.linspace(0.01, 1, 40), np.linspace(0, 0.99, 40), indexing="ij")
rho = predicted_rho([1j, -1j], A, M * 1j)
i, j = np.unravel_index(rho.argmin(), rho.shape)
print("best alpha", A[i, j], "|beta|", M[i, j], "rho", rho[i, j])
