# %% [markdown]
# # One setting for every imaginary eigenvalue
#
# With alpha = alpha' / c on eigenvalues +-ic the cubic no longer depends
# on c, so a single (alpha', beta) works across all eigenspaces.

# %%
from complex_momentum import harness
from complex_momentum.spectral import char_poly_proportional

res = harness.cmd_corollary_check()
for row in res.rows:
    print(f"{row['selection']:16s} c={row['c']:5.1f} rho={row['rho']:.10f}")
print("passed:", res.summary["passed"])

# %%
import numpy as np

print(abs(char_poly_proportional(0.75, 0.986 * np.exp(1j * (np.pi - np.pi / 16))).roots()))
