# %% [markdown]
# # Adam with a complex first-moment coefficient
#
# Only beta1 becomes complex; the second moment stays real.

# %%
import numpy as np

from complex_momentum import ComplexAdam, dirac_gan, run

game = dirac_gan()
for b1 in (0.8, 0.8 * np.exp(1j * np.pi / 8)):
    rep = run(game, ComplexAdam(1e-3, b1), [1.0, 1.0], max_steps=30000, tol=1e-2)
    print(f"beta1={b1!s:28s} status={rep.status:9s} distance={rep.distances[-1]:.4f}")
