# %% [markdown]
# # Complex momentum as two linked real buffers
#
# Storing Re(mu) and Im(mu) as separate buffers with a rotation-shaped
# coupling reproduces complex momentum exactly.

# %%
import numpy as np

from complex_momentum import RecurrentConfig, RecurrentMomentum, SimCM, bilinear_game

game = bilinear_game([[0.5]])
beta = 0.9 * np.exp(1j * np.pi / 8)
cfg = RecurrentConfig.from_complex(0.1, beta)
print(cfg.betas)

a, b = SimCM(0.1, beta), RecurrentMomentum(cfg)
sa, sb = a.init([1.0, 1.0]), b.init([1.0, 1.0])
for _ in range(200):
    sa, sb = a.step(sa, game), b.step(sb, game)
print("max difference after 200 steps:", np.abs(sa.omega - sb.omega).max())
