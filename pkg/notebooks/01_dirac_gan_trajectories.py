# %% [markdown]
# # Dirac-GAN trajectories
#
# The Dirac-GAN is the smallest adversarial game: one generator parameter x,
# one discriminator parameter y. Its Jacobian at the equilibrium is a pure
# rotation, so plain gradient descent-ascent spirals outwards.

# %%
import numpy as np

from complex_momentum import SimCM, dirac_gan, game_spectrum, run
from complex_momentum.harness import predict_rate

game = dirac_gan()
print("spectrum at the origin:", game_spectrum(game))

# %% [markdown]
# Three optimizers from (1, 1) with step size 0.1.

# %%
opts = {
    "gda": SimCM(0.1, 0.0),
    "real momentum 0.9": SimCM(0.1, 0.9),
    "complex 0.9 exp(i pi/8)": SimCM(0.1, 0.9 * np.exp(1j * np.pi / 8)),
}
for name, opt in opts.items():
    rep = run(game, opt, [1.0, 1.0], max_steps=3000, tol=1e-6)
    print(f"{name:26s} status={rep.status:9s} final distance={rep.distances[-1]:.3e}")

# %% [markdown]
# For the complex setting the linearised rate predicts the measured one.

# %%
opt = opts["complex 0.9 exp(i pi/8)"]
rep = run(game, opt, [1.0, 1.0], max_steps=5000, tol=1e-8)
print("measured", rep.rate, "predicted", predict_rate(game, opt))
