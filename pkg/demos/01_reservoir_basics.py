"""Leaky echo state reservoir: weights, spectral radius, states and fading memory."""

# %%
import numpy as np

from steadyrc.reservoir import ReservoirConfig, harvest_states, init_weights, spectral_radius

cfg = ReservoirConfig(n_r=200, n_i=3, alpha=0.1, rho_target=0.2, seed=0)
w = init_weights(cfg)
print("w_in", w.w_in.shape, "w_res", w.w_res.shape, "w_bias", w.w_bias.shape)
print("spectral radius after rescaling:", spectral_radius(w.w_res))
print("largest |eigenvalue|, dense solver:", np.abs(np.linalg.eigvals(w.w_res)).max())

# %%
# A step input: the slow reservoir (alpha = 0.1) takes tens of samples to follow it.
u = np.zeros((120, 3))
u[20:] = [1.0, 0.5, 0.8]
states = harvest_states(w, u, cfg.alpha)
norms = np.linalg.norm(states, axis=1)
for t in (0, 19, 21, 30, 50, 80, 119):
    print(f"t={t:3d}  ||x|| = {norms[t]:.4f}")

# %%
# The leak rate sets the time constant: compare how fast the state settles.
for alpha in (0.05, 0.1, 0.3, 1.0):
    s = harvest_states(w, u, alpha)
    final = s[-1]
    settle = np.argmax(np.linalg.norm(s - final, axis=1) < 0.01 * np.linalg.norm(final))
    print(f"alpha={alpha:<5} settles within 1% after {settle - 20} samples")

# %%
# Fading memory: with no input and no bias, any initial state dies out.
free = init_weights(ReservoirConfig(n_r=200, n_i=1, alpha=1.0, rho_target=0.2, v_bias=0.0, seed=1))
x = np.random.default_rng(0).uniform(-1, 1, 200)
for step in range(1, 31):
    x = np.tanh(free.w_res @ x)
    if step % 5 == 0:
        print(f"step {step:2d}: ||x|| = {np.linalg.norm(x):.2e}")
