"""Steady-state labels on synthetic compressor episodes."""

# %%
import numpy as np

from steadyrc.dataset import Archetype, make_archetypes, synthesize_corpus, synthesize_episode

# A clean archetype: exponential approach to the final capacity, no noise.
clean = Archetype("clean", cap_final=800.0, amplitude=0.3, tau=10.0, noise=0.0, shell_noise=0.0,
                  p_overshoot=0.0, p_noise=0.0, duration=(270.0, 270.0))
ep = synthesize_episode(clean, seed=0)
print(f"{ep.n_e} samples, cap_f = {ep.cap_f:.2f}")
print(f"label switches at sample {ep.t_d} = {ep.t_d * ep.dt / 60:.2f} min")
print(f"band entry predicted by 0.3 exp(-t/10) = 0.02: {10 * np.log(15):.2f} min")

# %%
# cap_f is the mean of the last 45 minutes; the band is +/- 2% around it and
# the pressure setpoint must also be reached. Only the last entry counts.
arch = make_archetypes(24, seed=0)
ep = synthesize_episode(arch[3], seed=7)
inside = (np.abs(ep.cap / ep.cap_f - 1) <= 0.02) & (ep.setpoint == 1)
entries = np.flatnonzero(np.diff(inside.astype(int)) == 1) + 1
print("band entries at samples", entries.tolist(), "-> t_d =", ep.t_d)
print("setpoint reached from sample", int(np.argmax(ep.setpoint)))

# %%
# A corpus of 300 episodes round-robin over 24 archetypes.
corpus = synthesize_corpus(300, seed=0)
td_min = np.array([e.t_d * e.dt / 60 for e in corpus])
length = np.array([e.n_e * e.dt / 60 for e in corpus])
print(f"episodes: {len(corpus)}, archetypes: {len({e.model_tag for e in corpus})}")
print(f"entrance time: mean {td_min.mean():.1f} min, std {td_min.std():.1f} min")
print(f"episode length: {length.min():.0f} to {length.max():.0f} min")
