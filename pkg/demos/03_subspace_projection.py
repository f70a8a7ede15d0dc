"""Cluster the initial capacity window and feed the cluster as a constant one-hot input."""

# %%
import numpy as np

from steadyrc.clustering import assign_cluster, initial_window, kmeans_fit, one_hot
from steadyrc.dataset import synthesize_corpus
from steadyrc.experiment import RunConfig, corpus_from_config

corpus = corpus_from_config(RunConfig(), synthesize_corpus(300, seed=0))
windows = np.array([initial_window(ep.cap, 80) for ep in corpus.train])
centroids = kmeans_fit(windows, k=4, seed=0)
print("inertia by iteration:", np.round(centroids.inertia_history, 4).tolist())

# %%
# Clusters group episodes by the shape of their first 80 samples (about 13 min).
labels = np.array([assign_cluster(w, centroids) for w in windows])
for j in range(centroids.k):
    members = [ep for ep, c in zip(corpus.train, labels) if c == j]
    td = np.mean([ep.t_d for ep in members]) * 10 / 60
    print(f"cluster {j}: {len(members):3d} episodes, start {centroids.centers[j, 0]:.3f}, "
          f"mean entrance {td:.1f} min")

# %%
# Unseen episodes get a cluster from the same centroids; the one-hot code is
# appended to every input sample of the episode.
ep = corpus.test[0]
c = assign_cluster(initial_window(ep.cap, 80), centroids)
print(ep.id, "-> cluster", c, "input code", one_hot(c, centroids.k))
