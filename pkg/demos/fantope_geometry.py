#
# Geometry of the feasible sets: water-filling projection onto
#   {X : 0 <= X <= I, Tr(X) = k}   (convex hull of rank-k projectors)
# and the two spectral oracles (top-k projector, linear minimization).
#

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from subspaceopt import (
    fantope_lmo,
    fantope_project,
    pnk_project,
    projection_rank_at_most,
    sym_eig,
    symmetrize,
)

os.makedirs(os.path.join(os.path.dirname(__file__), "out"), exist_ok=True)
OUT = os.path.join(os.path.dirname(__file__), "out")

rng = np.random.default_rng(0)
n, k = 12, 3

# ---------------------------------------------------------------
# a random symmetric matrix and its projection onto the hull
# ---------------------------------------------------------------
X = symmetrize(rng.standard_normal((n, n)))
Xp, wf = fantope_project(X, k)

gamma = sym_eig(X).eigenvalues
print("input spectrum:   ", np.round(gamma, 3))
print("clipped spectrum: ", np.round(wf.clipped, 3))
print(f"threshold theta = {wf.theta:.6f}, projected rank = {wf.rank}, "
      f"trace = {np.trace(Xp):.12f}")

fig, ax = plt.subplots(figsize=(6, 3.2))
ax.plot(gamma, "o-", label="eigenvalues of X")
ax.plot(wf.clipped, "s-", label="water-filled clip")
ax.axhline(0.0, color="k", lw=0.5)
ax.axhline(1.0, color="k", lw=0.5, ls=":")
ax.set_xlabel("index (non-increasing)")
ax.set_title(f"spectral water-filling, k={k}, theta={wf.theta:.3f}")
ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(OUT, "waterfill_spectrum.png"), dpi=120)

# ---------------------------------------------------------------
# the rank test: the hull projection collapses to a rank-k projector
# exactly when the top-k eigenvalues clear the rest by at least 1 (after
# the threshold).  Sitting near a projector is NOT enough: the gap of
# P + noise is about 1, just short of the requirement.  Scaling the top
# block up (as a gradient step does along a solver run) restores it.
# ---------------------------------------------------------------
P = pnk_project(X, k)
noise = symmetrize(rng.standard_normal((n, n)))
for scale in (1.0, 2.0):
    shifted = scale * P.matrix + 0.05 * noise
    dec = sym_eig(shifted)
    rank_k = projection_rank_at_most(dec, k, k)
    shifted_p, shifted_wf = fantope_project(shifted, k)
    same = np.linalg.norm(shifted_p - pnk_project(shifted, k).matrix) < 1e-9
    print(f"\n{scale} * projector + 0.05 * noise "
          f"(top-vs-rest gap ~ {scale:.0f}):")
    print("  rank test (r=k):        ", rank_k)
    print("  projected rank:         ", shifted_wf.rank)
    print("  matches top-k projector:", same)

# ---------------------------------------------------------------
# linear minimization oracle: smallest-eigenvector projector
# ---------------------------------------------------------------
G = symmetrize(rng.standard_normal((n, n)))
V = fantope_lmo(G, k)
vals = sym_eig(G).eigenvalues
print("\nLMO value <V, G>      :", np.sum(V.matrix * G))
print("sum of k smallest eigs:", vals[-k:].sum())

print(f"\nfigures saved under {OUT}")
