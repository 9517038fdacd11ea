"""
Anatomy of the piecewise-equidistant layer mesh.

The mesh on [-1, 1] is built from a transition width sigma: decades
(0, 10^-K], (10^-K, 10^-K+1], ..., (10^-1, 1] each get an equidistant
block of intervals, and the whole thing is mirrored about 0.  K grows
like -log10(sigma), so the closer the layer gets to the turning point,
the more geometric levels the mesh spends there.
"""

import numpy as np

from cuspfem import MeshParams, build_mesh, compute_big_k, compute_sigma, validate_mesh

for eps in (1e-2, 1e-6, 1e-10):
    params = MeshParams(eps=eps, n_half=64, order=2, lam=0.25)
    sigma = compute_sigma(params)
    print(f"eps = {eps:8.0e}: sigma = {sigma.value:.4e} ({sigma.branch}-branch), "
          f"K = {compute_big_k(sigma.value)}")

# Build one mesh and look at its structure near the origin.
params = MeshParams(eps=1e-10, n_half=64, order=2, lam=0.25)
mesh = build_mesh(params)
print(f"\nN = {params.n_half} -> {mesh.n_intervals} intervals, K = {mesh.big_k}")
print("first positive nodes:", np.array2string(mesh.nodes[64:70], precision=3))
print("largest element:", mesh.lengths.max(), "<= (K+1)/N =", (mesh.big_k + 1) / params.n_half)

# Element sizes shrink by roughly a factor 10 per decade toward x = 0;
# within one decade they are constant.
h_right = mesh.lengths[params.n_half:]
vals, counts = np.unique(np.round(h_right, 12), return_counts=True)
print(f"{vals.size} distinct element lengths on (0, 1]:")
for h, c in zip(vals, counts):
    print(f"  h = {h:.6e}  x{c}")

diag = validate_mesh(mesh)
print("\nvalidation:", "ok" if diag.ok else diag.violations)

# The same construction refuses to build when N cannot cover the decades.
try:
    build_mesh(MeshParams(eps=1e-40, n_half=4, order=8, lam=0.005))
except Exception as exc:
    print("expected failure for tiny N:", exc)
