"""Generate data/example_graph.scene: a 12-node weighted cycle with one
chord, nonuniform measure, and a single exactly mu-skew field."""

import numpy as np

import sys
import os

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from paralab.scene import Scene, write_scene

n = 12
rng = np.random.default_rng(424242)
# dyadic measure values keep mu_i * (B_ij / mu_i) exact in floating point
mu = np.array([1.0, 0.5, 2.0, 1.0, 0.25, 1.0, 0.5, 4.0, 1.0, 2.0, 0.5, 1.0])

B = np.zeros((n, n))
# weighted cycle edges, dyadic weights
cyc_w = [0.5, 1.0, 0.25, 0.75, 1.0, 0.5, 1.25, 0.5, 1.0, 0.75, 0.25, 1.0]
for i in range(n):
    j = (i + 1) % n
    B[i, j] = cyc_w[i]
    B[j, i] = -cyc_w[i]
# one chord
B[2, 7] = 0.5
B[7, 2] = -0.5

X = B / mu[:, None]
sc = Scene("graph", 0.5, mu, [X])
sc.validate(rtol=1e-12)

out = os.path.join(os.path.dirname(__file__), "..", "data", "example_graph.scene")
write_scene(sc, out)
print("wrote", out, "skew residual:", sc.skew_residuals())
