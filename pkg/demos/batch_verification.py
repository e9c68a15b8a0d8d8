"""Random second fundamental forms against the improved inequality.

Samples Gaussian totally symmetric tensors, computes the invariant through
the multi-start Grassmannian minimizer and reports the margin distribution.
"""

import numpy as np

from chenlag.verifier import batch_verify

for n in (3, 4, 5):
    for c in (-4.0, 0.0, 4.0):
        s = batch_verify(n, c, count=2000, seed=1, keep_records=False)
        print(f"n={n} c={c:+.0f}: violations {s.violations}, worst improved margin {s.minMargin:.4g}, "
              f"worst classic margin {s.minClassicMargin:.4g}")

s = batch_verify(4, 0.0, count=2000, seed=1)
counts, edges = s.histogram
print("\nmargin histogram, n=4 c=0")
for cnt, lo, hi in zip(counts, edges[:-1], edges[1:]):
    print(f"[{lo:8.3f}, {hi:8.3f})  {'#' * int(np.ceil(60 * cnt / max(counts)))}")
