"""Chen invariant of a single explicit second fundamental form.

The tensor with one free entry h(1,1,2) = 1 in dimension 3 is the smallest
non-trivial example: the scalar curvature is -1, the most negative plane is
span(e1, e2) with curvature -1, so the invariant vanishes while both bounds
stay positive.
"""

from chenlag.curvature import chen_delta, delta_from_adapted_frame, adapted_frame
from chenlag.tensor_core import from_components, mean_curvature
from chenlag.verifier import verify_point

h = from_components(3, [((1, 1, 2), 1.0)])
summary = chen_delta(h, c=0.0)
print(f"tau = {summary.tau:.12g}")
print(f"min K = {summary.minK:.12g} on plane u={summary.argmin.u.round(6)}, v={summary.argmin.v.round(6)}")
print(f"delta = {summary.delta:.3g}")
print(f"|H|^2 = {mean_curvature(h).normSq:.12g}")

# the same number from the frame adapted to the minimizing plane
Q = adapted_frame(summary.argmin)
print(f"delta in adapted frame = {delta_from_adapted_frame(h, 0.0, Q, delta=summary.delta):.3g}")

rep = verify_point(h, 0.0)
print(f"improved bound {rep.improvedRHS:.12g} (margin {rep.improvedMargin:.3g})")
print(f"classic bound  {rep.classicRHS:.12g} (margin {rep.classicMargin:.3g})")
