"""Adversarial search, minimality probe and the proof-step audit.

The search pushes delta - improvedRHS upward by finite-difference ascent; it
should stall at or below zero.  The probe looks for classic-bound equality
with nonzero mean curvature, which should not exist.  The audit rechecks the
adapted-frame identity and the majorization step on random tensors.
"""

from chenlag.verifier import SearchConfig, adversarial_search, audit_batch, minimality_probe

res = adversarial_search(3, 0.0, SearchConfig(restarts=50, steps=20, seed=1))
print(f"worst improved margin after ascent: {res.margin:.3e}")
print("attained at", dict(res.h.entries))

probe = minimality_probe(3, 4.0, SearchConfig(restarts=50, steps=20, tol=1e-6))
print(f"\nprobe: best classic margin {probe.classicMargin:.3e} at |H|^2 = {probe.meanCurvNormSq:.1e}, "
      f"counterexample found: {probe.found}")

for n in (3, 4, 5):
    out = audit_batch(n, 1.0, 1000, seed=2)
    print(f"\naudit n={n}: worst {out['worst']}, failures {out['failures']}")
