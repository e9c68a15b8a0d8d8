"""Maxima of the per-direction quadratic forms on the trace hyperplane.

For each normal direction r the proof bounds a quadratic form in the
diagonal entries h^r_11..h^r_nn subject to their sum being fixed.  The KKT
solver and the closed forms should agree, and the r >= 3 maximum is the
larger one, which is what sets the improved constant.
"""

from chenlag.qp_hyperplane import build_fr, closed_form_max, maximize_on_hyperplane

k = 1.0
print(" n   f1 max (KKT)  f1 closed    fr max (KKT)  fr closed   verdicts")
for n in range(3, 9):
    s1 = maximize_on_hyperplane(build_fr(n, 1), k)
    sr = maximize_on_hyperplane(build_fr(n, 3), k)
    print(f"{n:2d}   {s1.value:.10f}  {closed_form_max(n, 1, k)[0]:.10f}  "
          f"{sr.value:.10f}  {closed_form_max(n, 3, k)[0]:.10f}  {s1.verdict.value}/{sr.verdict.value}")

# the r >= 3 maximizer has proportions 3 : 3 : 12 (at r) : 4 elsewhere
sol = maximize_on_hyperplane(build_fr(5, 4), 4 * 5 + 6)
print("argmax for n=5, r=4, k=26:", sol.argmax.round(10))
