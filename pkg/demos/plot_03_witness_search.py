"""
Searching for a Schmidt-rank-2 witness
======================================

A negative value of <psi|T_A(rho)|psi> at Schmidt rank 2 certifies that rho
is 1-distillable.  The search alternates an exact eigenvector step with a
gradient step on the Stiefel manifold, over seeded random restarts.
"""

from fractions import Fraction

from distillkit import (RhoEpsilonParams, WernerParams, alpha_state, canonical_phi, epsilon_threshold,
                        evaluate_witness, find_witness, rho_epsilon, werner)

# the canonical phi gives (3 - alpha)/2 before normalization
for alpha in (0, 3, Fraction(25, 8), 5):
    v = evaluate_witness(alpha_state(3, alpha), canonical_phi(3), require_unit=False)
    print(f"alpha={str(alpha):>5}  <phi|T_A|phi> = {v:+.4f}")

for alpha in (4, 2):
    res = find_witness(werner(WernerParams(3, alpha)), restarts=20, seed=1)
    print(f"Werner alpha={alpha}: best {res.best_value:+.6f}  certificate: {res.certificate is not None}")

eps = epsilon_threshold(3, 1) / 2
res = find_witness(rho_epsilon(RhoEpsilonParams(3, eps)), restarts=20, seed=2)
print(f"rho(eps*/2): best {res.best_value:+.6f} over {res.restarts_used} restarts")
