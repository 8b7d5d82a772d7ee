"""
Exact n-copy coefficients and the lower bound
=============================================

T_A of rho(eps)^{⊗n} expands over words in {P, Q}^{2n}.  The coefficients
are exact rationals; the lower bound B(d, n, eps) decides where the search
for a Schmidt-rank-2 witness cannot succeed.
"""

from fractions import Fraction

from distillkit import BoundParams, epsilon_threshold, mu_lambda, n_copy_bound
from distillkit.pqalgebra import check_coefficient_claims, n_copy_pt_coeffs

d, eps = 3, Fraction(1, 10)
ml = mu_lambda(d, eps)
print(f"mu = {ml.mu}, lambda = {ml.lam}")

coeffs = n_copy_pt_coeffs(d, eps, 2)
for x in ("0000", "0011", "0101", "1111"):
    print(f"alpha({x}) = {coeffs[x]}")

# alpha(0011) = mu * lambda is larger than eps * mu, but it is positive;
# only the negative coefficients need to be small
for n in range(1, 5):
    c = check_coefficient_claims(d, eps, n)
    print(f"n={n}  words over eps*mu^(n-1): {len(c.bound_violations):3d}  "
          f"negative ones: {len(c.negative_bound_violations)}")

for n in (1, 2, 3):
    e = epsilon_threshold(d, n)
    print(f"n={n}  eps* ~ {float(e):.7f}   B(eps*/2) = {float(n_copy_bound(BoundParams(d, n, e / 2))):.3e}")
print("6/71 =", 6 / 71)
