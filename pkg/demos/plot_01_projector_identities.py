"""
Projectors on a pair and their partial transposes
=================================================

P, Q, R and S span an algebra that is closed under the partial transpose.
The relations below are checked entrywise against a dense transpose.
"""

import numpy as np

from distillkit import partial_transpose, projector_set, verify_pt_relations

d = 3
ps = projector_set(d)
print("ranks  P Q R S:", [int(round(m.trace().real)) for m in (ps.P, ps.Q, ps.R, ps.S)])

# T(P) = (S - R)/d: eigenvalues -1/d on the antisymmetric space, +1/d on the symmetric one
print("spectrum of T(P):", np.round(np.unique(np.round(partial_transpose(ps.P).eigvalsh(), 12)), 6))

for d in range(2, 7):
    rep = verify_pt_relations(d)
    print(f"d={d}  worst deviation {max(rep.deviations.values()):.1e}  passed={rep.passed}")
