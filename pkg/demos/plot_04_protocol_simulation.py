"""
Simulating the distillation loop
================================

Each round measures a fresh copy against the running state.  On the double-P
outcome alpha grows by 1 + eps/(d+1); any other outcome restarts from two
fresh copies.  After k consecutive successes alpha exceeds 3 and the
canonical witness turns negative.
"""

from fractions import Fraction

from distillkit.protocol import (ProtocolConfig, dense_iteration, expected_copies, expected_copies_exact,
                                 k_threshold, predicted_post_state, simulate_run, success_probability)

d, eps, alpha = 3, Fraction(1), Fraction(5, 2)
post, p_dense = dense_iteration(alpha, d, eps)
print(f"dense step vs closed form: {post.max_abs_diff(predicted_post_state(alpha, d, eps)):.1e}")
print(f"p(double P) closed form {success_probability(alpha, d, eps):.7f}, trace ratio {p_dense:.7f}")

for e in (Fraction(1), Fraction(1, 2), Fraction(1, 10)):
    print(f"eps={str(e):>4}  k={k_threshold(d, e):2d}  exact mean copies {float(expected_copies_exact(d, e)):.4g}")

stats = simulate_run(ProtocolConfig(d, eps, master_seed=7))
print(f"seed 7: {stats.rounds} rounds, {stats.copies_consumed} copies, "
      f"final alpha {stats.final_alpha}, witness {stats.final_witness_value:+.4f}")

mean, se = expected_copies(ProtocolConfig(d, eps, master_seed=1), 2000)
print(f"Monte Carlo mean copies {mean:.1f} +- {se:.1f}")
