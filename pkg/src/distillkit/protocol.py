"""Monte Carlo simulation of the measure-and-filter distillation loop.

Registers X1..X4 hold alpha R⊗R + S⊗S and X5..X8 a fresh copy of rho(eps).
Alice measures (X1, X5) and Bob (X2, X6) with {P, Q}; on the double-P
outcome the surviving registers hold the same family with
alpha -> alpha (1 + eps/(d+1)), otherwise everything is thrown away and the
loop restarts from two fresh copies.  The state is tracked by the exact
rational alpha alone; dense versions of the step exist only to validate it.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from ._rational import as_fraction, fraction_str
from .states import alpha_state, max_entangled, pair_product, projector_set
from .tensor import DenseOperator, filtered_reduction, partial_transpose, permute_registers, tensor
from .witness import canonical_phi, witness_form

CERTIFY_TOL = 1e-12


def _beta(d: int, eps: Fraction) -> Fraction:
    return (d + 1 + eps) / (d - 1)


def success_probability_exact(alpha, d: int, epsilon) -> Fraction:
    """Probability of the double-P outcome, as an exact rational.

    The trace of alpha R⊗R + S⊗S is alpha t_R^2 + t_S^2 with
    t_R = d(d-1)/2 and t_S = d(d+1)/2; the unnormalized post-measurement
    state has trace ((d+1)/(2d)) (alpha (1 + eps/(d+1)) t_R^2 + t_S^2).
    """
    alpha = Fraction(alpha)
    eps = Fraction(epsilon)
    t_r2 = Fraction(d * (d - 1), 2) ** 2
    t_s2 = Fraction(d * (d + 1), 2) ** 2
    post = Fraction(d + 1, 2 * d) * (alpha * (1 + eps / (d + 1)) * t_r2 + t_s2)
    return post / ((alpha * t_r2 + t_s2) * (_beta(d, eps) * t_r2 + t_s2))


def success_probability(alpha, d: int, epsilon) -> float:
    if alpha < 0 or epsilon < 0:
        raise ValueError("alpha and epsilon must be nonnegative")
    if isinstance(alpha, float) or isinstance(epsilon, float):
        t_r2 = (d * (d - 1) / 2) ** 2
        t_s2 = (d * (d + 1) / 2) ** 2
        beta = (d + 1 + epsilon) / (d - 1)
        post = (d + 1) / (2 * d) * (alpha * (1 + epsilon / (d + 1)) * t_r2 + t_s2)
        return post / ((alpha * t_r2 + t_s2) * (beta * t_r2 + t_s2))
    return float(success_probability_exact(alpha, d, epsilon))


def measurement_projector(d: int) -> DenseOperator:
    """P_{1,5} ⊗ P_{2,6}, stored on registers (1, 2, 5, 6)."""
    p15 = max_entangled(d, (1, 5)).projector()
    p26 = max_entangled(d, (2, 6)).projector()
    return permute_registers(tensor(p15, p26), (1, 2, 5, 6))


def measurement_traces(d: int) -> dict[str, float]:
    """tr((P_{1,5}⊗P_{2,6})(X_{1,2}⊗Y_{5,6})) for X, Y in {R, S}, computed densely."""
    ps = projector_set(d)
    meas = measurement_projector(d)
    out = {}
    for x_name, x in (("R", ps.R), ("S", ps.S)):
        for y_name, y in (("R", ps.R), ("S", ps.S)):
            xy = tensor(x, y.relabel({1: 5, 2: 6}))
            out[x_name + y_name] = complex(np.trace(meas.matrix @ xy.matrix)).real
    return out


def dense_iteration(alpha, d: int, epsilon) -> tuple[DenseOperator, float]:
    """One filtering step on dense operators.

    Returns the unnormalized state left on (X3, X4, X7, X8), relabelled
    (1, 2, 3, 4), and the success probability as a ratio of traces.
    """
    eps = as_fraction(epsilon, "epsilon")
    first = alpha_state(d, alpha)
    fresh = alpha_state(d, _beta(d, eps)).relabel({1: 5, 2: 6, 3: 7, 4: 8})
    post = filtered_reduction([first, fresh], measurement_projector(d))
    post = post.relabel({3: 1, 4: 2, 7: 3, 8: 4})
    p = post.trace().real / (first.trace().real * fresh.trace().real)
    return post, p


def predicted_post_state(alpha, d: int, epsilon) -> DenseOperator:
    """((d+1)/(2d)) (alpha (1 + eps/(d+1)) R⊗R + S⊗S)."""
    eps = as_fraction(epsilon, "epsilon")
    new_alpha = Fraction(alpha) * (1 + eps / (d + 1))
    return float(Fraction(d + 1, 2 * d)) * alpha_state(d, new_alpha)


def t_a_expansion(alpha, d: int) -> DenseOperator:
    """((a+1)/4) I⊗I - ((a-1)d/4)(I⊗P + P⊗I) + ((a+1)d^2/4) P⊗P on (1,2),(3,4)."""
    ps = projector_set(d)
    a = float(alpha)
    eye = ps.P + ps.Q
    return ((a + 1) / 4 * pair_product(eye, eye)
            - (a - 1) * d / 4 * (pair_product(eye, ps.P) + pair_product(ps.P, eye))
            + (a + 1) * d * d / 4 * pair_product(ps.P, ps.P))


def certify_final(alpha, d: int) -> float:
    """<phi|T_A(alpha R⊗R + S⊗S)|phi> for the canonical (unnormalized) phi.

    Checks the dense partial transpose against its four-term expansion
    first; a mismatch means the construction is broken.
    """
    if alpha < 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    state = alpha_state(d, alpha)
    err = partial_transpose(state).max_abs_diff(t_a_expansion(alpha, d))
    if err > CERTIFY_TOL:
        raise ArithmeticError(f"partial transpose deviates from its expansion by {err:.3e}")
    return float(witness_form(state, canonical_phi(d)).real)


def k_threshold(d: int, epsilon, target=3) -> int:
    """Smallest k >= 0 with beta (1 + eps/(d+1))^k > target, in exact arithmetic."""
    eps = as_fraction(epsilon, "epsilon")
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    target = Fraction(target)
    alpha, growth, k = _beta(d, eps), 1 + eps / (d + 1), 0
    while alpha <= target:
        alpha *= growth
        k += 1
    return k


@dataclass(frozen=True)
class ProtocolConfig:
    d: int
    epsilon: Fraction
    target: Fraction = Fraction(3)
    master_seed: int = 0
    max_rounds: int = 1_000_000

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 3:
            raise ValueError(f"d must be an integer >= 3, got {self.d}")
        eps = as_fraction(self.epsilon, "epsilon")
        if eps <= 0:
            raise ValueError(f"epsilon must be positive, got {eps}")
        object.__setattr__(self, "epsilon", eps)
        object.__setattr__(self, "target", as_fraction(self.target, "target"))
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be positive")

    @property
    def beta(self) -> Fraction:
        return _beta(self.d, self.epsilon)

    @property
    def growth(self) -> Fraction:
        return 1 + self.epsilon / (self.d + 1)


@dataclass(frozen=True)
class IterationOutcome:
    success: bool
    alpha_before: Fraction
    alpha_after: Fraction
    p_success: float

    def to_dict(self) -> dict:
        return {"success": self.success, "alpha_before": fraction_str(self.alpha_before),
                "alpha_after": fraction_str(self.alpha_after), "p_success": self.p_success}


def iterate_once(alpha, d: int, epsilon, rng) -> IterationOutcome:
    eps = as_fraction(epsilon, "epsilon")
    alpha = Fraction(alpha)
    p = success_probability(alpha, d, eps)
    if rng.random() < p:
        return IterationOutcome(True, alpha, alpha * (1 + eps / (d + 1)), p)
    return IterationOutcome(False, alpha, _beta(d, eps), p)


@dataclass
class RunStats:
    rounds: int
    copies_consumed: int
    k_needed: int
    final_alpha: Fraction
    final_witness_value: float | None
    terminated: bool
    failures: int = 0
    trajectory: list[IterationOutcome] = field(default_factory=list)

    def to_dict(self, with_trajectory: bool = False) -> dict:
        out = {
            "rounds": self.rounds,
            "copies_consumed": self.copies_consumed,
            "failures": self.failures,
            "k_needed": self.k_needed,
            "final_alpha": fraction_str(self.final_alpha),
            "final_witness_value": self.final_witness_value,
            "terminated": self.terminated,
        }
        if with_trajectory:
            out["trajectory"] = [t.to_dict() for t in self.trajectory]
        return out

    def to_json_line(self, with_trajectory: bool = False) -> str:
        return json.dumps(self.to_dict(with_trajectory))


def make_rng(seed) -> np.random.Generator:
    """Philox (counter-based) generator; ``seed`` may be an int or a SeedSequence."""
    return np.random.Generator(np.random.Philox(seed))


def simulate_run(config: ProtocolConfig, rng=None, record: bool = True, certify: bool = True) -> RunStats:
    """Run the restart-on-failure loop until k consecutive successes.

    From a fresh pair the success probability is the same every time, so
    the number of attempts until the first success is drawn in one
    geometric sample; later links of a streak are drawn one by one.  The
    run is cut off after ``max_rounds`` iterations and flagged.

    Copies: one for the initial fill of X1..X4, one per iteration for
    X5..X8, and one more per failure to refill X1..X4.
    """
    rng = make_rng(config.master_seed) if rng is None else rng
    d, eps = config.d, config.epsilon
    k = k_threshold(d, eps, config.target)
    beta = config.beta
    p_fresh = success_probability(beta, d, eps)
    alpha, streak = beta, 0
    rounds = failures = 0
    trajectory: list[IterationOutcome] = []

    while streak < k and rounds < config.max_rounds:
        if streak == 0:
            attempts = int(rng.geometric(p_fresh))
            misses = min(attempts - 1, config.max_rounds - rounds)
            if misses:
                if record:
                    trajectory.extend([IterationOutcome(False, beta, beta, p_fresh)] * misses)
                failures += misses
                rounds += misses
            if misses < attempts - 1 or rounds == config.max_rounds:
                break
            outcome = IterationOutcome(True, beta, beta * config.growth, p_fresh)
        else:
            outcome = iterate_once(alpha, d, eps, rng)
        rounds += 1
        if record:
            trajectory.append(outcome)
        if outcome.success:
            alpha, streak = outcome.alpha_after, streak + 1
        else:
            alpha, streak = beta, 0
            failures += 1

    terminated = streak >= k
    witness = certify_final(alpha, d) if (terminated and certify) else None
    return RunStats(
        rounds=rounds,
        copies_consumed=1 + rounds + failures,
        k_needed=k,
        final_alpha=alpha,
        final_witness_value=witness,
        terminated=terminated,
        failures=failures,
        trajectory=trajectory,
    )


def run_seeds(master_seed: int, trials: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(master_seed).spawn(trials)


def simulate_many(config: ProtocolConfig, trials: int, workers: int = 1,
                  record: bool = False, certify: bool = True) -> list[RunStats]:
    """Independent runs, each on its own generator spawned from the master seed."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    seeds = run_seeds(config.master_seed, trials)
    job = lambda s: simulate_run(config, make_rng(s), record=record, certify=certify)  # noqa: E731
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(job, seeds))
    return [job(s) for s in seeds]


def expected_copies(config: ProtocolConfig, trials: int, workers: int = 1) -> tuple[float, float]:
    """Sample mean and standard error of copies consumed by terminated runs.

    Returns (nan, nan) when no run terminated within ``max_rounds``.
    """
    runs = [r for r in simulate_many(config, trials, workers, certify=False) if r.terminated]
    if not runs:
        return math.nan, math.nan
    copies = np.array([r.copies_consumed for r in runs], dtype=float)
    stderr = float(copies.std(ddof=1) / np.sqrt(len(copies))) if len(copies) > 1 else 0.0
    return float(copies.mean()), stderr


def expected_copies_exact(d: int, epsilon, target=3) -> Fraction:
    """Exact mean number of copies, from the streak Markov chain.

    With E_j the expected further iterations plus failures from streak j,
    E_k = 0 and E_j = 1 + p_j E_{j+1} + (1 - p_j)(1 + E_0).
    """
    eps = as_fraction(epsilon, "epsilon")
    k = k_threshold(d, eps, target)
    beta, growth = _beta(d, eps), 1 + eps / (d + 1)
    probs = [success_probability_exact(beta * growth ** j, d, eps) for j in range(k)]
    # E_j = a_j + b_j E_0, solved backwards from E_k = 0
    a, b = Fraction(0), Fraction(0)
    for p in reversed(probs):
        a, b = 1 + p * a + (1 - p), p * b + (1 - p)
    e0 = a / (1 - b) if k else Fraction(0)
    return 1 + e0


def config_to_dict(config: ProtocolConfig) -> dict:
    out = asdict(config)
    out["epsilon"] = fraction_str(config.epsilon)
    out["target"] = fraction_str(config.target)
    out["rng"] = "numpy Philox, per-run SeedSequence.spawn"
    return out
