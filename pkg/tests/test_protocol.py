import json
import math
from fractions import Fraction

import numpy as np
import pytest

from distillkit.protocol import (
    ProtocolConfig,
    certify_final,
    dense_iteration,
    expected_copies,
    expected_copies_exact,
    iterate_once,
    k_threshold,
    make_rng,
    measurement_projector,
    measurement_traces,
    predicted_post_state,
    simulate_many,
    simulate_run,
    success_probability,
    success_probability_exact,
    t_a_expansion,
)
from distillkit.states import alpha_state
from distillkit.tensor import filtered_reduction, partial_transpose


class ForcedSuccess:
    """Stands in for a Generator whose every draw succeeds."""

    def random(self):
        return 0.0

    def geometric(self, p):
        return 1


class ForcedFailure:
    def random(self):
        return 1.0


def test_success_probability_example():
    p = success_probability_exact(Fraction(5, 2), 3, 1)
    t_r2, t_s2 = 9, 36
    assert p == Fraction(2, 3) * (Fraction(25, 8) * t_r2 + t_s2) / (Fraction(5, 2) * t_r2 + t_s2) ** 2
    assert float(p) == pytest.approx(0.0124918, abs=1e-7)
    assert success_probability(2.5, 3, 1.0) == pytest.approx(float(p), rel=1e-14)


def test_success_probability_rejects_negative():
    with pytest.raises(ValueError):
        success_probability(-1, 3, 1)
    with pytest.raises(ValueError):
        success_probability(1, 3, -1)


def test_success_probability_matches_dense_20_random():
    rng = np.random.default_rng(5)
    for _ in range(20):
        alpha = Fraction(int(rng.integers(0, 60)), 8)
        eps = Fraction(int(rng.integers(1, 30)), 10)
        _, p_dense = dense_iteration(alpha, 3, eps)
        assert abs(p_dense - success_probability(alpha, 3, eps)) <= 1e-12


def test_success_probability_in_unit_interval():
    for alpha in (0, Fraction(1, 3), 1, 5, 100):
        for eps in (0, Fraction(1, 10), 1, 7):
            p = success_probability_exact(alpha, 3, eps)
            assert 0 < p <= 1


def test_dense_iteration_rescaling_invariant():
    # the trace ratio ignores the normalization of either input
    post, p = dense_iteration(Fraction(5, 2), 3, 1)
    assert post.trace().real > 0
    a = 7.0 * alpha_state(3, Fraction(5, 2))
    b = 0.25 * alpha_state(3, Fraction(5, 2)).relabel({1: 5, 2: 6, 3: 7, 4: 8})
    scaled = filtered_reduction([a, b], measurement_projector(3))
    assert scaled.trace().real / (a.trace().real * b.trace().real) == pytest.approx(p, rel=1e-12)


@pytest.mark.parametrize("alpha", [Fraction(5, 2), Fraction(25, 8), 0, 4])
def test_dense_iteration_matches_closed_form(alpha):
    post, _ = dense_iteration(alpha, 3, 1)
    assert post.max_abs_diff(predicted_post_state(alpha, 3, 1)) <= 1e-12


def test_dense_iteration_small_eps():
    post, _ = dense_iteration(Fraction(41, 20), 3, Fraction(1, 10))
    assert post.max_abs_diff(predicted_post_state(Fraction(41, 20), 3, Fraction(1, 10))) <= 1e-12


@pytest.mark.parametrize("d", [3, 4, 5])
def test_measurement_traces(d):
    t = measurement_traces(d)
    assert t["RR"] == pytest.approx((d - 1) / (2 * d), abs=1e-14)
    assert t["SS"] == pytest.approx((d + 1) / (2 * d), abs=1e-14)
    assert abs(t["RS"]) <= 1e-14 and abs(t["SR"]) <= 1e-14


def test_iterate_once_branches():
    win = iterate_once(Fraction(5, 2), 3, 1, ForcedSuccess())
    assert win.success and win.alpha_after == Fraction(25, 8)
    lose = iterate_once(Fraction(25, 8), 3, 1, ForcedFailure())
    assert not lose.success and lose.alpha_after == Fraction(5, 2)
    assert 0 < win.p_success <= 1


def test_iterate_once_repeated_success():
    alpha = Fraction(41, 20)
    for _ in range(5):
        alpha = iterate_once(alpha, 3, Fraction(1, 10), ForcedSuccess()).alpha_after
    assert alpha == Fraction(41, 20) * Fraction(41, 40) ** 5


def test_iterate_once_frequency():
    rng = make_rng(99)
    trials = 100_000
    p = success_probability(Fraction(5, 2), 3, 1)
    hits = sum(iterate_once(Fraction(5, 2), 3, 1, rng).success for _ in range(trials))
    se = math.sqrt(p * (1 - p) / trials)
    assert abs(hits / trials - p) <= 3 * se


def test_k_threshold_examples():
    assert k_threshold(3, 1) == 1
    assert k_threshold(3, Fraction(1, 10)) == 16
    assert Fraction(41, 20) * Fraction(41, 40) ** 15 <= 3 < Fraction(41, 20) * Fraction(41, 40) ** 16
    assert k_threshold(3, 1, target=2) == 0
    with pytest.raises(ValueError):
        k_threshold(3, 0)
    with pytest.raises(TypeError):
        k_threshold(3, 0.1)


@pytest.mark.parametrize("alpha,value", [(Fraction(25, 8), -0.0625), (3, 0.0), (5, -1.0), (0, 1.5)])
def test_certify_final(alpha, value):
    assert certify_final(alpha, 3) == pytest.approx(value, abs=1e-12)


def test_t_a_expansion_is_exact():
    for alpha in (0, 1, 3, Fraction(25, 8), 5):
        assert partial_transpose(alpha_state(3, alpha)).max_abs_diff(t_a_expansion(alpha, 3)) <= 1e-12


def test_certify_final_rejects_negative_alpha():
    with pytest.raises(ValueError):
        certify_final(-1, 3)


def test_config_validation():
    with pytest.raises(ValueError):
        ProtocolConfig(3, 0)
    with pytest.raises(ValueError):
        ProtocolConfig(2, 1)
    with pytest.raises(TypeError):
        ProtocolConfig(3, 0.5)
    cfg = ProtocolConfig(3, "1/10")
    assert cfg.beta == Fraction(41, 20) and cfg.growth == Fraction(41, 40)


def test_simulate_run_terminates_and_certifies():
    stats = simulate_run(ProtocolConfig(3, 1, master_seed=7))
    assert stats.terminated and stats.k_needed == 1
    assert stats.final_alpha == Fraction(25, 8)
    assert stats.final_witness_value == pytest.approx(-0.0625, abs=1e-12)
    assert stats.final_witness_value == pytest.approx((3 - float(stats.final_alpha)) / 2, abs=1e-10)
    assert len(stats.trajectory) == stats.rounds
    assert sum(not t.success for t in stats.trajectory) == stats.failures
    assert stats.copies_consumed == 1 + stats.rounds + stats.failures


def test_simulate_run_forced_success():
    for eps, k in ((1, 1), (Fraction(1, 10), 16)):
        stats = simulate_run(ProtocolConfig(3, eps), rng=ForcedSuccess())
        assert stats.k_needed == k
        assert stats.rounds == k and stats.copies_consumed == k + 1
        assert stats.final_alpha > 3


def test_simulate_run_cap():
    stats = simulate_run(ProtocolConfig(3, Fraction(1, 10), max_rounds=50, master_seed=1))
    assert not stats.terminated
    assert stats.rounds == 50
    assert stats.final_witness_value is None


def test_simulate_run_reproducible():
    cfg = ProtocolConfig(3, Fraction(1, 2), master_seed=123)
    a, b = simulate_run(cfg), simulate_run(cfg)
    assert a.to_json_line(True) == b.to_json_line(True)


def test_simulate_many_worker_independent():
    cfg = ProtocolConfig(3, 1, master_seed=4)
    serial = [r.to_dict() for r in simulate_many(cfg, 30)]
    threaded = [r.to_dict() for r in simulate_many(cfg, 30, workers=4)]
    assert serial == threaded
    assert len({r["copies_consumed"] for r in serial}) > 1


def test_run_stats_json_line():
    stats = simulate_run(ProtocolConfig(3, 1, master_seed=2))
    row = json.loads(stats.to_json_line(with_trajectory=True))
    assert row["final_alpha"] == "25/8" and row["terminated"]
    assert len(row["trajectory"]) == stats.rounds


def test_expected_copies_forced():
    # k = 0 once the target sits below beta: only the initial copy is used
    mean, se = expected_copies(ProtocolConfig(3, 1, target=2), 10)
    assert (mean, se) == (1.0, 0.0)


def test_expected_copies_exact_value():
    assert expected_copies_exact(3, 1) == Fraction(3042, 19)
    assert expected_copies_exact(3, 1, target=2) == 1


def test_expected_copies_matches_exact():
    mean, se = expected_copies(ProtocolConfig(3, 1, master_seed=10), 4000)
    assert abs(mean - float(expected_copies_exact(3, 1))) <= 4 * se


def test_expected_copies_unterminated_is_nan():
    mean, se = expected_copies(ProtocolConfig(3, Fraction(1, 10), max_rounds=10), 3)
    assert math.isnan(mean) and math.isnan(se)
