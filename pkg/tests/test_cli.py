import json
import subprocess
import sys

import pytest

from distillkit.cli import EXIT_BUDGET, EXIT_FAIL, EXIT_OK, EXIT_USAGE, CommandReport, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip() else None), err


@pytest.mark.parametrize("d", [3, 5])
def test_identities_pass(capsys, d):
    code, report, err = run(capsys, "identities", "--d", str(d))
    assert code == EXIT_OK and report["pass"] is True
    assert report["schema"] == 1
    assert all(v["tol"] == 1e-12 for v in report["results"]["pt_relations"].values())
    assert "[identities]" in err


def test_identities_usage_error(capsys):
    code, report, _ = run(capsys, "identities", "--d", "1")
    assert code == EXIT_USAGE and report is None


def test_unknown_command_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == EXIT_USAGE


def test_coeffs_two_copies(capsys):
    code, report, _ = run(capsys, "coeffs", "--d", "3", "--eps", "1/10", "--n", "2")
    res = report["results"]
    assert code == EXIT_OK and report["pass"] is True
    assert res["count"] == 16
    assert res["checks"]["alpha(0^2n) == mu^n"] and res["checks"]["alpha(1^2n) == lambda^n"]
    assert res["checks"]["negative alpha(x) >= -eps mu^(n-1)"]
    assert res["all_other_words_violations"] == ["0011", "1100"]
    assert all(c["exact"] for c in res["coefficients"].values())


def test_coeffs_eps_zero(capsys):
    _, report, _ = run(capsys, "coeffs", "--d", "3", "--eps", "0", "--n", "3")
    assert report["results"]["mixed_pair_words_nonzero"] == 0


def test_coeffs_single_copy_values(capsys):
    _, report, _ = run(capsys, "coeffs", "--d", "3", "--eps", "1", "--n", "1")
    c = report["results"]["coefficients"]
    assert c["00"]["value"] == "26" and c["11"]["value"] == "7/2"


def test_coeffs_budget(capsys):
    code, _, err = run(capsys, "coeffs", "--d", "3", "--eps", "1/10", "--n", "7")
    assert code == EXIT_BUDGET and "budget" in err


def test_coeffs_rejects_decimal(capsys):
    code, _, _ = run(capsys, "coeffs", "--eps", "0.1")
    assert code == EXIT_USAGE


def test_epsilon_single_copy(capsys):
    code, report, _ = run(capsys, "epsilon", "--d", "3", "--n", "1")
    res = report["results"]
    assert code == EXIT_OK
    assert res["exact_root"]["value"] == "6/71"
    assert res["bound_at_root"]["value"] == "0"
    assert abs(res["epsilon_star_float"] - 6 / 71) <= 1e-6


def test_epsilon_decreases_with_n(capsys):
    _, one, _ = run(capsys, "epsilon", "--d", "3", "--n", "1")
    _, two, _ = run(capsys, "epsilon", "--d", "3", "--n", "2")
    assert two["results"]["epsilon_star_float"] < one["results"]["epsilon_star_float"]


def test_witness_werner(capsys):
    code, report, _ = run(capsys, "witness", "werner", "--d", "3", "--alpha", "4",
                          "--restarts", "8", "--seed", "1", "--workers", "1")
    assert code == EXIT_OK
    assert report["results"]["best_value"]["value"] <= -0.25 + 1e-6
    assert report["results"]["witness"]["certificate"] is not None
    assert report["seed"] == 1


def test_witness_werner_no_certificate(capsys):
    _, report, _ = run(capsys, "witness", "werner", "--d", "3", "--alpha", "2",
                       "--restarts", "20", "--seed", "2", "--workers", "1")
    assert report["results"]["best_value"]["value"] >= -1e-6
    assert report["results"]["verdict"].startswith("no certificate found")


def test_witness_alpha_state(capsys):
    _, report, _ = run(capsys, "witness", "alpha-state", "--d", "3", "--alpha", "5",
                       "--restarts", "4", "--seed", "3", "--workers", "1")
    assert report["results"]["best_value"]["value"] <= -0.5 + 1e-3


def test_witness_needs_alpha(capsys):
    code, _, _ = run(capsys, "witness", "werner", "--seed", "1")
    assert code == EXIT_USAGE


def test_witness_deterministic_given_seed(capsys):
    argv = ["witness", "rho", "--d", "3", "--eps", "1/20", "--restarts", "3", "--seed", "5", "--workers", "1"]
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert a == b


def test_simulate_seeded(capsys):
    code, report, _ = run(capsys, "simulate", "--d", "3", "--eps", "1", "--seed", "7")
    res = report["results"]
    assert code == EXIT_OK and report["pass"] is True
    assert res["run"]["terminated"] and res["final_alpha"] == ["25/8"]
    assert res["final_witness_values"][0] < 0
    assert report["parameters"]["rng"].startswith("numpy Philox")


def test_simulate_eps_zero(capsys):
    code, _, _ = run(capsys, "simulate", "--d", "3", "--eps", "0")
    assert code == EXIT_USAGE


def test_simulate_draws_seed(capsys):
    code, report, err = run(capsys, "simulate", "--eps", "1")
    assert code == EXIT_OK
    assert f"seed: {report['seed']}" in err


def test_simulate_unterminated_warns(capsys):
    code, report, _ = run(capsys, "simulate", "--eps", "1/10", "--max-rounds", "20", "--seed", "1")
    assert code == EXIT_OK
    assert report["results"]["terminated"] == 0 and report["warnings"]


def test_simulate_jsonl_and_config(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"d": 3, "eps": "1", "trials": 5, "seed": 11, "workers": 2}))
    out = tmp_path / "runs.jsonl"
    code, report, _ = run(capsys, "simulate", "--config", str(cfg), "--jsonl", str(out), "--trajectory")
    lines = [json.loads(line) for line in out.read_text().splitlines()]
    assert code == EXIT_OK and report["seed"] == 11 and report["results"]["trials"] == 5
    assert len(lines) == 5
    assert all(len(r["trajectory"]) == r["rounds"] for r in lines)


def test_flags_override_config(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"d": 4}))
    _, report, _ = run(capsys, "identities", "--config", str(cfg), "--d", "3")
    assert report["parameters"]["d"] == 3


def test_report_round_trip(capsys):
    _, report, _ = run(capsys, "coeffs", "--n", "1")
    text = json.dumps(report, indent=2)
    parsed = CommandReport.from_json(text)
    assert parsed.to_dict() == report
    assert CommandReport.from_json(parsed.to_json()) == parsed


def test_failed_check_exit_code(capsys, monkeypatch):
    from distillkit import states
    from distillkit.states import PTRelationReport
    monkeypatch.setattr(states, "verify_pt_relations", lambda d: PTRelationReport(d, {"T(P)": 1.0}))
    code, report, _ = run(capsys, "identities", "--d", "3")
    assert code == EXIT_FAIL and report["pass"] is False


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "distillkit", "identities", "--d", "2"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["pass"] is True
