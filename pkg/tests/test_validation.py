"""The built-in validation suites at reduced sizes."""

from monitored_chain.validation import (
    check_car,
    check_continuity,
    check_generator_derivative,
    check_oracle_equivalence,
    check_trajectory_agreement,
    check_unitality,
    run_suite,
)


def test_car_check():
    result = check_car(4)
    assert result.passed and result.value < 1e-14


def test_unitality_check():
    assert check_unitality(3).passed


def test_generator_derivative_check():
    result = check_generator_derivative(3, n_draws=3)
    assert result.passed and result.value < 1e-6


def test_oracle_equivalence_check():
    result = check_oracle_equivalence(2, n_draws=3)
    assert result.passed
    assert "steady" in result.detail


def test_continuity_check():
    assert check_continuity(3, n_draws=4).passed


def test_trajectory_agreement_check():
    result = check_trajectory_agreement(n_sites=2, n_trajectories=60)
    assert result.passed and result.value < 3.0


def test_run_suite_reports():
    results = run_suite(2, n_draws=2, n_trajectories=40)
    assert len(results) == 6
    assert all(r.passed for r in results)
    for r in results:
        assert r.line().startswith("PASS")
