"""Acceptance suite: one test per criterion, at the stated tolerances.

Each test drives the same criterion implementations as `bfsens validate`
and prints one pass/fail line. The full module is the package's exit
gate; run it with `pytest tests/test_acceptance.py -v -s`.
"""

import pytest

from bfsens.acceptance import CRITERIA, run_criterion

_BY_ID = {c.id: c for c in CRITERIA}


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    return tmp_path_factory.mktemp("acceptance")


def _run(cid, workdir):
    crit = _BY_ID[cid]
    result = run_criterion(crit, workdir)
    status = "PASS" if result.passed else "FAIL"
    print(f"\ncriterion {cid:2d} [{status}] {crit.name} "
          f"({result.runtime_s:.1f}s / budget {crit.budget_s:.0f}s)")
    for key, val in result.details.items():
        print(f"    {key}: {val}")
    assert result.passed, f"criterion {cid} failed: {result.details}"
    assert result.runtime_s < crit.budget_s
    return result


def test_criterion_01_exact_identity(workdir):
    res = _run(1, workdir)
    assert res.details["max_abs_dlogbf"] <= 1e-10


def test_criterion_02_iwmde_accuracy(workdir):
    res = _run(2, workdir)
    assert res.details["mae_t_3000"] <= 0.003
    assert res.details["mae_t_30000"] <= 0.016


def test_criterion_03_kde_accuracy_trend(workdir):
    res = _run(3, workdir)
    assert res.details["kde_mae_3000"] <= 0.5
    assert res.details["kde_mae_300000"] <= 0.1
    assert res.details["kde_mae_t_decreasing"]
    assert res.details["iwmde_beats_kde_everywhere"]


def test_criterion_04_estimator_dominance(workdir):
    res = _run(4, workdir)
    assert res.details["wins"] >= 19


def test_criterion_05_bivariate_surface(workdir):
    res = _run(5, workdir)
    assert res.details["median_abs_log_ratio"] <= 0.1
    assert res.details["mean_err_corner"] >= res.details["mean_err_elsewhere"]


def test_criterion_06_bma_agreement(workdir):
    res = _run(6, workdir)
    assert res.details["max_interior_disagreement"] <= 0.1
    assert res.details["worst_validation_bridge"] <= 0.1
    assert res.details["worst_validation_product_space"] <= 0.1


def test_criterion_07_anchor_shift(workdir):
    res = _run(7, workdir)
    assert res.details["max_shift_deviation"] <= 1e-12


def test_criterion_08_sddr_chain(workdir):
    res = _run(8, workdir)
    assert res.details["relative_error"] <= 0.05


def test_criterion_09_null_collapse(workdir):
    res = _run(9, workdir)
    assert res.details["oracle_abs_log_bf_at_1e-3"] <= 0.02
    assert res.details["spearman_trend_iwmde"] > 0


def test_criterion_10_determinism(workdir):
    res = _run(10, workdir)
    assert res.details["validate_identical"]
    assert res.details["curve_identical"]


def test_criterion_11_speed_ordering(workdir):
    res = _run(11, workdir)
    assert res.details["speedup_at_least_5"]
    assert res.details["max_abs_log_ratio_vs_refits"] <= 0.1
