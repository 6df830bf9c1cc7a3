"""The acceptance gate: every criterion at its stated tolerance.

Each test prints its PASS/FAIL line; running this module alone gives the
one-line-per-criterion summary required of the `accept` surface.
"""

import numpy as np
import pytest

from phlab.pipeline import (criterion_bunching, criterion_c0_rate,
                            criterion_cauchy, criterion_charts,
                            criterion_derivative, criterion_holder,
                            criterion_ledger, criterion_linear_oracle,
                            criterion_manifolds, criterion_trials,
                            load_bundled)


@pytest.fixture(scope="module")
def linear_cfg():
    return load_bundled("linear_oracle")


@pytest.fixture(scope="module")
def perturbed_cfg():
    return load_bundled("standard_perturbed")


def _report(result, **expectations):
    print()
    print(result.line())
    for key, val in expectations.items():
        assert val, (key, result.details)
    assert result.passed, result.details


def test_criterion_1_linear_oracle(linear_cfg):
    res = criterion_linear_oracle(linear_cfg)
    _report(res,
            graphs_flat=res.details["max_graph_deviation"] <= 1e-12,
            translations=res.details["max_translation_deviation"] <= 1e-11,
            degenerate=res.details["max_diagnostic_gap"] <= 1e-11,
            runtime=res.elapsed < 10.0)


def test_criterion_2_ledger(perturbed_cfg):
    res = criterion_ledger(perturbed_cfg)
    _report(res,
            margins=all(v > 0 for v in res.details["margins"].values()),
            series=all(v <= 1e-10
                       for v in res.details["series_rel_errors"].values()),
            runtime=res.elapsed < 1.0)


def test_criterion_3_manifolds(perturbed_cfg):
    res = criterion_manifolds(perturbed_cfg)
    _report(res, runtime=res.elapsed < 120.0)


def test_criterion_4_c0_rate(perturbed_cfg):
    res = criterion_c0_rate(perturbed_cfg)
    _report(res,
            bounds=res.details["bounds_ok"],
            slope_within_5pct=abs(
                res.details["slope"] - res.details["slope_target"])
            <= 0.05 * abs(res.details["slope_target"]),
            runtime=res.elapsed < 120.0)


def test_criterion_5_cauchy_rates(perturbed_cfg):
    res = criterion_cauchy(perturbed_cfg)
    _report(res, displacement=res.details["displacement_ok"])


def test_criterion_6_derivative(perturbed_cfg):
    res = criterion_derivative(perturbed_cfg)
    _report(res,
            fd=res.details["fd_worst_rel"] <= 1e-3,
            k2=res.details["k2_ok"],
            distortion=res.details["distortion_ok"])


def test_criterion_7_trials(perturbed_cfg):
    res = criterion_trials(perturbed_cfg, n_trials=10000)
    _report(res,
            backward_zero_violations=res.details["backward"]["violations"] == 0,
            backward_count=res.details["backward"]["checked"] >= 9000,
            forward_zero_violations=res.details["forward"]["violations"] == 0,
            forward_count=res.details["forward"]["checked"] >= 9000)


def test_criterion_8_holder(perturbed_cfg):
    res = criterion_holder(perturbed_cfg)
    _report(res,
            r2=all(res.details[t]["r2"] >= 0.9
                   for t in ("h_star", "log_norm_Dh")))


def test_criterion_9_charts(perturbed_cfg):
    res = criterion_charts(perturbed_cfg)
    _report(res,
            exponents=res.details["exponent_error"] <= 1e-4,
            subcriteria=all(res.details["exported_subcriteria"].values()),
            inclusion=res.details["inclusion"]["violations"] == 0,
            runtime=res.elapsed < 300.0)


def test_criterion_10_bunching(perturbed_cfg):
    res = criterion_bunching(perturbed_cfg)
    _report(res,
            toy_passes=res.details["toy_margin"] > 0,
            control_fails=res.details["control_margin"] < 0)
