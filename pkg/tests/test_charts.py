"""Toy-system charts: exponents, property lists, globalization, export."""

import numpy as np
import pytest

from phlab.charts import (Chart, ToySystem, build_chart,
                          center_unstable_inclusion, chart_report,
                          estimate_exponents, expulsion_steps,
                          export_sequence, globalize, rescale_chart,
                          toy_spectral_data, verify_c8_along_orbit)
from phlab.errors import DegenerateSpectrum
from phlab.ledger import audit_center_bunching
from phlab.spectral import certificate_from_cocycle, verify_certificate

X0 = np.array([0.13, 0.41, 0.07])


@pytest.fixture(scope="module")
def toy():
    return ToySystem()


@pytest.fixture(scope="module")
def toy_exponents(toy):
    return estimate_exponents(toy, X0, horizon=10000)


class TestExponents:
    def test_matches_closed_form(self, toy, toy_exponents):
        lam, _ = toy_exponents
        target = np.log((3.0 + np.sqrt(5.0)) / 2.0)
        assert target == pytest.approx(0.96242, abs=5e-6)
        assert np.max(np.abs(lam - [target, 0.0, -target])) < 1e-4

    def test_rotation_factor_alone_is_isometric(self, toy):
        jac = toy.derivative(np.array([0.2, 0.3, 0.9]))
        assert jac[2, 2] == 1.0
        assert jac[2, 0] == 0.0 and jac[2, 1] == 0.0

    def test_degenerate_spectrum_guard(self):
        class Flat(ToySystem):
            def derivative(self, y):
                y = np.atleast_2d(np.asarray(y, dtype=float))
                jac = np.tile(np.eye(3), (y.shape[0], 1, 1))
                return jac if jac.shape[0] > 1 else jac[0]

        with pytest.raises(DegenerateSpectrum):
            estimate_exponents(Flat(), X0, horizon=1000)

    def test_perturbed_exponents_continuous(self, toy):
        lam0 = toy.exact_exponents
        errs = []
        for eps in (0.01, 0.02):
            pert = ToySystem(perturbation=eps)
            lam, _ = estimate_exponents(pert, X0, horizon=4000)
            errs.append(float(np.max(np.abs(lam - lam0))))
        assert errs[0] < 0.05 and errs[1] < 0.1
        assert errs[1] > errs[0] * 0.5

    def test_frames_match_exact_eigenvectors(self, toy, toy_exponents):
        _, frames = toy_exponents
        for col in range(3):
            overlap = abs(float(frames[:, col] @ toy.frame_exact[:, col]))
            assert overlap > 1.0 - 1e-10


class TestCharts:
    def test_ell_hat_constant_on_uniform_system(self, toy, toy_exponents):
        lam, _ = toy_exponents
        ells = []
        for pt in toy.orbit(X0, 8):
            chart, _ = build_chart(toy, pt, eps_hat=0.2, lam=lam)
            ells.append(chart.ell_hat)
        assert np.ptp(ells) == 0.0

    def test_l4_sandwich_on_grid(self, toy, toy_exponents):
        lam, _ = toy_exponents
        chart, nxt = build_chart(toy, X0, eps_hat=0.2, lam=lam)
        rng = np.random.default_rng(0)
        d0 = np.linalg.inv(nxt.frame) @ toy.derivative(chart.x) @ chart.frame
        for i in range(3):
            for _ in range(100):
                v = np.zeros(3)
                v[i] = rng.uniform(0.5, 1.0) * rng.choice([-1.0, 1.0])
                img = float(np.max(np.abs(d0 @ v)))
                ratio = img / np.max(np.abs(v))
                assert np.exp(lam[i] - 0.2) <= ratio <= np.exp(lam[i] + 0.2)

    def test_inverse_side_sandwich(self, toy, toy_exponents):
        lam, _ = toy_exponents
        chart, nxt = build_chart(toy, X0, eps_hat=0.2, lam=lam)
        d0 = np.linalg.inv(nxt.frame) @ toy.derivative(chart.x) @ chart.frame
        d0_inv = np.linalg.inv(d0)
        for i, l in enumerate(lam):
            v = np.zeros(3)
            v[i] = 1.0
            ratio = float(np.max(np.abs(d0_inv @ v)))
            assert np.exp(-l - 0.2) <= ratio <= np.exp(-l + 0.2)

    def test_rescaled_properties_and_c8(self, toy, toy_exponents):
        lam, _ = toy_exponents
        chart, nxt = build_chart(toy, X0, eps_hat=0.2, lam=lam)
        rc = rescale_chart(chart, nxt)
        assert rc.eps == pytest.approx(0.8)
        assert rc.ell == pytest.approx(chart.ell_hat ** 2)
        assert verify_c8_along_orbit(toy, X0, 0.2, steps=50, lam=lam)

    def test_chart_report(self, toy):
        rep = chart_report(toy, X0, eps_hat=0.2, horizon=2000, n_points=20)
        assert rep["failures"] == []
        assert rep["ell_hat_constant"]


class TestGlobalization:
    def test_linear_case_everywhere(self, toy, toy_exponents):
        lam, _ = toy_exponents
        chart, nxt = build_chart(toy, X0, eps_hat=0.2, lam=lam)
        rc = rescale_chart(chart, nxt)
        fx = globalize(rc)
        rng = np.random.default_rng(1)
        pts = rng.standard_normal((50, 3))
        lin = pts @ rc.d0().T
        assert np.allclose(fx(pts), lin, atol=1e-12)

    def test_far_field_is_linear(self, toy, toy_exponents):
        lam, _ = toy_exponents
        chart, nxt = build_chart(toy, X0, eps_hat=0.2, lam=lam)
        rc = rescale_chart(chart, nxt)
        fx = globalize(rc)
        u = np.array([1.5, 0.4, -0.2]) * fx.support
        assert np.array_equal(fx(u), rc.d0() @ u)


class TestExport:
    def test_unperturbed_export_is_linear_cocycle(self, toy):
        seq = export_sequence(toy, X0, eps_hat=0.2)
        assert seq.is_linear
        a, b, c = seq.cocycle.blocks_at(0)
        lam = np.log((3 + np.sqrt(5)) / 2)
        assert a[0, 0] == pytest.approx(np.exp(-lam), abs=1e-4)
        assert b[0, 0] == pytest.approx(1.0, abs=1e-6)
        assert c[0, 0] == pytest.approx(np.exp(lam), abs=1e-4)

    def test_export_certificate_verifies(self, toy):
        seq = export_sequence(toy, X0, eps_hat=0.2)
        cert = certificate_from_cocycle(seq.cocycle, slack=1e-6)
        assert verify_certificate(seq.cocycle, cert).overall

    def test_export_passes_dynamics_budget(self, toy):
        seq = export_sequence(toy, X0, eps_hat=0.2)
        report = seq.validate_budget(grid_count=1000)
        assert all(v <= seq.eps_prime for row in report.values()
                   for v in row.values())


class TestCenterUnstableInclusion:
    def test_members_lie_on_leaf(self, toy):
        seq = export_sequence(toy, X0, eps_hat=0.2)
        out = center_unstable_inclusion(seq, delta=1e-6, n_samples=1000,
                                        depth=40)
        assert out["members"] > 100
        assert out["violations"] == 0
        assert out["worst_distance"] <= 1e-7

    def test_exact_cu_point_is_member(self, toy):
        seq = export_sequence(toy, X0, eps_hat=0.2)
        delta = 1e-6
        pt = np.array([0.0, 0.3 * delta, 0.4 * delta])
        cur = pt.copy()
        for n in range(40):
            assert np.linalg.norm(cur) < delta
            cur = seq.invert(-1 - n, cur)

    def test_stable_contamination_expelled(self, toy, ledger):
        seq = export_sequence(toy, X0, eps_hat=0.2)
        delta = 1e-6
        # twice-delta stable part is outside the set immediately
        assert expulsion_steps(seq, delta, 2.0 * delta) == 0
        # half-delta stable part is expelled within the rate bound
        steps = expulsion_steps(seq, delta, 0.5 * delta)
        lam_min = np.log((3 + np.sqrt(5)) / 2)
        bound = int(np.ceil(np.log(2.0) / lam_min)) + 1
        assert 0 < steps <= bound


class TestToySpectralData:
    def test_bunching_audit_passes(self, toy):
        data = toy_spectral_data(toy, n_samples=32)
        verdict = audit_center_bunching(data)
        assert verdict.passed
        assert verdict.worst_margin > 0.0
