"""Constant selection chain against hand evaluation and partial sums."""

import math

import numpy as np
import pytest

from phlab.errors import (BunchingInfeasible, DegenerateGaps, DivergentSeries,
                          Infeasible, NoAdmissibleDelta, OrderingViolated)
from phlab.ledger import (AdjustedExponents, BunchingVerdict,
                          PartiallyHyperbolicSpectralData,
                          audit_center_bunching, derive_ledger,
                          derived_constants, select_epsilon_prime,
                          select_holder_exponents, select_radii,
                          select_secondary_exponents)
from phlab.spectral import SpectralCertificate, certificate_from_cocycle


def make_cert(eta=-1.4, kappa=math.log(0.25), gamma=0.0, gamma_hat=0.0,
              kappa_hat=math.log(4.0), eta_hat=1.4, mu=2.0, slack=1e-6):
    return SpectralCertificate.from_values(
        eta - slack, kappa + slack, gamma - slack, gamma_hat + slack,
        kappa_hat - slack, eta_hat + slack, mu)


class TestEpsilonPrime:
    def test_standard_value(self, certificate):
        # all three gaps exceed 1, so the "1" term dominates
        assert select_epsilon_prime(certificate) == 0.01

    def test_degenerate_gap(self):
        cert = SpectralCertificate.from_values(
            -1.5, -1.0, -1.0, 0.5, 1.0, 1.5, 2.0)
        with pytest.raises(DegenerateGaps):
            select_epsilon_prime(cert)

    def test_override(self, certificate):
        assert select_epsilon_prime(certificate, override=0.003) == 0.003
        with pytest.raises(DegenerateGaps):
            select_epsilon_prime(certificate, override=0.02)


class TestHolderExponents:
    def test_running_example(self, certificate):
        adj = AdjustedExponents.from_certificate(certificate, 0.01)
        theta_bar, theta = select_holder_exponents(adj, beta=0.8)
        # feasible sup ~ 0.9573 so the beta-side cap is active
        assert theta_bar == pytest.approx(0.792, abs=1e-12)
        assert theta == pytest.approx(0.6336, abs=1e-12)
        ratio = float(np.max((adj.gamma_hat - adj.gamma) / (-adj.kappa)))
        assert ratio == pytest.approx(0.02928, abs=5e-5)
        assert ratio < theta

    def test_feasible_bound_formula(self, certificate):
        adj = AdjustedExponents.from_certificate(certificate, 0.01)
        bound = float(np.min((adj.kappa - adj.gamma) / adj.eta))
        assert bound == pytest.approx(0.95733, abs=5e-5)

    def test_symmetric_exponents(self):
        cert = make_cert(eta=math.log(0.25), eta_hat=math.log(4.0))
        adj = AdjustedExponents.from_certificate(cert, 0.01)
        theta_bar, _ = select_holder_exponents(adj, beta=0.8)
        bound = float(np.min((adj.kappa - adj.gamma) / adj.kappa))
        assert theta_bar == pytest.approx(min(0.99 * 0.8, 0.99 * bound),
                                          abs=1e-12)

    def test_huge_center_spread_infeasible(self):
        cert = make_cert(gamma=0.0, gamma_hat=1.33, kappa_hat=math.log(8.0),
                         eta_hat=2.2, mu=3.0)
        adj = AdjustedExponents.from_certificate(cert, 0.01)
        with pytest.raises(BunchingInfeasible):
            select_holder_exponents(adj, beta=0.8)


class TestSecondaryExponents:
    def test_running_example(self, certificate):
        adj = AdjustedExponents.from_certificate(certificate, 0.01)
        theta_bar, theta = select_holder_exponents(adj, 0.8)
        alpha, theta_hat, beta_hat, omega, omega_hat, kappa_bar = \
            select_secondary_exponents(adj, theta, theta_bar, 0.8)
        ratio = float(np.max((adj.gamma_hat - adj.gamma) / (-adj.kappa)))
        assert theta_hat == pytest.approx(0.5 * (ratio + theta), abs=1e-15)
        assert theta_hat == pytest.approx(0.33144, abs=5e-5)
        assert alpha == 0.5
        assert (1 + alpha) * ratio < theta_hat
        lower = float(np.max(theta * adj.kappa / (adj.kappa - adj.gamma)))
        assert lower == pytest.approx(0.64301, abs=5e-5)
        assert beta_hat == pytest.approx(0.5 * (lower + 0.8), abs=1e-15)
        assert beta_hat == pytest.approx(0.72151, abs=5e-5)
        assert omega == pytest.approx(-0.80567, abs=5e-4)
        assert kappa_bar == pytest.approx(-1.36629, abs=5e-5)
        # constant sequence: omega_hat has a single term
        spread = float(adj.gamma_hat[0] - adj.gamma[0])
        assert omega_hat == pytest.approx(
            float(adj.kappa[0]) * theta_hat + 1.5 * spread, abs=1e-15)

    def test_empty_interval(self, certificate):
        adj = AdjustedExponents.from_certificate(certificate, 0.01)
        with pytest.raises(Infeasible):
            select_secondary_exponents(adj, theta=0.02, theta_bar=0.03,
                                       beta=0.8)


class TestRadii:
    def test_zero_spread_has_no_delta(self, certificate):
        adj = AdjustedExponents.from_certificate(certificate, 0.01)
        flat = AdjustedExponents(
            eps_prime=adj.eps_prime, kappa=adj.kappa, kappa_hat=adj.kappa_hat,
            eta=adj.eta, eta_hat=adj.eta_hat, gamma=adj.gamma,
            gamma_hat=adj.gamma.copy())
        with pytest.raises(NoAdmissibleDelta):
            select_radii(flat, alpha=0.5, beta_hat=0.7215, beta=0.8,
                         theta_bar=0.792, theta=0.6336, c1=2.0, c2=3.0)

    def test_running_example_delta_is_largest_dyadic(self, ledger):
        adj = ledger.adjusted
        spread = adj.gamma_hat - adj.gamma

        def margin(delta):
            lhs = 1.0 + np.exp(-spread) * ledger.c1_reg * \
                delta ** (ledger.beta - ledger.beta_hat)
            return float(np.min(np.exp(ledger.alpha * spread) - lhs))

        assert margin(ledger.delta) > 0.0
        assert margin(2.0 * ledger.delta) <= 0.0
        # independent dyadic scan
        expected = None
        for j in range(1, 200):
            if margin(2.0 ** (-j)) > 0.0:
                expected = 2.0 ** (-j)
                break
        assert ledger.delta == expected
        assert ledger.delta == pytest.approx(2.0 ** -84, rel=0)

    def test_rho_formulas(self, ledger):
        c1, c2 = ledger.c1_reg, ledger.c2_proj
        assert ledger.rho0 == pytest.approx(
            ledger.delta * (3 * c2 * c1 + 1) ** (-1.0 / ledger.theta_bar),
            rel=1e-14)
        assert ledger.rho == pytest.approx(
            ledger.rho0 / (1 + 2 * c2) ** (1.0 / ledger.theta), rel=1e-14)
        # the worked eq. (6) arithmetic at delta = 2**-10:
        # 19**(-1/0.792) = exp(-1.262626*2.944439) = 0.0242891
        rho0 = (2.0 ** -10) * 19.0 ** (-1.0 / 0.792)
        assert rho0 == pytest.approx(2.0 ** -10 * 0.0242891, rel=1e-5)


class TestDerivedConstants:
    def test_series_against_partial_sums(self, ledger):
        omega, omega_hat = ledger.omega, ledger.omega_hat
        c1, c2, c3 = ledger.c1_reg, ledger.c2_proj, ledger.c3_reg
        n = np.arange(10000)
        l1_sum = c2 + float(np.sum(3 * c2 * c1 * np.exp(omega * n)))
        assert ledger.l1 == pytest.approx(l1_sum, rel=1e-10)
        k1_sum = float(np.sum(
            c3 * (ledger.delta ** ledger.theta_bar
                  * np.exp(omega_hat * n)) ** ledger.beta))
        assert ledger.k1 == pytest.approx(k1_sum, rel=1e-10)
        i = np.arange(1, 10001)
        k2_sum = math.exp(float(np.sum(
            c3 * ledger.l1 ** ledger.beta
            * np.exp(ledger.kappa_bar * ledger.theta_bar * ledger.beta * i))))
        assert ledger.k2 == pytest.approx(k2_sum, rel=1e-10)

    def test_k2_worked_example(self):
        # C3 = 1, L1 = 10, beta = 0.8, theta_bar = 0.792, kappa_bar = -1.36629
        rate = -1.36629 * 0.792 * 0.8
        i = np.arange(1, 10001)
        expected = math.exp(float(np.sum(10 ** 0.8 * np.exp(rate * i))))
        q = math.exp(rate)
        closed = math.exp(10 ** 0.8 * q / (1 - q))
        assert closed == pytest.approx(expected, rel=1e-10)
        assert rate == pytest.approx(-0.86568, abs=5e-5)

    def test_c0_worked_example(self, ledger):
        assert ledger.c0_step4 == pytest.approx(math.log(2.0) * 1.8 + 1.0,
                                                rel=1e-15)
        assert ledger.c0_step4 == pytest.approx(2.24766, abs=5e-6)

    def test_a0_and_alpha_bar(self, ledger):
        adj = ledger.adjusted
        eps4 = ledger.step4_epsilon
        a0 = max(
            float(np.max((adj.kappa - adj.gamma_hat) / adj.kappa)),
            float(np.max((ledger.theta_bar * adj.kappa
                          - ledger.beta * adj.gamma_hat - eps4)
                         / (ledger.beta * adj.kappa))),
            float(np.max((adj.kappa * ledger.theta_bar
                          - ledger.c0_step4 - eps4)
                         / (ledger.theta_bar * adj.kappa * ledger.beta))))
        assert ledger.a0 == pytest.approx(a0, rel=1e-14)
        assert ledger.a0 > 1.0
        assert 0.0 < ledger.alpha_bar < 1.0
        assert ledger.alpha_bar == pytest.approx(
            min(float(np.min((adj.kappa - adj.gamma) / (a0 * adj.kappa))),
                float(np.min((ledger.theta * adj.kappa
                              + 1.5 * (adj.gamma_hat - adj.gamma))
                             / (adj.kappa * a0))),
                ledger.theta_bar / a0), rel=1e-14)

    def test_divergent_series_guard(self, ledger):
        with pytest.raises(DivergentSeries):
            derived_constants(ledger.adjusted, ledger.theta, ledger.theta_bar,
                              ledger.beta, ledger.alpha, omega=0.1,
                              omega_hat=ledger.omega_hat,
                              kappa_bar=ledger.kappa_bar, delta=ledger.delta,
                              c1=2.0, c2=3.0, c3=1.0)


class TestLedgerGlobal:
    def test_margins_positive(self, ledger):
        margins = ledger.inequality_margins()
        assert all(v > 0.0 for v in margins.values()), margins

    def test_deterministic(self, certificate):
        a = derive_ledger(certificate, beta=0.8)
        b = derive_ledger(certificate, beta=0.8)
        assert a.to_json() == b.to_json()

    def test_json_keys(self, ledger):
        d = ledger.to_dict()
        for key in ("theta_bar", "omega_hat", "kappa_bar", "alpha_bar",
                    "L1", "K1", "K2", "a0", "c0", "rho0"):
            assert key in d

    def test_monotone_in_eps_prime(self):
        rng = np.random.default_rng(23)
        for _ in range(100):
            sgap = rng.uniform(0.3, 2.0)
            spread = rng.uniform(0.0, 0.05)
            kappa = -rng.uniform(0.8, 2.0)
            cert = make_cert(eta=kappa - rng.uniform(0.01, 0.3), kappa=kappa,
                             gamma=-spread / 2, gamma_hat=spread / 2,
                             kappa_hat=kappa + sgap + 2.0,
                             eta_hat=kappa + sgap + 2.3, mu=6.0)
            ep = select_epsilon_prime(cert)
            for frac in (1.0, 0.5, 0.25):
                adj_big = AdjustedExponents.from_certificate(cert, ep * frac)
                adj_small = AdjustedExponents.from_certificate(
                    cert, ep * frac / 2)
                bound = lambda a: min(
                    float(np.min((a.kappa - a.gamma) / a.eta)),
                    float(np.min((a.kappa_hat - a.gamma_hat) / a.eta_hat)))
                ratio = lambda a: float(
                    np.max((a.gamma_hat - a.gamma) / (-a.kappa)))
                assert bound(adj_small) >= bound(adj_big) - 1e-12
                assert ratio(adj_small) <= ratio(adj_big) + 1e-12


class TestBunchingAuditor:
    def test_pass_example(self):
        data = PartiallyHyperbolicSpectralData(
            nu=0.25, nu_hat=0.25, gamma=0.98, gamma_hat=0.98,
            mu=0.2, mu_hat=0.2, beta=0.8)
        verdict = audit_center_bunching(data)
        assert isinstance(verdict, BunchingVerdict)
        cap = math.log(0.25 / 0.98) / math.log(0.2)
        assert cap == pytest.approx(0.84880, abs=5e-5)
        assert verdict.theta_bar == pytest.approx(0.99 * 0.8, abs=1e-12)
        assert verdict.passed
        lhs = 0.25 ** verdict.theta
        assert verdict.worst_margin == pytest.approx(0.98 * 0.98 - lhs,
                                                     abs=1e-12)

    def test_isometric_center_passes(self):
        data = PartiallyHyperbolicSpectralData(
            nu=0.25, nu_hat=0.25, gamma=1.0, gamma_hat=1.0,
            mu=0.2, mu_hat=0.2, beta=0.8)
        verdict = audit_center_bunching(data)
        assert verdict.passed
        assert verdict.worst_margin > 0.0

    def test_non_bunched_control_fails_with_negative_margin(self):
        data = PartiallyHyperbolicSpectralData(
            nu=0.9, nu_hat=0.9, gamma=0.92, gamma_hat=0.92,
            mu=0.85, mu_hat=0.85, beta=0.8)
        verdict = audit_center_bunching(data)
        assert not verdict.passed
        assert verdict.worst_margin < 0.0

    def test_ordering_violated(self):
        data = PartiallyHyperbolicSpectralData(
            nu=0.9, nu_hat=0.9, gamma=0.5, gamma_hat=0.5,
            mu=0.2, mu_hat=0.2, beta=0.8)
        with pytest.raises(OrderingViolated):
            audit_center_bunching(data)

    def test_order_independence(self):
        rng = np.random.default_rng(31)
        nu = rng.uniform(0.2, 0.3, 64)
        data = PartiallyHyperbolicSpectralData(
            nu=nu, nu_hat=nu[::-1].copy(), gamma=np.full(64, 0.97),
            gamma_hat=np.full(64, 0.96), mu=np.full(64, 0.15),
            mu_hat=np.full(64, 0.15), beta=0.8)
        v1 = audit_center_bunching(data)
        perm = rng.permutation(64)
        data2 = PartiallyHyperbolicSpectralData(
            nu=nu[perm], nu_hat=nu[::-1][perm].copy(),
            gamma=np.full(64, 0.97), gamma_hat=np.full(64, 0.96),
            mu=np.full(64, 0.15), mu_hat=np.full(64, 0.15), beta=0.8)
        v2 = audit_center_bunching(data2)
        assert v1.passed == v2.passed
        assert v1.worst_margin == pytest.approx(v2.worst_margin, rel=1e-14)
