"""Derivation and audit of every constant in the estimate chain.

From a spectral certificate and a Holder exponent ``beta`` this module
selects the slack ``eps'``, the adjusted exponents, the Holder / bunching
exponents, the admissible radii, and the series constants, and re-verifies
each selection against the defining inequalities.  It also houses the
center-bunching auditor for point-dependent spectral data.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (BunchingInfeasible, DegenerateGaps, DivergentSeries,
                     HolderInfeasible, Infeasible, NoAdmissibleDelta,
                     OrderingViolated)
from .spectral import SpectralCertificate

_DELTA_SCAN_MAX = 200   # smallest dyadic radius tried is 2**-200


def select_epsilon_prime(cert: SpectralCertificate,
                         override: float | None = None) -> float:
    """Maximal admissible slack inf{gaps, 1}/100, or a smaller override."""
    bound = min(cert.gap, 1.0) / 100.0
    if bound <= 0.0:
        raise DegenerateGaps("certificate gaps are not strictly positive")
    if override is None:
        return bound
    if not 0.0 < override <= bound:
        raise DegenerateGaps(
            f"override {override} outside (0, {bound}]")
    return float(override)


@dataclass(frozen=True)
class AdjustedExponents:
    """Certificate exponents shifted by 2*eps' toward the interior."""

    eps_prime: float
    kappa: np.ndarray
    kappa_hat: np.ndarray
    eta: np.ndarray
    eta_hat: np.ndarray
    gamma: np.ndarray
    gamma_hat: np.ndarray

    @property
    def eps(self) -> float:
        return 4.0 * self.eps_prime

    @classmethod
    def from_certificate(cls, cert: SpectralCertificate,
                         eps_prime: float) -> "AdjustedExponents":
        e = eps_prime
        return cls(e,
                   kappa=cert.kappa_p + 2 * e,
                   kappa_hat=cert.kappa_hat_p - 2 * e,
                   eta=cert.eta_p - 2 * e,
                   eta_hat=cert.eta_hat_p + 2 * e,
                   gamma=cert.gamma_p - 2 * e,
                   gamma_hat=cert.gamma_hat_p + 2 * e)


def select_holder_exponents(adj: AdjustedExponents, beta: float):
    """Pick (theta_bar, theta) against the regularity/bunching inequalities."""
    if not 0.0 < beta < 1.0:
        raise HolderInfeasible("beta must lie in (0, 1)")
    bound_s = np.min((adj.kappa - adj.gamma) / adj.eta)
    bound_u = np.min((adj.kappa_hat - adj.gamma_hat) / adj.eta_hat)
    feasible = min(float(bound_s), float(bound_u))
    if feasible <= 0.0:
        raise HolderInfeasible("no admissible theta_bar in (0, beta)")
    theta_bar = min(0.99 * beta, 0.99 * feasible)
    theta = beta * theta_bar
    # coarse bunching: sup exp(beta*kappa - kappa*theta - beta*gamma) < 1
    coarse = np.max(beta * adj.kappa - adj.kappa * theta - beta * adj.gamma)
    if not coarse < 0.0:
        raise HolderInfeasible(
            f"coarse bunching fails at theta=beta*theta_bar (sup {coarse:.3e})")
    ratio = np.max((adj.gamma_hat - adj.gamma) / (-adj.kappa))
    if not ratio < theta:
        raise BunchingInfeasible(
            f"sup (gamma_hat-gamma)/(-kappa) = {float(ratio):.6f} >= theta")
    return float(theta_bar), float(theta)


def select_secondary_exponents(adj: AdjustedExponents, theta: float,
                               theta_bar: float, beta: float):
    """Pick (alpha, theta_hat, beta_hat) and the rates (omega, omega_hat, kappa_bar)."""
    ratio_sup = float(np.max((adj.gamma_hat - adj.gamma) / (-adj.kappa)))
    if not ratio_sup < theta:
        raise Infeasible("theta_hat interval is empty")
    theta_hat = 0.5 * (ratio_sup + theta)
    alpha = None
    for j in range(1, 60):
        cand = 2.0 ** (-j)
        if (1.0 + cand) * ratio_sup < theta_hat:
            alpha = cand
            break
    if alpha is None:
        raise Infeasible("no dyadic alpha satisfies the bunching margin")
    lower_bh = float(np.max(theta * adj.kappa / (adj.kappa - adj.gamma)))
    if not lower_bh < beta:
        raise Infeasible("beta_hat interval is empty")
    beta_hat = 0.5 * (lower_bh + beta)
    omega = float(np.max(adj.kappa * theta
                         + (1 + alpha) * (adj.gamma_hat - adj.gamma)))
    omega_hat = float(np.max(adj.kappa * theta_hat
                             + (1 + alpha) * (adj.gamma_hat - adj.gamma)))
    kappa_bar = float(np.max(adj.kappa))
    for name, val in (("omega", omega), ("omega_hat", omega_hat),
                      ("kappa_bar", kappa_bar)):
        if not val < 0.0:
            raise Infeasible(f"{name} = {val:.6f} is not negative")
    if not (1 + alpha) * ratio_sup < theta_hat:
        raise Infeasible("alpha re-verification failed")
    if not lower_bh < beta_hat < beta:
        raise Infeasible("beta_hat re-verification failed")
    return float(alpha), float(theta_hat), float(beta_hat), omega, omega_hat, kappa_bar


def _delta_inequality_margin(delta: float, adj: AdjustedExponents,
                             alpha: float, beta: float, beta_hat: float,
                             c1: float) -> float:
    """min over n of RHS - LHS of the center-spread radius inequality."""
    spread = adj.gamma_hat - adj.gamma
    lhs = 1.0 + np.exp(-spread) * c1 * delta ** (beta - beta_hat)
    rhs = np.exp(alpha * spread)
    return float(np.min(rhs - lhs))


def select_radii(adj: AdjustedExponents, alpha: float, beta_hat: float,
                 beta: float, theta_bar: float, theta: float,
                 c1: float, c2: float):
    """Largest admissible dyadic delta, then rho_0 and rho.

    The empirical session radius R_0 is calibrated separately once a
    dynamics is available (see ``select_R0``).
    """
    delta = None
    for j in range(1, _DELTA_SCAN_MAX + 1):
        cand = 2.0 ** (-j)
        if _delta_inequality_margin(cand, adj, alpha, beta, beta_hat, c1) > 0.0:
            delta = cand
            break
    if delta is None:
        raise NoAdmissibleDelta(
            "center-spread inequality fails down to 2**-200 "
            "(gamma_hat - gamma too small relative to alpha)")
    rho0 = delta * (3.0 * c2 * c1 + 1.0) ** (-1.0 / theta_bar)
    rho = rho0 / (1.0 + 2.0 * c2) ** (1.0 / theta)
    return float(delta), float(rho0), float(rho)


def select_R0(rho0: float, rho_per_distance: float) -> float:
    """Largest dyadic R_0 <= 1 with R_0 * sup_pq rho(p,q,0)/d(p,q) <= rho_0."""
    r0 = 1.0
    for _ in range(4000):
        if r0 * rho_per_distance <= rho0:
            return r0
        r0 *= 0.5
    raise Infeasible("no dyadic R_0 satisfies the displacement budget")


def derived_constants(adj: AdjustedExponents, theta: float, theta_bar: float,
                      beta: float, alpha: float, omega: float,
                      omega_hat: float, kappa_bar: float, delta: float,
                      c1: float, c2: float, c3: float,
                      step4_epsilon: float = 0.01):
    """Closed-form series constants and the Step-4 exponents."""
    for name, val in (("omega", omega), ("omega_hat", omega_hat),
                      ("kappa_bar", kappa_bar)):
        if val >= 0.0:
            raise DivergentSeries(f"{name} = {val} >= 0")
    l1 = c2 + 3.0 * c2 * c1 / (1.0 - math.exp(omega))
    k1 = c3 * delta ** (theta_bar * beta) / (1.0 - math.exp(omega_hat * beta))
    q = math.exp(kappa_bar * theta_bar * beta)
    k2 = math.exp(c3 * l1 ** beta * q / (1.0 - q))
    c0 = math.log(c1) * (1.0 + beta) + 1.0
    eps4 = step4_epsilon
    a0 = max(
        float(np.max((adj.kappa - adj.gamma_hat) / adj.kappa)),
        float(np.max((theta_bar * adj.kappa - beta * adj.gamma_hat - eps4)
                     / (beta * adj.kappa))),
        float(np.max((adj.kappa * theta_bar - c0 - eps4)
                     / (theta_bar * adj.kappa * beta))),
    )
    alpha_bar = min(
        float(np.min((adj.kappa - adj.gamma) / (a0 * adj.kappa))),
        float(np.min((theta * adj.kappa
                      + (1 + alpha) * (adj.gamma_hat - adj.gamma))
                     / (adj.kappa * a0))),
        theta_bar / a0,
    )
    if not a0 > 1.0:
        raise Infeasible(f"a0 = {a0} must exceed 1")
    if not 0.0 < alpha_bar < 1.0:
        raise Infeasible(f"alpha_bar = {alpha_bar} outside (0, 1)")
    return l1, k1, k2, c0, a0, alpha_bar


@dataclass
class ConstantsLedger:
    """Every derived constant of the estimate chain, plus its inputs."""

    beta: float
    eps_prime: float
    adjusted: AdjustedExponents
    theta_bar: float
    theta: float
    theta_hat: float
    alpha: float
    beta_hat: float
    omega: float
    omega_hat: float
    kappa_bar: float
    delta: float
    rho0: float
    rho: float
    c0_reg: float      # C_0: Holder constant of Df, Df^-1
    c1_reg: float      # C_1: sphere-bundle constants
    c2_proj: float     # C_2: projection constant
    c3_reg: float      # C_3: Holder constant of log ||Df|| on spheres
    l1: float
    k1: float
    k2: float
    c0_step4: float
    a0: float
    alpha_bar: float
    step4_epsilon: float
    mode: str = "constant"
    n_min: int = 0
    r0: float | None = None
    l2: float | None = None          # taken equal to k2 (proven bound)
    beta_prime: float | None = None  # fitted, not derived
    beta_dprime: float | None = None

    @property
    def eps(self) -> float:
        return 4.0 * self.eps_prime

    # -- index-window sums (the kappa_l^(n) convention) ------------------

    def _value_at(self, arr: np.ndarray, idx: int) -> float:
        count = arr.size
        if self.mode == "constant" or count == 1:
            return float(arr[0])
        if self.mode == "periodic":
            return float(arr[(idx - self.n_min) % count])
        return float(arr[min(max(idx - self.n_min, 0), count - 1)])

    def window_sum(self, which: str, ell: int, n: int) -> float:
        """Sum kappa_{ell+n-1} + ... + kappa_ell (and hatted/gamma variants)."""
        arr = getattr(self.adjusted, which)
        if n == 0:
            return 0.0
        if n > 0:
            return sum(self._value_at(arr, ell + i) for i in range(n))
        return -sum(self._value_at(arr, ell + n + i) for i in range(-n))

    def kappa_sum(self, ell: int, n: int) -> float:
        return self.window_sum("kappa", ell, n)

    def gamma_sum(self, ell: int, n: int) -> float:
        return self.window_sum("gamma", ell, n)

    def gamma_hat_sum(self, ell: int, n: int) -> float:
        return self.window_sum("gamma_hat", ell, n)

    # -- re-verification --------------------------------------------------

    def inequality_margins(self) -> dict[str, float]:
        """Strict margins of the five displayed inequality families."""
        adj = self.adjusted
        m = {}
        m["eq1_stable"] = float(np.min(
            adj.eta * self.theta_bar + adj.gamma - adj.kappa))
        m["eq1_unstable"] = float(np.min(
            adj.kappa_hat - adj.gamma_hat - adj.eta_hat * self.theta_bar))
        m["eq2_coarse"] = float(np.min(
            adj.kappa * self.theta + self.beta * adj.gamma
            - self.beta * adj.kappa))
        m["eq3_bunching"] = self.theta - float(np.max(
            (adj.gamma_hat - adj.gamma) / (-adj.kappa)))
        m["eq4_theta_hat"] = float(np.min(
            self.theta_hat
            - (1 + self.alpha) * (adj.gamma_hat - adj.gamma) / (-adj.kappa)))
        m["eq4_beta_hat"] = float(np.min(
            self.beta_hat - self.theta * adj.kappa / (adj.kappa - adj.gamma)))
        m["eq5_delta"] = _delta_inequality_margin(
            self.delta, adj, self.alpha, self.beta, self.beta_hat, self.c1_reg)
        return m

    def verify(self) -> None:
        margins = self.inequality_margins()
        bad = {k: v for k, v in margins.items() if not v > 0.0}
        if bad:
            raise Infeasible(f"ledger re-verification failed: {bad}")
        if not (0.0 < self.theta_hat < self.theta <= self.theta_bar
                < self.beta < 1.0):
            raise Infeasible("exponent chain ordering violated")
        if not self.theta < self.beta_hat < self.beta:
            raise Infeasible("beta_hat outside (theta, beta)")
        if not (self.omega < 0.0 and self.omega_hat < 0.0
                and self.kappa_bar < 0.0):
            raise Infeasible("rate constants must be negative")
        if not 0.0 < self.alpha_bar < 1.0:
            raise Infeasible("alpha_bar outside (0, 1)")
        if not (self.c1_reg >= self.c0_reg > 1.0 and self.c2_proj >= 1.0):
            raise Infeasible("regularity constants violate C1 >= C0 > 1, C2 >= 1")
        if not (self.l1 >= self.c2_proj and self.k2 >= 1.0):
            raise Infeasible("series constants violate L1 >= C2, K2 >= 1")

    def to_dict(self) -> dict:
        d = {
            "beta": self.beta,
            "eps_prime": self.eps_prime,
            "eps": self.eps,
            "theta_bar": self.theta_bar,
            "theta": self.theta,
            "theta_hat": self.theta_hat,
            "alpha": self.alpha,
            "beta_hat": self.beta_hat,
            "omega": self.omega,
            "omega_hat": self.omega_hat,
            "kappa_bar": self.kappa_bar,
            "delta": self.delta,
            "rho0": self.rho0,
            "rho": self.rho,
            "C0": self.c0_reg,
            "C1": self.c1_reg,
            "C2": self.c2_proj,
            "C3": self.c3_reg,
            "L1": self.l1,
            "K1": self.k1,
            "K2": self.k2,
            "c0": self.c0_step4,
            "a0": self.a0,
            "alpha_bar": self.alpha_bar,
            "step4_epsilon": self.step4_epsilon,
            "R0": self.r0,
            "L2": self.l2,
            "beta_prime": self.beta_prime,
            "beta_dprime": self.beta_dprime,
        }
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


# Reference regularity constants used when deriving a ledger for a bare
# cocycle (no dynamics attached); sessions with a concrete dynamics verify
# that these dominate the measured values.
REFERENCE_C0 = 2.0
REFERENCE_C1 = 2.0
REFERENCE_C2 = 3.0
REFERENCE_C3 = 1.0


def derive_ledger(cert: SpectralCertificate, beta: float,
                  eps_prime: float | None = None,
                  c0: float = REFERENCE_C0, c1: float = REFERENCE_C1,
                  c2: float = REFERENCE_C2, c3: float = REFERENCE_C3,
                  step4_epsilon: float = 0.01, mode: str = "constant",
                  n_min: int = 0) -> ConstantsLedger:
    """Run the full selection chain and return a verified ledger."""
    cert.validate()
    ep = select_epsilon_prime(cert, override=eps_prime)
    adj = AdjustedExponents.from_certificate(cert, ep)
    theta_bar, theta = select_holder_exponents(adj, beta)
    alpha, theta_hat, beta_hat, omega, omega_hat, kappa_bar = \
        select_secondary_exponents(adj, theta, theta_bar, beta)
    delta, rho0, rho = select_radii(adj, alpha, beta_hat, beta, theta_bar,
                                    theta, c1, c2)
    l1, k1, k2, c0s, a0, alpha_bar = derived_constants(
        adj, theta, theta_bar, beta, alpha, omega, omega_hat, kappa_bar,
        delta, c1, c2, c3, step4_epsilon)
    ledger = ConstantsLedger(
        beta=beta, eps_prime=ep, adjusted=adj, theta_bar=theta_bar,
        theta=theta, theta_hat=theta_hat, alpha=alpha, beta_hat=beta_hat,
        omega=omega, omega_hat=omega_hat, kappa_bar=kappa_bar, delta=delta,
        rho0=rho0, rho=rho, c0_reg=c0, c1_reg=c1, c2_proj=c2, c3_reg=c3,
        l1=l1, k1=k1, k2=k2, c0_step4=c0s, a0=a0, alpha_bar=alpha_bar,
        step4_epsilon=step4_epsilon, mode=mode, n_min=n_min, l2=k2)
    ledger.verify()
    return ledger


# -- center bunching auditor ---------------------------------------------


@dataclass
class PartiallyHyperbolicSpectralData:
    """Sampled point-dependent rates of a partially hyperbolic splitting.

    Conventions follow the splitting sandwich: the stable block lies in
    [mu, nu], the center block in [gamma, gamma_hat^-1], the unstable
    block in [nu_hat^-1, mu_hat^-1]; nu, nu_hat < 1 and gamma_hat <= gamma.
    """

    nu: np.ndarray
    nu_hat: np.ndarray
    gamma: np.ndarray
    gamma_hat: np.ndarray
    mu: np.ndarray
    mu_hat: np.ndarray
    beta: float

    def __post_init__(self):
        arrays = [np.atleast_1d(np.asarray(a, dtype=float)) for a in
                  (self.nu, self.nu_hat, self.gamma, self.gamma_hat,
                   self.mu, self.mu_hat)]
        n = max(a.size for a in arrays)
        self.nu, self.nu_hat, self.gamma, self.gamma_hat, self.mu, \
            self.mu_hat = [np.full(n, a[0]) if a.size == 1 else a
                           for a in arrays]

    def check_ordering(self) -> None:
        # center-side comparisons are non-strict so an exactly isometric
        # center (gamma = gamma_hat = 1) stays admissible
        ok = ((self.mu < self.nu) & (self.nu < self.gamma)
              & (self.gamma <= 1.0 / self.gamma_hat)
              & (1.0 / self.gamma_hat < 1.0 / self.nu_hat)
              & (1.0 / self.nu_hat < 1.0 / self.mu_hat)
              & (self.nu < 1.0) & (self.nu_hat < 1.0)
              & (self.gamma_hat <= self.gamma))
        if not np.all(ok):
            bad = int(np.argmin(ok))
            raise OrderingViolated(
                f"partial-hyperbolicity chain fails at sample {bad}")


@dataclass
class BunchingVerdict:
    passed: bool
    worst_margin: float
    theta_bar: float
    theta: float
    eq7_ok: bool
    lhs: np.ndarray = field(repr=False, default=None)
    rhs: np.ndarray = field(repr=False, default=None)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "worst_margin": self.worst_margin,
                "theta_bar": self.theta_bar, "theta": self.theta,
                "eq7_ok": self.eq7_ok}


def audit_center_bunching(data: PartiallyHyperbolicSpectralData) -> BunchingVerdict:
    """Strong center bunching audit for sampled spectral data.

    theta_bar is capped per sample by nu/gamma < mu^theta_bar and its
    hatted twin; theta = beta * theta_bar.  The bunching comparison reads
    max(nu, nu_hat)^theta against the center non-conformality gamma*gamma_hat.
    """
    data.check_ordering()
    cap_s = np.log(data.nu / data.gamma) / np.log(data.mu)
    cap_u = np.log(data.nu_hat / data.gamma_hat) / np.log(data.mu_hat)
    cap = min(float(np.min(cap_s)), float(np.min(cap_u)))
    theta_bar = 0.99 * min(cap, data.beta)
    theta = data.beta * theta_bar
    # required for the Holder scheme: nu^theta >= (nu/gamma)^beta, hatted too
    eq7 = np.all(data.nu ** theta >= (data.nu / data.gamma) ** data.beta) and \
        np.all(data.nu_hat ** theta >= (data.nu_hat / data.gamma_hat) ** data.beta)
    lhs = np.maximum(data.nu, data.nu_hat) ** theta
    rhs = data.gamma * data.gamma_hat
    margin = rhs - lhs
    return BunchingVerdict(
        passed=bool(np.all(margin >= 0.0)) and bool(eq7),
        worst_margin=float(np.min(margin)),
        theta_bar=float(theta_bar), theta=float(theta),
        eq7_ok=bool(eq7), lhs=lhs, rhs=rhs)
