"""Stable holonomies between center leaves, with full diagnostics.

Two computation regimes share one session object:

* graph regime (separations above ~1e-8): leaves from the graph
  transform, projections and holonomies by direct graph solves.  Used
  for the direct cross-checks (finite differences, disc holonomies,
  composition laws).

* response regime: the base-point offset ``q - p`` is factored as
  ``sigma * e_s(p)`` and every quantity is computed to first order in
  ``sigma`` as an explicit response along the sample orbits.  Because the
  frame line fields are exactly invariant, all transports reduce to
  signed scalar products of per-step rates, which keeps every diagnostic
  at full relative precision down to the radii demanded by the constants
  ledger (far below the absolute resolution of floating point).  The
  session certifies a posteriori that sigma satisfies the displacement
  budget rho(p,q,0) <= rho_0.

Tolerances and bound constants come from the attached ConstantsLedger.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .dynamics import DiffeoSequence, SphereVector
from .errors import (AmbiguousIntersection, ConfigInvalid,
                     DistortionViolation, InsufficientScales, NoIntersection,
                     NotCauchy)
from .ledger import ConstantsLedger
from .linalg import unit
from .manifolds import GraphManifold, compute_manifold
from .orbits import (OrbitEnsemble, ec_directional_derivative,
                     frame_fields_at, log_rate_gradient)

_FREEZE_DEPTH = 38
_FIELD_FD_DEPTH = 20
_GRAD_CUTOFF = 26      # modal weights below 0.25**26 are invisible


@dataclass
class AnchoredPoint:
    """A point stored as base + scale * offset, exact at tiny scales."""

    base: np.ndarray
    offset: np.ndarray
    scale: float

    def absolute(self) -> np.ndarray:
        return self.base + self.scale * self.offset


def fit_loglog(x: np.ndarray, y: np.ndarray):
    """Least-squares slope/intercept/R^2 of log y against log x."""
    lx, ly = np.log(x), np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    pred = slope * lx + intercept
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - np.mean(ly)) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return float(slope), float(np.exp(intercept)), r2


def fit_decay_rate(values: np.ndarray):
    """Per-step log-slope of a positive decaying sequence."""
    keep = values > 0.0
    n = np.arange(len(values), dtype=float)[keep]
    if keep.sum() < 3:
        return float("nan"), float("nan")
    slope, _ = np.polyfit(n, np.log(values[keep]), 1)
    ratios = values[1:][keep[1:] & keep[:-1]] / values[:-1][keep[1:] & keep[:-1]]
    return float(slope), float(np.max(ratios)) if ratios.size else float("nan")


# ---------------------------------------------------------------------------
# transversal discs


class TransversalDisc:
    """An embedded disc given as a graph s = D(c, u) with slope <= 1/3."""

    def __init__(self, center: np.ndarray, func=None, grad=None):
        self.center = np.asarray(center, dtype=float)
        self._func = func or (lambda c, u: np.zeros_like(c) + self.center[0])
        self._grad = grad or (lambda c, u: np.zeros((np.size(c), 2)))
        self.check_transversality()

    def value(self, c, u):
        return self._func(np.asarray(c, dtype=float), np.asarray(u, dtype=float))

    def gradient(self, c, u):
        return self._grad(np.asarray(c, dtype=float), np.asarray(u, dtype=float))

    def point(self, c, u) -> np.ndarray:
        c = np.asarray(c, dtype=float)
        u = np.asarray(u, dtype=float)
        s = self.value(c, u)
        return np.stack([s, c, u], axis=-1)

    def check_transversality(self):
        cs = self.center[1] + np.linspace(-0.5, 0.5, 21)
        us = self.center[2] + np.linspace(-0.5, 0.5, 21)
        cg, ug = np.meshgrid(cs, us)
        grads = self.gradient(cg.ravel(), ug.ravel())
        norms = np.linalg.norm(grads, axis=-1)
        if float(np.max(norms)) > 1.0 / 3.0:
            raise AmbiguousIntersection(
                "disc violates the 3:1 transversality budget")

    @classmethod
    def from_cu_leaf(cls, leaf: GraphManifold) -> "TransversalDisc":
        def func(c, u):
            pts = np.stack([c, u], axis=-1)
            return leaf.interp(pts)[..., 0]

        def grad(c, u):
            pts = np.stack([c, u], axis=-1)
            _, dv = leaf.interp(pts, deriv=True)
            return dv[:, 0, :]

        return cls(leaf.base, func, grad)


def graph_leaf_intersection(leaf_cu: GraphManifold, leaf_s: GraphManifold,
                            tol: float = 1e-8) -> np.ndarray:
    """Intersection of a cu-graph with an s-graph; multi-start guarded.

    The solve is the scalar fixed point s = G_cu(G_s(s)), a contraction
    with factor bounded by the product of the two graph slopes (<= 1/9).
    """
    z0 = leaf_s.base
    sols = []
    for s0 in (z0[0], z0[0] + 0.05, z0[0] - 0.05):
        s = float(s0)
        ok = True
        for _ in range(120):
            cu = leaf_s.interp(s)               # (c, u) on the s-leaf
            if abs(cu[0] - leaf_cu.base[1]) > 2.0:
                ok = False
                break
            new_s = float(leaf_cu.interp(cu[None, :])[0, 0])
            if abs(new_s - s) < 1e-14:
                s = new_s
                break
            s = new_s
        if ok:
            sols.append(s)
    if not sols:
        raise NoIntersection("holonomy solve left the leaf boxes")
    spread = max(sols) - min(sols)
    if spread > 10.0 * tol:
        raise AmbiguousIntersection(
            f"intersection solutions differ by {spread:.3e}")
    s = sols[0]
    cu = leaf_s.interp(s)
    return np.array([s, cu[0], cu[1]])


def exact_holonomy_between(seq: DiffeoSequence, q: np.ndarray, z: np.ndarray,
                           tol: float = 1e-8) -> np.ndarray:
    """Stable holonomy image of ``z`` on the center leaf of ``q``.

    Standalone graph-regime solve for arbitrary base pairs; used by the
    composition and inversion laws where q is not sigma-parameterized.
    """
    leaf_cu = compute_manifold(seq, "cu", 0, np.asarray(q, dtype=float),
                               tol=tol)
    leaf_s = compute_manifold(seq, "s", 0, np.asarray(z, dtype=float),
                              tol=tol)
    return graph_leaf_intersection(leaf_cu, leaf_s, tol=tol)


# ---------------------------------------------------------------------------
# convergence diagnostics container


@dataclass
class ConvergenceDiagnostics:
    """Per-depth records of the approximation scheme, with fits."""

    n: np.ndarray
    sup_c0_gap: np.ndarray
    sup_proj_gap: np.ndarray
    sup_delta_gap: np.ndarray
    bound_c0: np.ndarray
    bound_proj: np.ndarray
    bound_delta: np.ndarray
    c0_slope: float = float("nan")
    proj_ratio: float = float("nan")
    delta_ratio: float = float("nan")
    holder_rows: list = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    def to_json(self) -> str:
        sentinel = lambda v: v if np.isfinite(v) else "exact"
        return json.dumps({
            "c0_slope": sentinel(self.c0_slope),
            "proj_ratio": sentinel(self.proj_ratio),
            "delta_ratio": sentinel(self.delta_ratio),
            "holder_fits": self.holder_rows,
            "notes": self.notes,
        }, indent=2, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["n", "sup_c0_gap", "sup_proj_gap", "sup_delta_gap",
                         "bound_c0", "bound_proj", "bound_delta"])
        for i in range(len(self.n)):
            writer.writerow([int(self.n[i])]
                            + [repr(float(a[i])) for a in
                               (self.sup_c0_gap, self.sup_proj_gap,
                                self.sup_delta_gap, self.bound_c0,
                                self.bound_proj, self.bound_delta)])
        return buf.getvalue()


# ---------------------------------------------------------------------------
# the session


class HolonomySession:
    """A (p, q, 0) stable-holonomy problem with q = p + sigma * e_s(p)."""

    def __init__(self, seq: DiffeoSequence, ledger: ConstantsLedger,
                 p: np.ndarray, sigma: float | None = None,
                 n_samples: int = 48, n_max: int = 60, seed: int = 0,
                 strict: bool = True, tol: float = 1e-8):
        self.seq = seq
        self.ledger = ledger
        self.p = np.asarray(p, dtype=float)
        self.n_max = int(n_max)
        self.tol = float(tol)
        self.seed = int(seed)
        self.strict = strict
        rng = np.random.default_rng(seed)
        # domain disc W^c(p, 1), sampled through the graph leaf
        self.center_leaf = compute_manifold(seq, "c", 0, self.p, tol=tol)
        offs = np.concatenate([np.linspace(-0.95, 0.95, n_samples - 8),
                               rng.uniform(-0.95, 0.95, 8)])
        self.sample_coords = self.p[1] + offs
        self.samples = self.center_leaf.point(self.sample_coords)
        # orbit machinery
        self.p_ens = OrbitEnsemble(seq, self.p[None, :], back=_FREEZE_DEPTH + 4,
                                   fwd=self.n_max + _FREEZE_DEPTH + 4)
        self.x_ens = OrbitEnsemble(seq, self.samples,
                                   back=_FREEZE_DEPTH + 4,
                                   fwd=self.n_max + _FREEZE_DEPTH + 4)
        self.e_s_p = self.p_ens.e_s[self.p_ens._slot(0)][0]
        self._responses_built = False
        self._leaf_cache: dict = {}
        if sigma is None:
            sigma = self.calibrate_sigma()
        self.sigma = float(sigma)
        if strict:
            self.certify_displacement()
            from .ledger import select_R0
            r0 = select_R0(self.ledger.rho0, 1.5 * self.response_sup())
            if self.ledger.r0 is None or r0 < self.ledger.r0:
                self.ledger.r0 = r0

    # -- response pipeline --------------------------------------------------

    def _build_responses(self):
        if self._responses_built:
            return
        ens, pens = self.x_ens, self.p_ens
        count, nmax = ens.count, self.n_max
        # frozen backward product R_b(n) and the projection responses
        self.pi_resp = np.zeros((nmax + 1, count, 3))
        self.pi_coeff = np.zeros((nmax + 1, count, 3))
        ax_s = np.array([1.0, 0.0, 0.0])
        ax_u = np.array([0.0, 0.0, 1.0])
        for n in range(nmax + 1):
            rb = self._frozen_backward_product(n)
            fr = ens.frame(n)
            ces = np.linalg.solve(fr, np.tile(ax_s, (count, 1))[..., None])[..., 0]
            ceu = np.linalg.solve(fr, np.tile(ax_u, (count, 1))[..., None])[..., 0]
            det = ces[:, 0] * ceu[:, 2] - ceu[:, 0] * ces[:, 2]
            a = (rb * ceu[:, 2]) / det
            b = (-rb * ces[:, 2]) / det
            self.pi_resp[n] = a[:, None] * ax_s + b[:, None] * ax_u
            self.pi_coeff[n] = (a[:, None] * ces + b[:, None] * ceu)
        # h-response scalar t(x): pure stable-mode matching at n = 0
        self.t_resp = self._frozen_backward_product(0)
        # modal rate products along sample orbits
        self.Lam_s = np.ones((nmax + 2, count))
        self.Lam_c = np.ones((nmax + 2, count))
        self.Lam_u = np.ones((nmax + 2, count))
        for j in range(nmax + 1):
            self.Lam_s[j + 1] = self.Lam_s[j] * ens.rate("s", j)
            self.Lam_c[j + 1] = self.Lam_c[j] * ens.rate("c", j)
            self.Lam_u[j + 1] = self.Lam_u[j] * ens.rate("u", j)
        # center-mode increment scalars of the approximation scheme
        self.inc_scalar = np.zeros((nmax, count))
        self.h_n_coeffs = np.zeros((nmax + 1, count, 3))
        for n in range(nmax + 1):
            self.h_n_coeffs[n] = self.pi_coeff[n] / np.stack(
                [self.Lam_s[n], self.Lam_c[n], self.Lam_u[n]], axis=1)
        for n in range(nmax):
            pulled = self.pi_coeff[n + 1] / np.stack(
                [ens.rate("s", n), ens.rate("c", n), ens.rate("u", n)], axis=1)
            b_c = pulled[:, 1] - self.pi_coeff[n][:, 1]
            self.inc_scalar[n] = b_c / self.Lam_c[n]
        # field gradients driving the derivative diagnostics
        self._build_field_gradients()
        self._responses_built = True

    def _frozen_backward_product(self, n: int) -> np.ndarray:
        """lim_m  Lam_s^p(0 -> n-m) * Lam_s^x(n-m -> n).

        Every depth is truncated at the same absolute backward time -M,
        which makes the conjugation identity between approximant depths
        exact by construction; the remaining truncation is a common
        factor on all responses of the session (reported separately).
        """
        ens, pens = self.x_ens, self.p_ens
        pprod = 1.0
        for j in range(0, n):
            pprod = pprod * pens.rate("s", j)[0]
        # walking back to absolute time -M multiplies by lam^x / lam^p
        val = np.full(ens.count, pprod)
        for j in range(n - 1, -_FREEZE_DEPTH - 1, -1):
            val = val * ens.rate("s", j) / pens.rate("s", j)[0]
        return val

    def truncation_envelope(self) -> float:
        """Relative drift of the limit response over the deepest 12 steps."""
        ens, pens = self.x_ens, self.p_ens
        val = np.ones(ens.count)
        for j in range(-_FREEZE_DEPTH - 4, -_FREEZE_DEPTH + 8):
            val = val * ens.rate("s", j) / pens.rate("s", j)[0]
        return float(np.max(np.abs(val - 1.0)))

    def _build_field_gradients(self):
        ens = self.x_ens
        count = ens.count
        cutoff = min(_GRAD_CUTOFF, self.n_max)
        self.grad_ell_s = np.zeros((cutoff, count))
        self.grad_ell_c = np.zeros((cutoff, count))
        for n in range(cutoff):
            pts = ens.point(n)
            es = ens.e_s[ens._slot(n)]
            ec = ens.e_c[ens._slot(n)]
            self.grad_ell_s[n] = log_rate_gradient(
                self.seq, n, pts, es, depth=_FIELD_FD_DEPTH)
            self.grad_ell_c[n] = log_rate_gradient(
                self.seq, n, pts, ec, depth=_FIELD_FD_DEPTH)
        x0 = ens.point(0)
        es0 = ens.e_s[ens._slot(0)]
        ec0 = ens.e_c[ens._slot(0)]
        self.dec_ds = ec_directional_derivative(self.seq, 0, x0, es0,
                                                depth=_FIELD_FD_DEPTH)
        self.dec_dc = ec_directional_derivative(self.seq, 0, x0, ec0,
                                                depth=_FIELD_FD_DEPTH)

    # -- certified radii -----------------------------------------------------

    def response_sup(self) -> float:
        """sup over the domain of the unit displacement |h(x) - x| / sigma."""
        self._build_responses()
        disp = np.abs(self.t_resp)
        dirn = np.linalg.norm(self.dec_ds * self.t_resp[:, None], axis=1)
        return float(np.max(np.maximum(disp, dirn)))

    def calibrate_sigma(self) -> float:
        """Largest dyadic sigma meeting both radius hypotheses."""
        sup = max(self.response_sup(), 1e-12)
        target = min(self.ledger.rho0, self.ledger.rho) / (1.5 * sup)
        sigma = 1.0
        while sigma > target:
            sigma *= 0.5
        return sigma

    def certify_displacement(self):
        """A posteriori check of rho(p,q,0) <= rho_0 for this session."""
        rho_measured = self.sigma * self.response_sup()
        if rho_measured > self.ledger.rho0:
            raise ConfigInvalid(
                f"session displacement {rho_measured:.3e} exceeds "
                f"rho_0 = {self.ledger.rho0:.3e}; shrink sigma")

    # -- response-regime operations ------------------------------------------

    def holonomy_offsets(self) -> np.ndarray:
        """Unit-sigma offsets h(x) - x for every sample; (N, 3)."""
        self._build_responses()
        es0 = self.x_ens.e_s[self.x_ens._slot(0)]
        return self.t_resp[:, None] * es0

    def holonomy_points(self):
        offs = self.holonomy_offsets()
        return [AnchoredPoint(self.samples[i], offs[i], self.sigma)
                for i in range(len(offs))]

    def projection_offsets(self, n: int) -> np.ndarray:
        """Unit-sigma offsets pi_n(x_n) - x_n; (N, 3)."""
        self._build_responses()
        return self.pi_resp[n]

    def approx_offsets(self, n: int) -> np.ndarray:
        """Unit-sigma offsets h_n(x) - x at their native modal coefficients."""
        self._build_responses()
        fr = self.x_ens.frame(0)
        return np.einsum("nij,nj->ni", fr, self.h_n_coeffs[n])

    def c0_gaps(self) -> np.ndarray:
        """sup over samples of |h_n(x) - h(x)| per depth, absolute units."""
        self._build_responses()
        tails = np.abs(np.cumsum(self.inc_scalar[::-1], axis=0)[::-1])
        sup = np.max(tails, axis=1)
        return np.append(sup, 0.0) * self.sigma

    def sphere_gaps(self) -> np.ndarray:
        """sup_x d((h_n)_* xi, (h_n+1)_* xi) per depth, in absolute units."""
        self._build_responses()
        dir_amp = np.linalg.norm(self.dec_dc, axis=1)
        per = np.abs(self.inc_scalar) * np.maximum(1.0, dir_amp)[None, :]
        return np.max(per, axis=1) * self.sigma

    def delta_gaps(self) -> np.ndarray:
        """sup_x |Delta_n - Delta_n+1| per depth, in absolute units."""
        self._build_responses()
        cutoff = self.grad_ell_s.shape[0]
        out = np.zeros(self.n_max)
        for n in range(self.n_max):
            if n < cutoff:
                per = np.abs(self.grad_ell_s[n]) * np.abs(
                    self.t_resp) * np.abs(self.Lam_s[n])
                out[n] = float(np.max(per))
        return out * self.sigma

    def displacement_check(self):
        """Lemma displacement bound d(xi, h_* xi) <= L1 d(x, h(x))^theta_bar."""
        self._build_responses()
        dx = self.sigma * np.abs(self.t_resp)
        dir_gap = self.sigma * np.linalg.norm(
            self.dec_ds * self.t_resp[:, None], axis=1)
        lhs = np.maximum(dx, dir_gap)
        rhs = self.ledger.l1 * dx ** self.ledger.theta_bar
        return lhs, rhs

    def log_dh_field(self) -> np.ndarray:
        """Unit-sigma response of log |Dh(x) e_c(x)| per sample.

        The moving-orbit offsets rho_j are pure stable mode, so only the
        stable-direction gradients of log ||Df e_c|| contribute.
        """
        self._build_responses()
        cutoff = self.grad_ell_s.shape[0]
        out = np.zeros(self.x_ens.count)
        for j in range(cutoff):
            out -= self.grad_ell_s[j] * self.t_resp * self.Lam_s[j]
        return out

    def dh_response(self) -> np.ndarray:
        """Unit-sigma response of Dh(x) e_c(x); (N, 3)."""
        self._build_responses()
        es0 = self.x_ens.e_s[self.x_ens._slot(0)]
        ec0 = self.x_ens.e_c[self.x_ens._slot(0)]
        norm_part = self.log_dh_field()[:, None] * ec0
        dir_part = self.dec_ds * self.t_resp[:, None]
        return norm_part + dir_part

    def distortion_records(self):
        """Per-depth |log (prod ||Df z_hat|| / prod ||Df z||)| and envelopes.

        The stated interval of the distortion lemma applies for depths
        past n0 where (C2+L1) e^(theta_bar kappa^(n)) <= e^(theta kappa^(n))
        delta^theta_bar; n0 is reported (far beyond desk range for honest
        delta), and a session-scale envelope built from the same proof
        mechanism is checked instead at every depth.
        """
        self._build_responses()
        led = self.ledger
        cutoff = self.grad_ell_s.shape[0]
        tails = np.abs(np.cumsum(self.inc_scalar[::-1], axis=0)[::-1])
        logratio = np.zeros((self.n_max, self.x_ens.count))
        for n in range(self.n_max):
            tail_c = tails[n] if n < self.n_max else 0.0
            acc = np.zeros(self.x_ens.count)
            for i in range(min(n, cutoff)):
                acc += self.grad_ell_c[i] * tail_c * np.abs(self.Lam_c[i])
            logratio[n] = np.abs(acc) * self.sigma
        # depth threshold of the stated lemma interval (closed form for
        # the uniform rate kappa_bar)
        th, thb = led.theta, led.theta_bar
        n0 = int(np.ceil((thb * np.log(led.delta)
                          - np.log(led.c2_proj + led.l1))
                         / ((thb - th) * led.kappa_bar)))
        return logratio, n0

    # -- graph-regime operations ----------------------------------------------

    def initial_projection(self, n: int, z: np.ndarray,
                           sigma: float | None = None) -> np.ndarray:
        """pi_n(z): the point of W^c(q_n) over the center coordinate of z."""
        sigma = self.sigma if sigma is None else sigma
        leaf_q = self.graph_center_leaf_q(sigma, n)
        return self.graph_projection(leaf_q, np.asarray(z, dtype=float))

    def verify_lemma31(self, n_trials: int = 10000, seed: int | None = None):
        from .trials import lemma31_trials
        return lemma31_trials(self.seq, self.ledger, n_trials=n_trials,
                              seed=self.seed if seed is None else seed)

    def verify_step4_claim(self, n_trials: int = 1000,
                           seed: int | None = None):
        from .trials import step4_trials
        return step4_trials(self.seq, self.ledger, n_trials=n_trials,
                            seed=self.seed if seed is None else seed)

    def _leaf(self, star: str, n: int, base: np.ndarray) -> GraphManifold:
        key = (star, n, tuple(np.round(base, 12)))
        if key not in self._leaf_cache:
            self._leaf_cache[key] = compute_manifold(self.seq, star, n, base,
                                                     tol=self.tol)
        return self._leaf_cache[key]

    def graph_center_leaf_q(self, sigma: float, n: int = 0) -> GraphManifold:
        q = self.p + sigma * self.e_s_p
        qn = self.seq.iterate(0, n, q)
        return self._leaf("c", n, qn)

    def graph_projection(self, leaf_q: GraphManifold, z: np.ndarray):
        """pi(z): the point of W^c(q_n) directly over the c-coordinate of z."""
        z = np.asarray(z, dtype=float)
        c = z[1]
        if abs(c - leaf_q.base[1]) > 2.0:
            raise NoIntersection("projection target leaves the graph box")
        return leaf_q.point(c)

    def graph_exact_holonomy(self, sigma: float, z: np.ndarray,
                             check_center: bool = True):
        """h(z) = W^cu(q) cap W^s(z) by a nodewise two-graph solve."""
        q = self.p + sigma * self.e_s_p
        out = graph_leaf_intersection(self._leaf("cu", 0, q),
                                      self._leaf("s", 0,
                                                 np.asarray(z, dtype=float)),
                                      tol=self.tol)
        if check_center:
            # postcondition: the image lies on W^c(q) (subfoliation)
            leaf_c_q = self.graph_center_leaf_q(sigma)
            if float(leaf_c_q.transversal_distance(out[None, :])[0]) \
                    > 10 * self.tol:
                raise NoIntersection("holonomy image strays from W^c(q)")
        return out

    def graph_approximate_holonomy(self, sigma: float, n: int,
                                   x: np.ndarray) -> np.ndarray:
        """h_n(x) = f^(-n)(pi_n(f^(n) x)) with the graph projection."""
        xn = self.seq.iterate(0, n, np.asarray(x, dtype=float))
        leaf_q = self.graph_center_leaf_q(sigma, n)
        proj = self.graph_projection(leaf_q, xn)
        return self.seq.iterate(n, -n, proj)

    def graph_sphere_approximant(self, sigma: float, n: int,
                                 xi: SphereVector) -> SphereVector:
        """(h_n)_* xi through the graph projection's derivative."""
        img = self.seq.pushforward_iterated(0, n, xi)
        leaf_q = self.graph_center_leaf_q(sigma, n)
        proj = self.graph_projection(leaf_q, img.x)
        _, dg = leaf_q.interp(img.x[1], deriv=True)
        tangent = np.array([dg[0], 1.0, dg[1]])
        sign = 1.0 if img.v[1] >= 0 else -1.0
        out = SphereVector(proj, sign * tangent)
        return self.seq.pushforward_iterated(n, -n, out)

    def graph_projectivized_limit(self, sigma: float, xi: SphereVector,
                                  gap_tol: float = 1e-10):
        """Iterate (h_n)_* until Cauchy or until backpull noise onsets.

        The backward pull amplifies graph error by the unstable rate per
        depth, so the gap record eventually stops decreasing; the limit
        is the last iterate of the decreasing prefix.
        """
        led = self.ledger
        budget = np.exp(led.omega) + 0.05
        # gaps at the leaf-reconstruction resolution count as converged
        stop_floor = max(gap_tol, self.tol)
        record = []
        prev = self.graph_sphere_approximant(sigma, 0, xi)
        limit = prev
        for n in range(1, self.n_max + 1):
            cur = self.graph_sphere_approximant(sigma, n, xi)
            gap = cur.distance(prev)
            if gap < stop_floor:
                record.append(gap)
                limit = cur
                break
            if record and gap >= budget * record[-1]:
                # a budget-breaking ratio after a genuine decay phase is
                # the backpull noise floor; otherwise the scheme failed
                if gap < record[0] / 10.0 or gap >= record[-1]:
                    break
                raise NotCauchy(
                    f"sphere iterates decay too slowly at depth {n}: "
                    f"ratio {gap / record[-1]:.3f}")
            record.append(gap)
            limit = cur
            prev = cur
        return limit, np.array(record)

    def _forward_norm(self, z: np.ndarray, v: np.ndarray, n: int) -> float:
        cur, vv = np.asarray(z, dtype=float), np.asarray(v, dtype=float)
        for j in range(n):
            vv = self.seq.differentiate(j, cur) @ vv
            cur = self.seq.evaluate(j, cur)
        return float(np.linalg.norm(vv))

    def graph_delta_map(self, sigma: float, n: int, x: np.ndarray,
                        v: np.ndarray,
                        limit: SphereVector | None = None) -> np.ndarray:
        """Delta_n(x, v) = (|Df^(n)(x)v| / |Df^(n)(y)w|) w, (y,w) = h_*(x,v)."""
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        vhat = unit(v)
        if limit is None:
            limit, _ = self.graph_projectivized_limit(sigma,
                                                      SphereVector(x, vhat))
        num = self._forward_norm(x, v, n)
        den = self._forward_norm(limit.x, limit.v, n)
        return (num / den) * limit.v

    def graph_derivative(self, sigma: float, x: np.ndarray,
                         depths=(8, 12, 16), fd_steps=(1e-3, 1e-4, 1e-5)):
        """Dh(x) on the center tangent: Delta_n limit plus FD cross-check.

        Returns (dh_vector, fd_vectors_by_step, delta_norms).  The K2
        sandwich is asserted on every recorded Delta_n norm.
        """
        led = self.ledger
        x = np.asarray(x, dtype=float)
        leaf = self._leaf("c", 0, x)
        tangent = leaf.tangent_basis(x[1])[:, 0]
        tangent = tangent * np.sign(tangent[1])   # orient along +c
        limit, _ = self.graph_projectivized_limit(sigma,
                                                  SphereVector(x, tangent))
        deltas = [self.graph_delta_map(sigma, n, x, tangent, limit=limit)
                  for n in depths]
        norms = [float(np.linalg.norm(d)) for d in deltas]
        for nv in norms:
            if not 1.0 / led.k2 <= nv <= led.k2:
                raise DistortionViolation(
                    f"Delta_n norm {nv:.3e} leaves the K2 sandwich")
        dh = deltas[-1]
        fd = {}
        for step in fd_steps:
            zp = leaf.point(x[1] + step)
            zm = leaf.point(x[1] - step)
            hp = self.graph_exact_holonomy(sigma, zp)
            hm = self.graph_exact_holonomy(sigma, zm)
            fd[step] = (hp - hm) / float(np.linalg.norm(zp - zm))
        return dh, fd, norms

    def disc_holonomy(self, sigma: float, d1: TransversalDisc,
                      d2: TransversalDisc, x: np.ndarray) -> np.ndarray:
        """h_{D1,D2}(x): the point of D2 on the stable leaf of x."""
        x = np.asarray(x, dtype=float)
        leaf_s = self._leaf("s", 0, x)
        s = float(x[0])
        for _ in range(100):
            cu = leaf_s.interp(s)
            new_s = float(d2.value(cu[0], cu[1]))
            if abs(new_s - s) < 1e-13:
                s = new_s
                break
            s = new_s
        cu = leaf_s.interp(s)
        out = np.array([s, cu[0], cu[1]])
        if np.linalg.norm(out - d2.center) > 1.5:
            raise NoIntersection("disc holonomy left the restricted domain")
        return out

    # -- assembled diagnostics -------------------------------------------------

    def diagnostics(self) -> ConvergenceDiagnostics:
        self._build_responses()
        led = self.ledger
        nmax = self.n_max
        ns = np.arange(nmax)
        c0 = self.c0_gaps()[:-1]
        proj = self.sphere_gaps()
        delta = self.delta_gaps()
        d_xy = self.sigma * np.abs(self.t_resp)
        sup_dxy = float(np.max(d_xy))
        bound_c0 = np.array([led.c2_proj * np.exp(
            led.kappa_sum(0, int(n)) - led.gamma_sum(0, int(n)))
            for n in ns])
        bound_proj = np.array([3 * led.c2_proj * led.c1_reg * np.exp(
            led.kappa_sum(0, int(n)) * led.theta
            + (1 + led.alpha) * (led.gamma_hat_sum(0, int(n))
                                 - led.gamma_sum(0, int(n))))
            * sup_dxy ** led.theta_bar for n in ns])
        bound_delta = np.array([led.k2 * led.c1_reg * 2 * led.c1_reg * led.l1
                                * np.exp(led.theta_bar * led.kappa_sum(0, int(n)))
                                for n in ns])
        diag = ConvergenceDiagnostics(
            n=ns, sup_c0_gap=c0, sup_proj_gap=proj, sup_delta_gap=delta,
            bound_c0=bound_c0, bound_proj=bound_proj, bound_delta=bound_delta)
        slope, _ = fit_decay_rate(c0)
        diag.c0_slope = slope
        _, ratio_p = fit_decay_rate(proj)
        _, ratio_d = fit_decay_rate(delta[delta > 0])
        diag.proj_ratio = ratio_p
        diag.delta_ratio = ratio_d
        diag.notes["sigma"] = self.sigma
        diag.notes["sup_d_xy"] = sup_dxy
        diag.notes["kernel"] = "response"
        return diag

    # -- Holder fits -------------------------------------------------------------

    def holder_fit(self, target: str, n_scales: int = 8):
        """Log-log regression of a holonomy field over dyadic-type scales.

        Scales follow r_n = rho_session * exp(kappa^(n) a0).  Below the
        float-representable separation the field difference is evaluated
        through its directional derivative (exact at those scales).
        """
        self._build_responses()
        led = self.ledger
        rho_session = self.sigma * self.response_sup()
        scales = np.array([rho_session * np.exp(led.kappa_sum(0, n) * led.a0)
                           for n in range(1, n_scales + 1)])
        if len(scales) < 5:
            raise InsufficientScales("need at least 5 scales")
        mid = self.x_ens.count // 2
        if target == "h_star":
            # position part |x - x'| (1 + sigma d(dh)/dc) and direction
            # part |e_c(x) - e_c(x')|, both linear in the separation
            fld = self.holonomy_offsets()
            fgrad = self._field_gradient(fld)
            pos_amp = 1.0 + self.sigma * float(np.linalg.norm(fgrad[mid]))
            dir_amp = float(np.linalg.norm(self.dec_dc[mid]))
            vals = max(pos_amp, dir_amp) * scales
        elif target == "log_norm_Dh":
            fld = self.log_dh_field()[:, None]
            fgrad = self._field_gradient(fld)
            base_gap = np.abs(fgrad[mid, 0])
            vals = self.sigma * base_gap * scales
        elif target == "tangent_E":
            return self._tangent_holder_fit()
        else:
            raise ValueError(f"unknown fit target {target!r}")
        if float(np.max(vals)) <= 0.0:
            return {"target": target, "exponent": float("inf"),
                    "constant": 0.0, "r2": 1.0, "scales": scales.tolist(),
                    "note": "exact"}
        slope, const, r2 = fit_loglog(scales, vals)
        return {"target": target, "exponent": slope, "constant": const,
                "r2": r2, "scales": scales.tolist(), "values": vals.tolist()}

    def _field_gradient(self, fld: np.ndarray) -> np.ndarray:
        """d(field)/d(center coordinate) along the sample line."""
        coords = self.sample_coords
        order = np.argsort(coords)
        grads = np.gradient(fld[order], coords[order], axis=0)
        out = np.empty_like(grads)
        out[order] = grads
        return out

    def _tangent_holder_fit(self):
        seps = 2.0 ** -np.arange(3, 16, dtype=float)
        x0 = self.samples[self.x_ens.count // 2]
        ec = self.x_ens.e_c[self.x_ens._slot(0)][self.x_ens.count // 2]
        pts_hi = x0[None, :] + seps[:, None] * ec[None, :]
        es_hi, _, _ = frame_fields_at(self.seq, 0, pts_hi)
        es_0, _, _ = frame_fields_at(self.seq, 0, x0[None, :])
        gaps = np.linalg.norm(es_hi - es_0, axis=1)
        keep = gaps > 1e-14
        if keep.sum() < 5:
            return {"target": "tangent_E", "exponent": float("inf"),
                    "constant": 0.0, "r2": 1.0, "note": "exact"}
        slope, const, r2 = fit_loglog(seps[keep], gaps[keep])
        return {"target": "tangent_E", "exponent": slope, "constant": const,
                "r2": r2}
