"""Lyapunov charts for toy torus systems, and their globalization.

The zoo holds algebraic diffeomorphisms of the 3-torus with closed-form
splittings (hyperbolic automorphism times a rotation), plus a smooth
small-parameter perturbation knob.  Charts are affine frames adapted to
the splitting in covering coordinates; the rescaled chart maps are
globalized with the module-wide bump and exported as a map sequence for
the invariant-manifold and holonomy machinery.

Block order inside charts follows descending exponents (unstable,
center, stable); exports reorder to the (s, c, u) convention of the
dynamics module.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .dynamics import DiffeoSequence, PerturbationSpec, PerturbationTerm
from .errors import (BudgetExceeded, ChartFailure, DegenerateSpectrum,
                     PropertyFailure)
from .ledger import PartiallyHyperbolicSpectralData
from .spectral import BlockDims, CocycleSequence

GOLDEN_ROTATION = (np.sqrt(5.0) - 1.0) / 2.0
CAT = np.array([[2.0, 1.0], [1.0, 1.0]])


class ToySystem:
    """A compact-manifold diffeomorphism from the built-in zoo."""

    def __init__(self, name: str = "cat_rotation", perturbation: float = 0.0,
                 rotation: float = GOLDEN_ROTATION):
        if name not in ("cat_rotation",):
            raise ValueError(f"unknown toy system {name!r}")
        self.name = name
        self.eps_pert = float(perturbation)
        self.rotation = float(rotation)
        lam = (3.0 + np.sqrt(5.0)) / 2.0
        self.lam_plus = lam
        self.exact_exponents = np.array([np.log(lam), 0.0, -np.log(lam)])
        # unit eigenvectors of the cat matrix, embedded in R^3
        v_u = np.array([1.0, lam - 2.0, 0.0])
        v_s = np.array([1.0, 1.0 / lam - 2.0, 0.0])
        self.frame_exact = np.stack([
            v_u / np.linalg.norm(v_u),
            np.array([0.0, 0.0, 1.0]),
            v_s / np.linalg.norm(v_s)], axis=1)   # columns: u, c, s

    # lifted map on the cover R^3 (projects mod 1 for orbits)

    def lift(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        out = np.empty_like(y)
        out[..., 0] = 2.0 * y[..., 0] + y[..., 1]
        out[..., 1] = y[..., 0] + y[..., 1]
        out[..., 2] = y[..., 2] + self.rotation
        if self.eps_pert != 0.0:
            s2 = np.sin(2.0 * np.pi * y[..., 2])
            out[..., 0] = out[..., 0] + self.eps_pert * s2 / (2.0 * np.pi)
            out[..., 2] = out[..., 2] + self.eps_pert \
                * np.sin(2.0 * np.pi * (y[..., 0] - y[..., 1])) / (2.0 * np.pi)
        return out

    def step(self, y: np.ndarray) -> np.ndarray:
        return np.mod(self.lift(y), 1.0)

    def derivative(self, y: np.ndarray) -> np.ndarray:
        y = np.atleast_2d(np.asarray(y, dtype=float))
        n = y.shape[0]
        jac = np.zeros((n, 3, 3))
        jac[:, 0, 0] = 2.0
        jac[:, 0, 1] = 1.0
        jac[:, 1, 0] = 1.0
        jac[:, 1, 1] = 1.0
        jac[:, 2, 2] = 1.0
        if self.eps_pert != 0.0:
            jac[:, 0, 2] += self.eps_pert * np.cos(2.0 * np.pi * y[:, 2])
            c01 = self.eps_pert * np.cos(2.0 * np.pi * (y[:, 0] - y[:, 1]))
            jac[:, 2, 0] += c01
            jac[:, 2, 1] -= c01
        return jac if jac.shape[0] > 1 else jac[0]

    def orbit(self, x: np.ndarray, count: int) -> np.ndarray:
        out = np.empty((count + 1, 3))
        out[0] = np.mod(np.asarray(x, dtype=float), 1.0)
        for i in range(count):
            out[i + 1] = self.step(out[i])
        return out


def estimate_exponents(system: ToySystem, x: np.ndarray, horizon: int = 10000):
    """Lyapunov exponents by orthogonalized cocycle iteration, plus frames.

    Frames come from the forward/backward filtration limits: the fastest
    direction of the forward product, the fastest of the inverse product,
    and the plane intersections for the center.
    """
    if horizon < 1000:
        raise ValueError("horizon must be at least 1e3")
    orb = system.orbit(x, horizon)
    q = np.eye(3)
    sums = np.zeros(3)
    for i in range(horizon):
        q = system.derivative(orb[i]) @ q
        q, r = np.linalg.qr(q)
        diag = np.diag(r)
        q = q * np.sign(diag)[None, :]
        sums += np.log(np.abs(diag))
    lam = sums / horizon
    order = np.argsort(lam)[::-1]
    lam = lam[order]
    if np.min(np.abs(np.diff(lam))) < 1e-3:
        raise DegenerateSpectrum("consecutive exponent estimates too close")
    frames = _filtration_frames(system, x, depth=60)
    return lam, frames


def _filtration_frames(system: ToySystem, x: np.ndarray, depth: int = 60):
    """Columns (e_u, e_c, e_s) at x from filtration power iteration."""
    back = [np.mod(x, 1.0)]
    for _ in range(depth):
        # invert by fixed point on the cover (the linear part dominates)
        target = back[-1]
        minv = np.linalg.inv(np.array([[2.0, 1.0, 0], [1, 1, 0], [0, 0, 1]]))
        guess = np.mod(minv @ (target - np.array([0, 0, system.rotation])),
                       1.0)
        for _ in range(60):
            resid = np.mod(system.lift(guess) - target + 0.5, 1.0) - 0.5
            guess = np.mod(guess - minv @ resid, 1.0)
            if np.max(np.abs(resid)) < 1e-14:
                break
        back.append(guess)
    fwd = system.orbit(x, depth)
    e_u = np.array([1.0, 0.0, 0.0])
    cu = np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]])
    for i in range(depth, 0, -1):
        jac = system.derivative(back[i])
        e_u = jac @ e_u
        e_u /= np.linalg.norm(e_u)
        cu = np.linalg.qr(jac @ cu)[0]
    e_s = np.array([0.0, 1.0, 0.0])
    cs = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    for i in range(depth - 1, -1, -1):
        jinv = np.linalg.inv(system.derivative(fwd[i]))
        e_s = jinv @ e_s
        e_s /= np.linalg.norm(e_s)
        cs = np.linalg.qr(jinv @ cs)[0]
    n_cs = np.cross(cs[:, 0], cs[:, 1])
    n_cu = np.cross(cu[:, 0], cu[:, 1])
    e_c = np.cross(n_cs, n_cu)
    e_c /= np.linalg.norm(e_c)
    sign = lambda v, i: v * (1.0 if v[i] >= 0 else -1.0)
    return np.stack([sign(e_u, 0), sign(e_c, 2), sign(e_s, 0)], axis=1)


@dataclass
class Chart:
    """An adapted affine chart at a point, hatted scale included."""

    x: np.ndarray
    frame: np.ndarray          # columns (e_u, e_c, e_s)
    exponents: np.ndarray      # descending
    eps_hat: float
    ell_hat: float
    k0: float
    system: ToySystem = field(repr=False, default=None)

    @property
    def lam0(self) -> float:
        return float(max(abs(self.exponents[0]), abs(self.exponents[-1])))

    def phi_hat(self, v: np.ndarray) -> np.ndarray:
        return self.x + v @ self.frame.T

    def phi_hat_inv(self, y: np.ndarray, wrap: bool = True) -> np.ndarray:
        diff = y - self.x
        if wrap:
            diff = np.mod(diff + 0.5, 1.0) - 0.5
        return diff @ np.linalg.inv(self.frame).T

    def f_hat(self, v: np.ndarray, next_chart: "Chart") -> np.ndarray:
        imgs = self.system.lift(self.phi_hat(v))
        base = self.system.lift(self.x)
        return (imgs - base) @ np.linalg.inv(next_chart.frame).T

    def block_norm(self, v: np.ndarray) -> np.ndarray:
        return np.max(np.abs(np.asarray(v)), axis=-1)


def build_chart(system: ToySystem, x: np.ndarray, eps_hat: float = 0.2,
                horizon: int = 4000,
                lam: np.ndarray | None = None) -> tuple[Chart, Chart]:
    """Chart at x (and at f(x)) with the smallest admissible hatted scale.

    ell_hat is the smallest power of e^(eps_hat) for which the derivative
    sandwich and the Holder budget hold on a verification grid.  Pass the
    orbit's exponents in ``lam`` to avoid re-estimating them per point.
    """
    if lam is None:
        lam, _ = estimate_exponents(system, x, horizon)
    frame_x = _filtration_frames(system, x)
    fx = system.step(x)
    frame_fx = _filtration_frames(system, fx)
    k0 = float(np.linalg.norm(frame_x, ord=2)) + 1.0
    for k in range(0, 41):
        ell = float(np.exp(eps_hat * k))
        chart = Chart(np.mod(x, 1.0), frame_x, lam, eps_hat, ell, k0, system)
        nxt = Chart(fx, frame_fx, lam, eps_hat, ell, k0, system)
        ok, _ = _check_hat_properties(chart, nxt, raise_on_fail=False)
        if ok:
            chart.system = system
            return chart, nxt
    raise ChartFailure(f"no admissible ell_hat <= exp(40 eps_hat) at {x}")


def _grid_directions(count: int = 34) -> np.ndarray:
    rng = np.random.default_rng(7)
    dirs = rng.standard_normal((count, 3))
    dirs /= np.max(np.abs(dirs), axis=1, keepdims=True)
    dirs = np.vstack([np.eye(3), -np.eye(3), dirs])
    return dirs


def _check_hat_properties(chart: Chart, nxt: Chart,
                          raise_on_fail: bool = True):
    """L-list: derivative sandwich, Holder budget, domain containment."""
    sys_ = chart.system or nxt.system
    eps = chart.eps_hat
    radius = np.exp(-chart.lam0 - 3 * eps) / chart.ell_hat
    d0 = np.linalg.inv(nxt.frame) @ sys_.derivative(chart.x) @ chart.frame
    lam = chart.exponents
    for i in range(3):
        v = np.zeros(3)
        v[i] = 1.0
        img = chart.block_norm(d0 @ v)
        if not np.exp(lam[i] - eps) <= img <= np.exp(lam[i] + eps):
            if raise_on_fail:
                raise PropertyFailure(f"L4 fails for block {i}")
            return False, "L4"
    # L5: Holder variation of the chart derivative on the domain grid
    dirs = _grid_directions()
    pts = chart.phi_hat(dirs * radius * 0.45)
    jacs = sys_.derivative(pts)
    jac0 = sys_.derivative(chart.x)
    fr_inv = np.linalg.inv(nxt.frame)
    seps = np.linalg.norm(pts - chart.x, axis=1)
    hol = np.max(np.linalg.norm(
        np.einsum("ij,njk,kl->nil", fr_inv, jacs - jac0, chart.frame),
        axis=(1, 2), ord=2) / np.maximum(seps, 1e-300) ** 0.8)
    if hol > eps * chart.ell_hat ** 0.8:
        if raise_on_fail:
            raise PropertyFailure("L5 fails: chart Holder budget")
        return False, "L5"
    # L3: images of the admissible ball stay inside the next chart ball
    imgs = chart.f_hat(dirs * radius, nxt)
    if np.max(chart.block_norm(imgs)) > 1.0 / nxt.ell_hat:
        if raise_on_fail:
            raise PropertyFailure("L3 fails: image leaves the chart ball")
        return False, "L3"
    return True, None


@dataclass
class RescaledChart:
    chart: Chart
    nxt: Chart

    @property
    def eps(self) -> float:
        return 4.0 * self.chart.eps_hat

    @property
    def ell(self) -> float:
        return self.chart.ell_hat ** 2

    def f_tilde(self, v: np.ndarray) -> np.ndarray:
        scale = self.nxt.ell_hat
        return scale * self.chart.f_hat(np.asarray(v) / self.chart.ell_hat,
                                        self.nxt)

    def d0(self) -> np.ndarray:
        sys_ = self.chart.system
        ratio = self.nxt.ell_hat / self.chart.ell_hat
        return ratio * np.linalg.inv(self.nxt.frame) \
            @ sys_.derivative(self.chart.x) @ self.chart.frame


def rescale_chart(chart: Chart, nxt: Chart) -> RescaledChart:
    """Apply the square rescaling and verify the chart property list."""
    rc = RescaledChart(chart, nxt)
    eps = rc.eps
    lam = chart.exponents
    d0 = rc.d0()
    for i in range(3):
        v = np.zeros(3)
        v[i] = 1.0
        img = float(np.max(np.abs(d0 @ v)))
        if not np.exp(lam[i] - eps) <= img <= np.exp(lam[i] + eps):
            raise PropertyFailure(f"C4 fails for block {i}")
    radius = np.exp(-chart.lam0 - 2 * eps)
    dirs = _grid_directions()
    pts = dirs * radius * 0.45
    base = rc.f_tilde(pts)
    jump = rc.f_tilde(pts * 0.5)
    # C5: Lipschitz deviation of the nonlinear part on the grid
    lin = pts @ d0.T
    lin_half = 0.5 * pts @ d0.T
    dev = np.linalg.norm((base - lin) - (jump - lin_half), axis=1)
    stepn = np.linalg.norm(pts - 0.5 * pts, axis=1)
    if float(np.max(dev / stepn)) > eps:
        raise PropertyFailure("C5 fails: Lip(f_tilde - D0 f_tilde) > eps")
    # C7 bounds on the chart Lipschitz constants
    lip = float(np.linalg.norm(chart.frame, ord=2)) / chart.ell_hat
    if not (1.0 / rc.ell <= lip <= chart.k0):
        raise PropertyFailure("C7 fails: chart Lipschitz constants")
    return rc


def verify_c8_along_orbit(system: ToySystem, x: np.ndarray, eps_hat: float,
                          steps: int = 1000,
                          lam: np.ndarray | None = None) -> bool:
    """C8: the rescaled scale function drifts by at most e^eps per step."""
    cur = np.mod(np.asarray(x, dtype=float), 1.0)
    if lam is None:
        lam, _ = estimate_exponents(system, cur, 2000)
    prev_ell = None
    for _ in range(steps):
        chart, _ = build_chart(system, cur, eps_hat, lam=lam)
        ell = chart.ell_hat ** 2
        if prev_ell is not None:
            ratio = ell / prev_ell
            if not np.exp(-4 * eps_hat) <= ratio <= np.exp(4 * eps_hat):
                return False
        prev_ell = ell
        cur = system.step(cur)
    return True


@dataclass
class GlobalizedMap:
    """F_x = linear part + bump-localized nonlinearity, on all of R^3."""

    rc: RescaledChart
    support: float

    def __call__(self, u: np.ndarray) -> np.ndarray:
        u = np.atleast_2d(np.asarray(u, dtype=float))
        lin = u @ self.rc.d0().T
        r = np.linalg.norm(u, axis=1) / self.support
        phi = kernels.bump_value(r)
        live = phi > 0.0
        out = lin.copy()
        if np.any(live):
            non = self.rc.f_tilde(u[live]) - lin[live]
            out[live] += phi[live, None] * non
        return out if out.shape[0] > 1 else out[0]


def globalize(rc: RescaledChart) -> GlobalizedMap:
    """Extend the rescaled chart map by the module-wide bump cutoff.

    The bump support is scaled to the chart domain radius (the paper's
    unit-ball normalization is not available because f_tilde only exists
    on the smaller ball); the budget Lip(F - D0 f_tilde) < eps is checked
    on a grid and the identity F = f_tilde holds on half the support.
    """
    support = np.exp(-rc.chart.lam0 - 2 * rc.eps)
    fx = GlobalizedMap(rc, support)
    dirs = _grid_directions()
    d0 = rc.d0()
    for scale in (0.9, 0.6, 0.3):
        pts = dirs * support * scale
        dev_a = fx(pts) - pts @ d0.T
        dev_b = fx(pts * 0.98) - 0.98 * pts @ d0.T
        num = np.linalg.norm(dev_a - dev_b, axis=1)
        den = np.linalg.norm(0.02 * pts, axis=1)
        if float(np.max(num / den)) >= rc.eps:
            raise BudgetExceeded("Lip(F - D0 f_tilde) >= eps on the grid")
    inner = dirs * support * 0.45
    if float(np.max(np.linalg.norm(fx(inner) - rc.f_tilde(inner),
                                   axis=1))) > 1e-14:
        raise BudgetExceeded("F must equal f_tilde on half the support")
    return fx


def export_sequence(system: ToySystem, x: np.ndarray, eps_hat: float = 0.2,
                    count: int = 8, taylor: bool = True) -> DiffeoSequence:
    """Globalized chart maps along the orbit, as a dynamics sequence.

    Block order is converted to (s, c, u).  The nonlinear parts are
    fitted by the bump-modulated polynomial family (degree <= 3 Taylor
    coefficients); for the unperturbed zoo members the fit is exactly
    zero and the export is the constant linear cocycle.
    """
    orbit = system.orbit(x, count)
    lam, _ = estimate_exponents(system, x, 2000)
    blocks = []
    terms = []
    perm = np.array([2, 1, 0])  # (u, c, s) -> (s, c, u)
    for n in range(count):
        chart, nxt = build_chart(system, orbit[n], eps_hat, lam=lam)
        rc = rescale_chart(chart, nxt)
        d0 = rc.d0()
        d0p = d0[np.ix_(perm, perm)]
        blocks.append(([[d0p[0, 0]]], [[d0p[1, 1]]], [[d0p[2, 2]]]))
        if taylor and system.eps_pert != 0.0:
            terms.extend(_taylor_terms(rc, perm, n))
    mode = "constant" if system.eps_pert == 0.0 else "window"
    if mode == "constant":
        blocks = blocks[:1]
    cocycle = CocycleSequence(BlockDims(1, 1, 1), blocks, mode=mode)
    spec = PerturbationSpec(terms, 3)
    eps_prime = 4.0 * eps_hat
    return DiffeoSequence(cocycle, spec, eps_prime=min(eps_prime, 0.25),
                          validate=False)


def _taylor_terms(rc: RescaledChart, perm: np.ndarray, n: int):
    """Degree-2 Taylor coefficients of the nonlinear chart part."""
    d0 = rc.d0()
    h = 1e-4
    terms = []
    for i in range(3):
        for j in range(i, 3):
            ei = np.zeros(3)
            ej = np.zeros(3)
            ei[i] = h
            ej[j] = h
            if i == j:
                stencil = (rc.f_tilde(ei) + rc.f_tilde(-ei)) / (h * h)
                coeff = 0.5 * stencil
            else:
                coeff = (rc.f_tilde(ei + ej) - rc.f_tilde(ei - ej)
                         - rc.f_tilde(-ei + ej) + rc.f_tilde(-ei - ej)) \
                    / (4 * h * h)
            for comp in range(3):
                c = float(coeff[comp])
                if abs(c) < 1e-10:
                    continue
                expo = [0, 0, 0]
                expo[int(np.argsort(perm)[i])] += 1
                expo[int(np.argsort(perm)[j])] += 1
                terms.append(PerturbationTerm(
                    c, tuple(expo), int(np.argsort(perm)[comp]), n))
    return terms


def center_unstable_inclusion(seq: DiffeoSequence, delta: float,
                              n_samples: int = 1000, depth: int = 40,
                              tol: float = 1e-8, seed: int = 0):
    """Membership in the small backward-invariant set implies on-leaf.

    Points whose backward chart orbits stay delta-small must lie on the
    center-unstable leaf through the origin, within 10 tol.
    """
    from .manifolds import compute_manifold
    rng = np.random.default_rng(seed)
    leaf = compute_manifold(seq, "cu", 0, np.zeros(3), tol=tol)
    # candidates: mostly on/near the cu-plane at scale delta, some off
    cu_dirs = rng.standard_normal((n_samples, 2))
    cu_dirs /= np.linalg.norm(cu_dirs, axis=1, keepdims=True)
    radii = delta * rng.uniform(0.05, 0.9, n_samples)
    pts = np.zeros((n_samples, 3))
    pts[:, 1] = cu_dirs[:, 0] * radii
    pts[:, 2] = cu_dirs[:, 1] * radii
    off = rng.random(n_samples) < 0.3
    pts[off, 0] = delta * rng.uniform(-2.0, 2.0, int(np.sum(off)))
    members = np.ones(n_samples, dtype=bool)
    cur = pts.copy()
    for n in range(depth):
        members &= np.linalg.norm(cur, axis=1) < delta
        cur = seq.invert(-1 - n, cur)
    violations = 0
    worst = 0.0
    if np.any(members):
        dist = leaf.transversal_distance(pts[members])
        worst = float(np.max(dist))
        violations = int(np.sum(dist > 10.0 * tol))
    return {"members": int(np.sum(members)), "violations": violations,
            "worst_distance": worst, "delta": delta}


def expulsion_steps(seq: DiffeoSequence, delta: float, stable_size: float,
                    max_steps: int = 200) -> int:
    """Backward steps until a stable-contaminated point leaves the set."""
    pt = np.array([stable_size, 0.4 * delta, 0.0])
    cur = pt.copy()
    for n in range(max_steps):
        if np.linalg.norm(cur) >= delta:
            return n
        cur = seq.invert(-1 - n, cur)
    return max_steps


def toy_spectral_data(system: ToySystem, n_samples: int = 64,
                      beta: float = 0.8,
                      seed: int = 0) -> PartiallyHyperbolicSpectralData:
    """Point-dependent splitting rates sampled along a generic orbit."""
    rng = np.random.default_rng(seed)
    x = rng.random(3)
    orbit = system.orbit(x, n_samples - 1)
    nus, nu_hats, gammas, gamma_hats = [], [], [], []
    for pt in orbit:
        frame = _filtration_frames(system, pt, depth=40)
        jac = system.derivative(pt)
        rate_u = np.linalg.norm(jac @ frame[:, 0])
        rate_c = np.linalg.norm(jac @ frame[:, 1])
        rate_s = np.linalg.norm(jac @ frame[:, 2])
        nus.append(rate_s * 1.001)
        nu_hats.append(1.001 / rate_u)
        gammas.append(rate_c * 0.999)
        gamma_hats.append(0.999 / rate_c)
    nus = np.array(nus)
    return PartiallyHyperbolicSpectralData(
        nu=nus, nu_hat=np.array(nu_hats), gamma=np.array(gammas),
        gamma_hat=np.array(gamma_hats), mu=nus * 0.98,
        mu_hat=np.array(nu_hats) * 0.98, beta=beta)


def chart_report(system: ToySystem, x: np.ndarray, eps_hat: float,
                 horizon: int = 10000, n_points: int = 100) -> dict:
    """Exponents, chart checks and norm-equivalence summary as a dict."""
    lam, frames = estimate_exponents(system, x, horizon)
    failures = []
    orbit = system.orbit(x, n_points - 1)
    ell_values = []
    for pt in orbit:
        try:
            chart, nxt = build_chart(system, pt, eps_hat, lam=lam)
            rescale_chart(chart, nxt)
            ell_values.append(chart.ell_hat)
        except (PropertyFailure, ChartFailure) as exc:
            failures.append(f"{pt.tolist()}: {exc}")
    return {
        "exponents": lam.tolist(),
        "exact_exponents": system.exact_exponents.tolist(),
        "eps_hat": eps_hat,
        "points_checked": n_points,
        "failures": failures,
        "ell_hat_constant": bool(np.ptp(ell_values) < 1e-12)
        if ell_values else False,
        "norm_equivalence": np.sqrt(3.0),
    }
