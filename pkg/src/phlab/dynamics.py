"""Nonlinear map sequences: block cocycle plus compactly supported terms.

Every map has the form ``f_n(y) = L_n y + sum_t c_t phi(|y|) y**e_t`` with
``phi`` the fixed smooth cutoff (1 inside radius 1/2, 0 outside radius 1)
and polynomial factors of total degree <= 3 vanishing at the origin.  The
family is closed under JSON round-trips and has analytic derivatives, so
no downstream computation ever needs numerical differentiation of f.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigInvalid, NoConvergence
from .linalg import unit
from .spectral import CocycleSequence

_INVERT_TOL = 1e-12
_INVERT_MAXIT = 200


@dataclass(frozen=True)
class PerturbationTerm:
    """One bump-modulated monomial ``coeff * phi(|y|) * y**exponents``."""

    coeff: float
    exponents: tuple
    component: int
    index: object = "all"   # "all" or a concrete integer index

    def validate(self, k: int) -> None:
        if len(self.exponents) != k:
            raise ConfigInvalid("monomial length disagrees with dimension")
        if any(int(e) != e or e < 0 for e in self.exponents):
            raise ConfigInvalid("monomial exponents must be non-negative ints")
        total = sum(int(e) for e in self.exponents)
        if not 1 <= total <= 3:
            raise ConfigInvalid("monomial total degree must be in [1, 3]")
        if not 0 <= self.component < k:
            raise ConfigInvalid("output component out of range")


class PerturbationSpec:
    """A finite list of perturbation terms, possibly index-dependent."""

    def __init__(self, terms: list[PerturbationTerm], k: int):
        for t in terms:
            t.validate(k)
        self.terms = list(terms)
        self.k = k
        self._cache: dict[object, tuple] = {}

    @classmethod
    def from_json(cls, doc, k: int) -> "PerturbationSpec":
        if isinstance(doc, str):
            doc = json.loads(doc)
        terms = [PerturbationTerm(float(t["coeff"]),
                                  tuple(int(e) for e in t["monomial"]),
                                  int(t["component"]),
                                  t.get("n", "all"))
                 for t in doc.get("terms", [])]
        return cls(terms, k)

    def to_json_dict(self) -> dict:
        return {"terms": [{"n": t.index, "coeff": t.coeff,
                           "monomial": list(t.exponents),
                           "component": t.component}
                          for t in self.terms]}

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def arrays_for(self, n: int):
        """Resolved (coeffs, exps, comps) arrays for index ``n``."""
        key = n
        if key not in self._cache:
            live = [t for t in self.terms
                    if t.index == "all" or t.index == n]
            coeffs = np.array([t.coeff for t in live], dtype=float)
            exps = np.array([t.exponents for t in live],
                            dtype=np.int64).reshape(len(live), self.k)
            comps = np.array([t.component for t in live], dtype=np.int64)
            self._cache[key] = (coeffs, exps, comps)
        return self._cache[key]


@dataclass
class SphereVector:
    """A base point and a unit direction; renormalized on construction."""

    x: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.v = unit(np.asarray(self.v, dtype=float))

    def distance(self, other: "SphereVector") -> float:
        return max(float(np.linalg.norm(self.x - other.x)),
                   float(np.linalg.norm(self.v - other.v)))


def _ball_grid(k: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Deterministic quasi-uniform sample of the closed unit ball."""
    pts = rng.standard_normal((count, k))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    radii = rng.random(count) ** (1.0 / k)
    return pts * radii[:, None]


class DiffeoSequence:
    """The sequence ``f_n = L_n + perturbation`` with exact derivatives."""

    def __init__(self, cocycle: CocycleSequence, perturbation: PerturbationSpec,
                 eps_prime: float, validate: bool = True, grid_count: int = 10000,
                 seed: int = 0):
        if perturbation.k != cocycle.dims.k:
            raise ConfigInvalid("perturbation dimension disagrees with cocycle")
        self.cocycle = cocycle
        self.perturbation = perturbation
        self.eps_prime = float(eps_prime)
        self.dims = cocycle.dims
        if validate:
            self.validate_budget(grid_count=grid_count, seed=seed)

    # -- budget -----------------------------------------------------------

    def validate_budget(self, grid_count: int = 10000, seed: int = 0) -> dict:
        """Check the C1 budgets of f - L and f^-1 - L^-1 on a ball grid.

        Raises ConfigInvalid naming the worst grid point on violation.
        """
        rng = np.random.default_rng(seed)
        grid = _ball_grid(self.dims.k, grid_count, rng)
        report = {}
        for n in self.cocycle.indices:
            coeffs, exps, comps = self.perturbation.arrays_for(n)
            vals = kernels.pert_eval(grid, coeffs, exps, comps)
            jacs = kernels.pert_jac(grid, coeffs, exps, comps)
            vnorm = np.linalg.norm(vals, axis=1)
            jnorm = np.linalg.norm(jacs, axis=(1, 2), ord=2) \
                if jacs.size else np.zeros(len(grid))
            linv = self.cocycle.inverse_matrix(n)
            # f^-1(y) - L^-1 y = -L^-1 pert(x) at y = f(x)
            inv_c0 = np.linalg.norm(vals @ linv.T, axis=1)
            # (L + E)^-1 - L^-1, computed exactly per grid point
            lmat = self.cocycle.matrix(n)
            inv_c1 = np.zeros(len(grid))
            if not self.perturbation.is_zero:
                worst_rows = np.argsort(jnorm)[-256:]
                for i in worst_rows:
                    dinv = np.linalg.inv(lmat + jacs[i]) - linv
                    inv_c1[i] = np.linalg.norm(dinv, ord=2)
            worst = {
                "forward_c0": (float(np.max(vnorm)), grid[int(np.argmax(vnorm))]),
                "forward_c1": (float(np.max(jnorm)), grid[int(np.argmax(jnorm))]),
                "inverse_c0": (float(np.max(inv_c0)), grid[int(np.argmax(inv_c0))]),
                "inverse_c1": (float(np.max(inv_c1)), grid[int(np.argmax(inv_c1))]),
            }
            for name, (val, pt) in worst.items():
                if val > self.eps_prime:
                    raise ConfigInvalid(
                        f"perturbation violates the eps' budget: {name} = "
                        f"{val:.3e} > {self.eps_prime:.3e} at index {n}, "
                        f"grid point {pt.tolist()}")
            report[n] = {name: val for name, (val, _) in worst.items()}
        return report

    @property
    def is_linear(self) -> bool:
        return self.perturbation.is_zero

    # -- evaluation --------------------------------------------------------

    def pert(self, n: int, x: np.ndarray) -> np.ndarray:
        coeffs, exps, comps = self.perturbation.arrays_for(n)
        single = np.ndim(x) == 1
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        out = kernels.pert_eval(pts, coeffs, exps, comps)
        return out[0] if single else out

    def pert_jacobian(self, n: int, x: np.ndarray) -> np.ndarray:
        coeffs, exps, comps = self.perturbation.arrays_for(n)
        single = np.ndim(x) == 1
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        out = kernels.pert_jac(pts, coeffs, exps, comps)
        return out[0] if single else out

    def evaluate(self, n: int, x: np.ndarray) -> np.ndarray:
        lmat = self.cocycle.matrix(n)
        single = np.ndim(x) == 1
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        out = pts @ lmat.T + self.pert(n, pts)
        return out[0] if single else out

    def differentiate(self, n: int, x: np.ndarray) -> np.ndarray:
        lmat = self.cocycle.matrix(n)
        single = np.ndim(x) == 1
        jac = self.pert_jacobian(n, np.atleast_2d(np.asarray(x, dtype=float)))
        out = jac + lmat[None, :, :]
        return out[0] if single else out

    def invert(self, n: int, y: np.ndarray) -> np.ndarray:
        """Preimage via the L-preconditioned damped fixed point.

        The residual target is 1e-12, relative for far-field points so
        that huge linear-regime orbits stay invertible.
        """
        linv = self.cocycle.inverse_matrix(n)
        single = np.ndim(y) == 1
        ys = np.atleast_2d(np.asarray(y, dtype=float))
        scale = np.maximum(1.0, np.linalg.norm(ys, axis=1))
        x = ys @ linv.T
        for _ in range(_INVERT_MAXIT):
            resid = self.evaluate(n, x) - ys
            if float(np.max(np.linalg.norm(resid, axis=1) / scale)) \
                    <= _INVERT_TOL:
                return x[0] if single else x
            x = x - resid @ linv.T
        raise NoConvergence(
            f"inverse iteration stalled at index {n}; perturbation likely "
            "violates its eps' budget")

    def iterate(self, n: int, j: int, x: np.ndarray) -> np.ndarray:
        """The composition f^(j)_n with the standard index convention."""
        out = np.asarray(x, dtype=float)
        if j > 0:
            for i in range(j):
                out = self.evaluate(n + i, out)
        elif j < 0:
            for i in range(1, -j + 1):
                out = self.invert(n - i, out)
        return out

    # -- sphere bundle ------------------------------------------------------

    def pushforward_sphere(self, n: int, xi: SphereVector,
                           inverse: bool = False) -> SphereVector:
        """Renormalized derivative action on a unit tangent vector."""
        if inverse:
            y = self.invert(n, xi.x)
            jac = np.linalg.inv(self.differentiate(n, y))
            return SphereVector(y, jac @ xi.v)
        jac = self.differentiate(n, xi.x)
        return SphereVector(self.evaluate(n, xi.x), jac @ xi.v)

    def pushforward_iterated(self, n: int, j: int,
                             xi: SphereVector) -> SphereVector:
        out = xi
        if j > 0:
            for i in range(j):
                out = self.pushforward_sphere(n + i, out)
        elif j < 0:
            for i in range(1, -j + 1):
                out = self.pushforward_sphere(n - i, out, inverse=True)
        return out

    def derivative_norm(self, n: int, x: np.ndarray, v: np.ndarray) -> float:
        return float(np.linalg.norm(self.differentiate(n, x) @ v))

    # -- measured regularity -------------------------------------------------

    def measure_regularity(self, beta: float, n_pairs: int = 10000,
                           seed: int = 1) -> tuple[float, float, float]:
        """Measured (C0, C1, C3) from Holder ratios at dyadic separations.

        Reported values are 1.5x the max observed ratio, floored so that
        C1 >= C0 > 1 always holds.
        """
        c0, c1, c3 = self.raw_holder_ratios(beta, n_pairs=n_pairs, seed=seed)
        c0 = max(1.5 * c0, 1.0 + 1e-6)
        c1 = max(1.5 * c1, c0)
        c3 = 1.5 * c3
        return c0, c1, c3

    def raw_holder_ratios(self, beta: float, n_pairs: int = 10000,
                          seed: int = 1) -> tuple[float, float, float]:
        """Max observed Holder ratios for Df, f_*, and log||Df|| (no floors)."""
        rng = np.random.default_rng(seed)
        k = self.dims.k
        seps = 2.0 ** (-rng.integers(1, 16, size=n_pairs).astype(float))
        base = _ball_grid(k, n_pairs, rng) * 1.2
        dirs = rng.standard_normal((n_pairs, k))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        other = base + dirs * seps[:, None]
        vdirs = rng.standard_normal((n_pairs, k))
        vdirs /= np.linalg.norm(vdirs, axis=1, keepdims=True)
        vperp = rng.standard_normal((n_pairs, k))
        vperp -= np.sum(vperp * vdirs, axis=1, keepdims=True) * vdirs
        vperp /= np.linalg.norm(vperp, axis=1, keepdims=True)
        vother = vdirs + vperp * seps[:, None]
        vother /= np.linalg.norm(vother, axis=1, keepdims=True)
        c0 = c1 = c3 = 0.0
        for n in self.cocycle.indices:
            jac_a = self.differentiate(n, base)
            jac_b = self.differentiate(n, other)
            pair_d = np.maximum(seps, np.linalg.norm(vother - vdirs, axis=1))
            dbeta = pair_d ** beta
            c0 = max(c0, float(np.max(
                np.linalg.norm(jac_a - jac_b, axis=(1, 2), ord=2)
                / seps ** beta)))
            img_a = np.einsum("nij,nj->ni", jac_a, vdirs)
            img_b = np.einsum("nij,nj->ni", jac_b, vother)
            na = np.linalg.norm(img_a, axis=1)
            nb = np.linalg.norm(img_b, axis=1)
            star_gap = np.maximum(
                np.linalg.norm(self.evaluate(n, base)
                               - self.evaluate(n, other), axis=1),
                np.linalg.norm(img_a / na[:, None] - img_b / nb[:, None],
                               axis=1))
            c1 = max(c1, float(np.max(star_gap / dbeta)))
            c3 = max(c3, float(np.max(np.abs(np.log(na) - np.log(nb))
                                      / dbeta)))
            c1 = max(c1, float(np.max(np.linalg.norm(jac_a, axis=(1, 2),
                                                     ord=2))))
            inv_jac = np.linalg.inv(jac_a)
            c1 = max(c1, float(np.max(np.linalg.norm(inv_jac, axis=(1, 2),
                                                     ord=2))))
        return c0, c1, c3


def standard_cocycle() -> CocycleSequence:
    """The constant diag(1/4, 1, 4) cocycle used across the experiments."""
    from .spectral import BlockDims
    return CocycleSequence(BlockDims(1, 1, 1),
                           [([[0.25]], [[1.0]], [[4.0]])], mode="constant")
