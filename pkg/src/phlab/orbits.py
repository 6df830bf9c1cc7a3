"""Orbit ensembles, invariant frame fields, and modal transports.

For a batch of base points this module computes two-sided orbits, the
stable / center / unstable line fields along them, and the signed
per-step rates of each line.  The line fields are obtained by filtration
power iteration (pull a generic vector or plane through enough steps of
the derivative cocycle that the dominated directions die), swept stably:
e_s and the cs-plane propagate backward, e_u and the cu-plane forward,
and e_c is the intersection of the two planes.

Everything downstream (holonomy responses, Lyapunov-regularity fits)
reduces to scalar bookkeeping in these frames because each line field is
exactly invariant under the derivative cocycle.
"""

from __future__ import annotations

import numpy as np

from .dynamics import DiffeoSequence

FRAME_DEPTH = 36


def _unit_rows(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def _align(v: np.ndarray, axis: int) -> np.ndarray:
    sign = np.where(v[:, axis] < 0.0, -1.0, 1.0)
    return v * sign[:, None]


def _plane_normal(frame: np.ndarray) -> np.ndarray:
    # frame: (N, 3, 2) -> unit normal (N, 3)
    return _unit_rows(np.cross(frame[:, :, 0], frame[:, :, 1]))


class OrbitEnsemble:
    """Two-sided orbits and frame fields for a batch of points.

    Index ``j`` runs over ``[-back, fwd]`` relative to the base index
    ``n0``; frames are valid on the whole stored range (the ensemble
    internally extends orbits by the power-iteration depth).
    """

    def __init__(self, seq: DiffeoSequence, points: np.ndarray, n0: int = 0,
                 back: int = 40, fwd: int = 100, depth: int = FRAME_DEPTH):
        if seq.dims.k != 3:
            raise ValueError("orbit ensembles are implemented for k = 3")
        self.seq = seq
        self.n0 = int(n0)
        self.back = int(back)
        self.fwd = int(fwd)
        self.depth = int(depth)
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        self.count = pts.shape[0]
        lo, hi = -back - depth, fwd + depth
        self._lo, self._hi = lo, hi
        n_slots = hi - lo + 1
        self.points = np.empty((n_slots, self.count, 3))
        self.points[-lo] = pts
        cur = pts
        for j in range(0, hi):
            cur = seq.evaluate(n0 + j, cur)
            self.points[j + 1 - lo] = cur
        cur = pts
        for j in range(0, lo, -1):
            cur = seq.invert(n0 + j - 1, cur)
            self.points[j - 1 - lo] = cur
        # jacobians along the orbit
        self.jac = np.empty((n_slots, self.count, 3, 3))
        for j in range(lo, hi + 1):
            self.jac[j - lo] = seq.differentiate(n0 + j, self.points[j - lo])
        self.jinv = np.linalg.inv(self.jac)
        self._build_frames()
        self._build_rates()

    # -- storage helpers ---------------------------------------------------

    def _slot(self, j: int) -> int:
        if not self._lo <= j <= self._hi:
            raise IndexError(f"orbit index {j} outside [{self._lo}, {self._hi}]")
        return j - self._lo

    def point(self, j: int) -> np.ndarray:
        return self.points[self._slot(j)]

    def jacobian(self, j: int) -> np.ndarray:
        return self.jac[self._slot(j)]

    def jacobian_inv(self, j: int) -> np.ndarray:
        return self.jinv[self._slot(j)]

    # -- frames -------------------------------------------------------------

    def _build_frames(self):
        lo, hi, n = self._lo, self._hi, self.count
        slots = hi - lo + 1
        self.e_s = np.empty((slots, n, 3))
        self.e_u = np.empty((slots, n, 3))
        cs = np.empty((slots, n, 3, 2))
        cu = np.empty((slots, n, 3, 2))
        # backward sweep: stable line and cs-plane
        seed_v = np.tile(np.array([1.0, 0.0, 0.0]), (n, 1))
        seed_q = np.tile(np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]),
                         (n, 1, 1))
        self.e_s[-1] = seed_v
        cs[-1] = seed_q
        for j in range(hi - 1, lo - 1, -1):
            s = j - lo
            self.e_s[s] = _unit_rows(np.einsum(
                "nij,nj->ni", self.jinv[s], self.e_s[s + 1]))
            q, _ = np.linalg.qr(np.einsum(
                "nij,njk->nik", self.jinv[s], cs[s + 1]))
            cs[s] = q
        # forward sweep: unstable line and cu-plane
        seed_v = np.tile(np.array([0.0, 0.0, 1.0]), (n, 1))
        seed_q = np.tile(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
                         (n, 1, 1))
        self.e_u[0] = seed_v
        cu[0] = seed_q
        for j in range(lo + 1, hi + 1):
            s = j - lo
            self.e_u[s] = _unit_rows(np.einsum(
                "nij,nj->ni", self.jac[s - 1], self.e_u[s - 1]))
            q, _ = np.linalg.qr(np.einsum(
                "nij,njk->nik", self.jac[s - 1], cu[s - 1]))
            cu[s] = q
        self.e_s = np.stack([_align(v, 0) for v in self.e_s])
        self.e_u = np.stack([_align(v, 2) for v in self.e_u])
        # center line: intersection of the cs and cu planes
        self.e_c = np.empty_like(self.e_s)
        for s in range(slots):
            n_cs = _plane_normal(cs[s])
            n_cu = _plane_normal(cu[s])
            self.e_c[s] = _align(_unit_rows(np.cross(n_cs, n_cu)), 1)
        self.E_cs = cs
        self.E_cu = cu

    def frame(self, j: int) -> np.ndarray:
        """Frame matrix with columns (e_s, e_c, e_u) at orbit time j; (N,3,3)."""
        s = self._slot(j)
        return np.stack([self.e_s[s], self.e_c[s], self.e_u[s]], axis=2)

    def frame_coeffs(self, j: int, vecs: np.ndarray) -> np.ndarray:
        """Coefficients of ``vecs`` in the (e_s, e_c, e_u) frame at time j."""
        return np.linalg.solve(self.frame(j), vecs[..., None])[..., 0]

    # -- signed modal rates ---------------------------------------------------

    def _build_rates(self):
        lo, hi = self._lo, self._hi
        slots = hi - lo
        self.lam_s = np.empty((slots, self.count))
        self.lam_c = np.empty((slots, self.count))
        self.lam_u = np.empty((slots, self.count))
        for s in range(slots):
            for lam, field in ((self.lam_s, self.e_s), (self.lam_c, self.e_c),
                               (self.lam_u, self.e_u)):
                img = np.einsum("nij,nj->ni", self.jac[s], field[s])
                lam[s] = np.einsum("ni,ni->n", img, field[s + 1])

    def rate(self, which: str, j: int) -> np.ndarray:
        """Signed rate of the ``which`` line over the step j -> j+1."""
        arr = {"s": self.lam_s, "c": self.lam_c, "u": self.lam_u}[which]
        return arr[self._slot(j)]

    def rate_product(self, which: str, j0: int, j1: int) -> np.ndarray:
        """Signed product of rates over steps j0 .. j1-1 (identity if equal)."""
        out = np.ones(self.count)
        for j in range(j0, j1):
            out = out * self.rate(which, j)
        return out

    def invariance_residual(self, j: int) -> float:
        """Sup deviation of the transported frames from the stored ones."""
        worst = 0.0
        for field in (self.e_s, self.e_c, self.e_u):
            img = _unit_rows(np.einsum("nij,nj->ni", self.jacobian(j),
                                       field[self._slot(j)]))
            sign = np.sign(np.einsum("ni,ni->n", img,
                                     field[self._slot(j + 1)]))
            worst = max(worst, float(np.max(np.linalg.norm(
                img * sign[:, None] - field[self._slot(j + 1)], axis=1))))
        return worst


def frame_fields_at(seq: DiffeoSequence, n: int, pts: np.ndarray,
                    depth: int = FRAME_DEPTH):
    """(e_s, e_c, e_u) at arbitrary points, via a fresh mini-ensemble."""
    ens = OrbitEnsemble(seq, pts, n0=n, back=0, fwd=0, depth=depth)
    s = ens._slot(0)
    return ens.e_s[s], ens.e_c[s], ens.e_u[s]


def ec_directional_derivative(seq: DiffeoSequence, n: int, pts: np.ndarray,
                              dirs: np.ndarray, step: float = 1e-5,
                              depth: int = FRAME_DEPTH) -> np.ndarray:
    """Directional derivative of the center line field, by central FD."""
    pts = np.atleast_2d(pts)
    dirs = _unit_rows(np.atleast_2d(dirs))
    _, plus, _ = frame_fields_at(seq, n, pts + step * dirs, depth)
    _, minus, _ = frame_fields_at(seq, n, pts - step * dirs, depth)
    return (plus - minus) / (2.0 * step)


def log_rate_field(seq: DiffeoSequence, n: int, pts: np.ndarray,
                   depth: int = FRAME_DEPTH) -> np.ndarray:
    """log ||Df_n(z) e_c(z)|| as a scalar field sample."""
    pts = np.atleast_2d(pts)
    _, ec, _ = frame_fields_at(seq, n, pts, depth)
    img = np.einsum("nij,nj->ni", seq.differentiate(n, pts), ec)
    return np.log(np.linalg.norm(img, axis=1))


def log_rate_gradient(seq: DiffeoSequence, n: int, pts: np.ndarray,
                      dirs: np.ndarray, step: float = 1e-5,
                      depth: int = FRAME_DEPTH) -> np.ndarray:
    """Directional derivative of log ||Df e_c|| along ``dirs``."""
    pts = np.atleast_2d(pts)
    dirs = _unit_rows(np.atleast_2d(dirs))
    plus = log_rate_field(seq, n, pts + step * dirs, depth)
    minus = log_rate_field(seq, n, pts - step * dirs, depth)
    return (plus - minus) / (2.0 * step)


def center_alignment_gradient(seq: DiffeoSequence, n: int, pts: np.ndarray,
                              dirs: np.ndarray, step: float = 1e-5,
                              depth: int = FRAME_DEPTH) -> np.ndarray:
    """Directional derivative of -log |e_c(z) . c_axis| along ``dirs``.

    This is the projection-derivative norm field: the center-leaf tangent
    normalized to unit center coordinate has length 1/|e_c . c_axis|.
    """
    pts = np.atleast_2d(pts)
    dirs = _unit_rows(np.atleast_2d(dirs))
    _, ec_p, _ = frame_fields_at(seq, n, pts + step * dirs, depth)
    _, ec_m, _ = frame_fields_at(seq, n, pts - step * dirs, depth)
    f_p = -np.log(np.abs(ec_p[:, 1]))
    f_m = -np.log(np.abs(ec_m[:, 1]))
    return (f_p - f_m) / (2.0 * step)
