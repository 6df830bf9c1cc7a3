"""Local cubic interpolation on uniform grids with affine far-field.

Graphs of invariant manifolds are stored as node values on a uniform grid
over a box; queries inside the box use 4-point Lagrange interpolation per
axis (exact on cubics, so the local error is quartic in the step), and
queries outside continue the graph affinely from the nearest edge point.
"""

from __future__ import annotations

import numpy as np


def _lagrange_weights(t: np.ndarray):
    """Weights and t-derivatives for nodes at offsets (-1, 0, 1, 2)."""
    w = np.empty(t.shape + (4,))
    dw = np.empty_like(w)
    w[..., 0] = -t * (t - 1.0) * (t - 2.0) / 6.0
    w[..., 1] = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0
    w[..., 2] = -(t + 1.0) * t * (t - 2.0) / 2.0
    w[..., 3] = (t + 1.0) * t * (t - 1.0) / 6.0
    dw[..., 0] = -(3.0 * t * t - 6.0 * t + 2.0) / 6.0
    dw[..., 1] = (3.0 * t * t - 4.0 * t - 1.0) / 2.0
    dw[..., 2] = -(3.0 * t * t - 2.0 * t - 2.0) / 2.0
    dw[..., 3] = (3.0 * t * t - 1.0) / 6.0
    return w, dw


class GridInterpolant:
    """Vector-valued cubic interpolant on a uniform d-grid (d in {1, 2}).

    The step ``h`` may be a scalar or one value per axis.
    """

    def __init__(self, lo: np.ndarray, h, values: np.ndarray):
        self.lo = np.atleast_1d(np.asarray(lo, dtype=float))
        harr = np.atleast_1d(np.asarray(h, dtype=float))
        if harr.size == 1:
            harr = np.full(self.lo.size, float(harr[0]))
        self.hs = harr
        self.h = float(harr[0])
        self.values = np.asarray(values, dtype=float)
        self.d = self.lo.size
        if self.d == 1:
            if self.values.ndim == 1:
                self.values = self.values[:, None]
            self.shape = (self.values.shape[0],)
        elif self.d == 2:
            if self.values.ndim == 2:
                self.values = self.values[:, :, None]
            self.shape = self.values.shape[:2]
        else:
            raise ValueError("only 1-d and 2-d grids supported")
        self.m = self.values.shape[-1]

    @property
    def hi(self) -> np.ndarray:
        return self.lo + self.hs * (np.array(self.shape) - 1)

    def __call__(self, q, deriv: bool = False):
        q = np.asarray(q, dtype=float)
        single = q.ndim == (0 if self.d == 1 else 1)
        if self.d == 1:
            pts = np.atleast_1d(q).astype(float)
            val, dval = self._eval_1d(pts)
        else:
            pts = np.atleast_2d(q).astype(float)
            val, dval = self._eval_2d(pts)
        if single:
            val = val[0]
            dval = dval[0]
        return (val, dval) if deriv else val

    # -- 1-d ---------------------------------------------------------------

    def _eval_1d(self, q: np.ndarray):
        npts = self.shape[0]
        lo, hi = self.lo[0], self.hi[0]
        qc = np.clip(q, lo, hi)
        s = (qc - lo) / self.hs[0]
        cell = np.clip(np.floor(s).astype(int), 1, npts - 3) \
            if npts >= 4 else np.zeros_like(s, dtype=int)
        t = s - cell
        w, dw = _lagrange_weights(t)
        idx = cell[:, None] + np.arange(-1, 3)[None, :]
        vals = self.values[idx, :]            # (N, 4, m)
        v = np.einsum("nf,nfm->nm", w, vals)
        dv = np.einsum("nf,nfm->nm", dw, vals) / self.hs[0]
        out_lo = q < lo
        out_hi = q > hi
        if np.any(out_lo) or np.any(out_hi):
            v = v + dv * (q - qc)[:, None]
        return v, dv

    # -- 2-d ---------------------------------------------------------------

    def _eval_2d(self, q: np.ndarray):
        n0, n1 = self.shape
        lo, hi = self.lo, self.hi
        qc = np.clip(q, lo, hi)
        out = q - qc
        svals = (qc - lo) / self.hs[None, :]
        cells = np.empty_like(svals, dtype=int)
        cells[:, 0] = np.clip(np.floor(svals[:, 0]).astype(int), 1, n0 - 3)
        cells[:, 1] = np.clip(np.floor(svals[:, 1]).astype(int), 1, n1 - 3)
        t = svals - cells
        w0, dw0 = _lagrange_weights(t[:, 0])
        w1, dw1 = _lagrange_weights(t[:, 1])
        idx0 = cells[:, 0][:, None] + np.arange(-1, 3)[None, :]
        idx1 = cells[:, 1][:, None] + np.arange(-1, 3)[None, :]
        patch = self.values[idx0[:, :, None], idx1[:, None, :], :]  # (N,4,4,m)
        v = np.einsum("na,nb,nabm->nm", w0, w1, patch)
        d0 = np.einsum("na,nb,nabm->nm", dw0, w1, patch) / self.hs[0]
        d1 = np.einsum("na,nb,nabm->nm", w0, dw1, patch) / self.hs[1]
        dv = np.stack([d0, d1], axis=2)       # (N, m, 2)
        if np.any(out != 0.0):
            v = v + np.einsum("nmd,nd->nm", dv, out)
        return v, dv
