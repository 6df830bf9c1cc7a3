"""Invariant manifolds through every point, by anchored graph transforms.

A leaf ``W*(x)`` is stored as a graph over its tangent coordinate block:
node values on a uniform grid over a box of half-width 2 around the base
point, interpolated cubically and continued affinely outside.  Stable-side
leaves (s, cs) are obtained by pulling flat graphs back from the forward
orbit; unstable-side leaves (u, cu) by pushing forward from the backward
orbit; the center leaf is solved nodewise from the cs and cu graphs.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .dynamics import DiffeoSequence
from .errors import NoContraction, SlopeBlowup, SolveFailure
from .interp import GridInterpolant

STARS = ("s", "c", "u", "cs", "cu")

_GRID_NODES_1D = 257          # box [-2, 2], h = 1/64
_GRID_NODES_2D = 63           # odd so the base is a node; 63*63 <= 2**12
_SLOPE_BUDGET = 1.0 / 3.0
_SLOPE_TOLERANCE = 0.05
_NEWTON_TOL = 1e-13
_NEWTON_MAXIT = 40


def star_axes(dims, star: str):
    """Coordinate indices of the graph domain and its complement."""
    s, c = dims.s_dim, dims.c_dim
    blocks = {"s": list(range(0, s)),
              "c": list(range(s, s + c)),
              "u": list(range(s + c, dims.k))}
    picks = {"s": ["s"], "c": ["c"], "u": ["u"],
             "cs": ["s", "c"], "cu": ["c", "u"]}
    dom = [i for b in picks[star] for i in blocks[b]]
    perp = [i for i in range(dims.k) if i not in dom]
    return dom, perp


@dataclass
class GraphManifold:
    """A leaf stored as a discretized graph through its base point."""

    star: str
    n: int
    base: np.ndarray
    dom: list
    perp: list
    interp: GridInterpolant
    slope_sup: float = 0.0
    history: list = field(default_factory=list)   # chain sup-differences

    def value(self, q, deriv: bool = False):
        return self.interp(q, deriv=deriv)

    def point(self, q) -> np.ndarray:
        """Embed domain coordinates into the ambient space."""
        q = np.asarray(q, dtype=float)
        single = q.ndim <= (0 if len(self.dom) == 1 else 1)
        qs = np.atleast_1d(q).reshape(-1, len(self.dom))
        vals = self.interp(qs if len(self.dom) > 1 else qs[:, 0])
        out = np.empty((qs.shape[0], len(self.dom) + len(self.perp)))
        out[:, self.dom] = qs
        out[:, self.perp] = vals
        return out[0] if single else out

    def transversal_distance(self, pts: np.ndarray) -> np.ndarray:
        """|perp(pt) - G(dom(pt))| for ambient points near the graph."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        qs = pts[:, self.dom]
        vals = self.interp(qs if len(self.dom) > 1 else qs[:, 0])
        return np.linalg.norm(pts[:, self.perp] - vals, axis=1)

    def tangent_basis(self, q=None) -> np.ndarray:
        """Orthonormal basis of the graph tangent at domain coords ``q``."""
        if q is None:
            q = self.base[self.dom]
        qs = np.atleast_2d(np.asarray(q, dtype=float)).reshape(1, -1)
        _, dv = self.interp(qs if len(self.dom) > 1 else qs[0, 0],
                            deriv=True)
        dv = np.atleast_2d(dv)
        if len(self.dom) == 1:
            dv = dv.reshape(-1, 1)
        k = len(self.dom) + len(self.perp)
        basis = np.zeros((k, len(self.dom)))
        for a, i in enumerate(self.dom):
            basis[i, a] = 1.0
        for b, i in enumerate(self.perp):
            basis[i, :] = dv[b, :]
        qmat, _ = np.linalg.qr(basis)
        return qmat

    def node_coords(self) -> np.ndarray:
        if len(self.dom) == 1:
            return (self.interp.lo[0]
                    + self.interp.hs[0]
                    * np.arange(self.interp.shape[0]))[:, None]
        g0 = self.interp.lo[0] + self.interp.hs[0] * np.arange(self.interp.shape[0])
        g1 = self.interp.lo[1] + self.interp.hs[1] * np.arange(self.interp.shape[1])
        a, b = np.meshgrid(g0, g1, indexing="ij")
        return np.stack([a.ravel(), b.ravel()], axis=1)

    def node_points(self) -> np.ndarray:
        return self.point(self.node_coords() if len(self.dom) > 1
                          else self.node_coords()[:, 0])

    def sup_difference(self, other: "GraphManifold") -> float:
        """Sup distance of node values on the overlap of the two boxes."""
        coords = self.node_coords()
        lo = np.maximum(self.interp.lo, other.interp.lo)
        hi = np.minimum(self.interp.hi, other.interp.hi)
        keep = np.all((coords >= lo) & (coords <= hi), axis=1)
        if not np.any(keep):
            return float("inf")
        q = coords[keep]
        mine = self.interp(q if len(self.dom) > 1 else q[:, 0])
        theirs = other.interp(q if len(self.dom) > 1 else q[:, 0])
        return float(np.max(np.linalg.norm(mine - theirs, axis=1)))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        d, m = len(self.dom), len(self.perp)
        writer.writerow([f"dom{i}" for i in range(d)]
                        + [f"perp{i}" for i in range(m)]
                        + [f"dG{i}_{j}" for i in range(m) for j in range(d)])
        coords = self.node_coords()
        vals, derivs = self.interp(coords if d > 1 else coords[:, 0],
                                   deriv=True)
        derivs = derivs.reshape(len(coords), -1)
        for row in np.hstack([coords, vals, derivs]):
            writer.writerow([repr(float(v)) for v in row])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({
            "version": 1, "star": self.star, "n": self.n,
            "base": self.base.tolist(), "dom": self.dom, "perp": self.perp,
            "lo": self.interp.lo.tolist(), "h": self.interp.hs.tolist(),
            "shape": list(self.interp.shape),
            "values": self.interp.values.tolist(),
            "slope_sup": self.slope_sup,
        })

    @classmethod
    def from_json(cls, doc) -> "GraphManifold":
        if isinstance(doc, str):
            doc = json.loads(doc)
        if doc.get("version") != 1:
            raise ValueError("unknown graph container version")
        vals = np.array(doc["values"], dtype=float)
        interp = GridInterpolant(np.array(doc["lo"]), doc["h"], vals)
        return cls(doc["star"], doc["n"], np.array(doc["base"], dtype=float),
                   list(doc["dom"]), list(doc["perp"]), interp,
                   doc.get("slope_sup", 0.0))


def _grid_for(base_dom: np.ndarray, grid=None):
    """Per-axis (lo, steps, node counts) for a box around the base point.

    ``grid`` optionally overrides the default half-widths / node counts
    as a pair of per-axis sequences.
    """
    d = base_dom.size
    if grid is None:
        npts = [_GRID_NODES_1D] * d if d == 1 else [_GRID_NODES_2D] * d
        halfs = [2.0] * d
    else:
        halfs, npts = grid
    npts = [int(m) for m in npts]
    hs = np.array([2.0 * halfs[a] / (npts[a] - 1) for a in range(d)])
    lo = base_dom - np.asarray(halfs, dtype=float)
    return lo, hs, npts


def _slope_sup(interp: GridInterpolant, dom_len: int) -> float:
    if dom_len == 1:
        coords = interp.lo[0] + interp.hs[0] * np.arange(interp.shape[0])
        _, dv = interp(coords, deriv=True)
        slopes = np.linalg.norm(dv, axis=1)
    else:
        g0 = interp.lo[0] + interp.hs[0] * np.arange(interp.shape[0])
        g1 = interp.lo[1] + interp.hs[1] * np.arange(interp.shape[1])
        a, b = np.meshgrid(g0, g1, indexing="ij")
        pts = np.stack([a.ravel(), b.ravel()], axis=1)
        _, dv = interp(pts, deriv=True)
        slopes = np.linalg.norm(dv, axis=(1, 2), ord=2)
    return float(np.max(slopes))


def _graph_grid_spec(graph: GraphManifold):
    halfs = (graph.interp.hi - graph.interp.lo) / 2.0
    return halfs.tolist(), list(graph.interp.shape)


def _flat_graph(star: str, n: int, base: np.ndarray, dom, perp,
                grid=None) -> GraphManifold:
    lo, hs, npts = _grid_for(base[dom], grid)
    values = np.tile(base[perp], tuple(npts) + (1,))
    return GraphManifold(star, n, base.copy(), list(dom), list(perp),
                         GridInterpolant(lo, hs, values))


def _solve_nodes(map_eval, map_jac, dom, perp, old: GraphManifold,
                 coords: np.ndarray, init: np.ndarray) -> np.ndarray:
    """Newton solve, per node: perp(map(P)) = G_old(dom(map(P)))."""
    n_nodes = coords.shape[0]
    k = len(dom) + len(perp)
    g = init.copy()
    for _ in range(_NEWTON_MAXIT):
        pts = np.empty((n_nodes, k))
        pts[:, dom] = coords
        pts[:, perp] = g
        img = map_eval(pts)
        dom_img = img[:, dom] if len(dom) > 1 else img[:, dom[0]]
        old_vals, old_derivs = old.interp(dom_img, deriv=True)
        resid = img[:, perp] - old_vals
        worst = float(np.max(np.linalg.norm(resid, axis=1)))
        if worst <= _NEWTON_TOL:
            return g
        jac = map_jac(pts)                       # (N, k, k)
        dimg_dg = jac[:, :, perp]                # (N, k, pd)
        if old_derivs.ndim == 2:
            old_derivs = old_derivs[:, :, None]
        jr = dimg_dg[:, perp, :] - np.einsum(
            "nmd,ndp->nmp", old_derivs, dimg_dg[:, dom, :])
        try:
            step = np.linalg.solve(jr, resid[:, :, None])[:, :, 0]
        except np.linalg.LinAlgError as exc:
            raise SolveFailure(f"singular node Jacobian: {exc}") from exc
        g = g - step
    raise SolveFailure(
        f"nodewise solve stalled (residual {worst:.3e} > {_NEWTON_TOL})")


def graph_transform_step(seq: DiffeoSequence, star: str, n: int,
                         graph: GraphManifold, new_base: np.ndarray,
                         check_slope: bool = True) -> GraphManifold:
    """One anchored transform step producing the graph through ``new_base``.

    For s/cs the input graph lives at index ``n+1`` and is pulled back
    through ``f_n``; for u/cu it lives at ``n-1`` and is pushed forward
    (solved through ``f_{n-1}^{-1}``).
    """
    dom, perp = graph.dom, graph.perp
    lo, hs, npts = _grid_for(new_base[dom], _graph_grid_spec(graph))
    if len(dom) == 1:
        coords = (lo[0] + hs[0] * np.arange(npts[0]))[:, None]
    else:
        g0 = lo[0] + hs[0] * np.arange(npts[0])
        g1 = lo[1] + hs[1] * np.arange(npts[1])
        a, b = np.meshgrid(g0, g1, indexing="ij")
        coords = np.stack([a.ravel(), b.ravel()], axis=1)
    init = np.tile(new_base[perp], (coords.shape[0], 1))
    if star in ("s", "cs"):
        map_eval = lambda pts: seq.evaluate(n, pts)
        map_jac = lambda pts: seq.differentiate(n, pts)
    elif star in ("u", "cu"):
        map_eval = lambda pts: seq.invert(n - 1, pts)

        def map_jac(pts):
            pre = seq.invert(n - 1, pts)
            return np.linalg.inv(seq.differentiate(n - 1, pre))
    else:
        raise ValueError("direct transform steps exist for s/cs/u/cu only")
    g = _solve_nodes(map_eval, map_jac, dom, perp, graph, coords, init)
    if len(dom) == 1:
        values = g
    else:
        values = g.reshape(npts[0], npts[1], len(perp))
    # pin the graph through its base point (the center node), removing
    # the accumulated interpolation bias of the chain
    center = tuple((m - 1) // 2 for m in npts)
    values = values + (new_base[perp] - values[center])
    interp = GridInterpolant(lo, hs, values)
    slope = _slope_sup(interp, len(dom))
    if check_slope and slope > _SLOPE_BUDGET + _SLOPE_TOLERANCE:
        raise SlopeBlowup(
            f"graph slope {slope:.4f} exceeds 1/3 + 0.05 for star={star}; "
            "eps' too large for the spectral gap")
    return GraphManifold(star, n, new_base.copy(), list(dom), list(perp),
                         interp, slope)


def _chain(seq: DiffeoSequence, star: str, n: int, x: np.ndarray,
           depth: int, grid=None) -> GraphManifold:
    """Depth-``depth`` anchored transform chain ending at (star, n, x)."""
    dom, perp = star_axes(seq.dims, star)
    if star in ("s", "cs"):
        orbit = [np.asarray(x, dtype=float)]
        for j in range(depth):
            orbit.append(seq.evaluate(n + j, orbit[-1]))
        g = _flat_graph(star, n + depth, orbit[depth], dom, perp, grid)
        for j in range(depth - 1, -1, -1):
            g = graph_transform_step(seq, star, n + j, g, orbit[j])
            g.n = n + j
    else:
        orbit = [np.asarray(x, dtype=float)]
        for j in range(depth):
            orbit.append(seq.invert(n - 1 - j, orbit[-1]))
        g = _flat_graph(star, n - depth, orbit[depth], dom, perp, grid)
        for j in range(depth - 1, -1, -1):
            g = graph_transform_step(seq, star, n - j, g, orbit[j])
            g.n = n - j
    return g


def compute_manifold(seq: DiffeoSequence, star: str, n: int, x: np.ndarray,
                     tol: float = 1e-8, burn_in: int = 6,
                     max_depth: int = 80, grid=None) -> GraphManifold:
    """Fixed point of the graph transform through ``x`` at index ``n``.

    The chain depth grows until successive chains differ by less than
    ``tol`` in sup norm; differences must decrease geometrically.
    """
    x = np.asarray(x, dtype=float)
    if star == "c":
        return _center_manifold(seq, n, x, tol=tol, burn_in=burn_in,
                                max_depth=max_depth)
    if star not in STARS:
        raise ValueError(f"unknown star {star!r}")
    if seq.is_linear:
        return _chain(seq, star, n, x, 1, grid)
    prev = _chain(seq, star, n, x, burn_in, grid)
    history = []
    depth = burn_in
    while depth < max_depth:
        depth += 2
        cur = _chain(seq, star, n, x, depth, grid)
        change = cur.sup_difference(prev)
        history.append(change)
        if change < tol:
            cur.history = history
            return cur
        if len(history) >= 10 and history[-1] > 0.9 * history[-10]:
            raise NoContraction(
                f"graph-transform differences stalled: {history[-10:]}")
        prev = cur
    raise NoContraction(f"no convergence below {tol} at depth {max_depth}")


# The center construction only queries its cs / cu parents on a thin band
# around the leaf, so those parents use anisotropic boxes: fine resolution
# along the center axis, a narrow strip transversally.  This keeps the
# parents' interpolation floor at the 1-d level within the node budget.
_CENTER_BAND_HALF = 0.09
_CENTER_BAND_NODES = 7
_CENTER_AXIS_NODES = 513


def _center_manifold(seq: DiffeoSequence, n: int, x: np.ndarray,
                     tol: float = 1e-8, burn_in: int = 6,
                     max_depth: int = 80) -> GraphManifold:
    """Center leaf solved nodewise from narrow-band cs and cu graphs."""
    cs_grid = ([_CENTER_BAND_HALF, 2.0], [_CENTER_BAND_NODES,
                                          _CENTER_AXIS_NODES])
    cu_grid = ([2.0, _CENTER_BAND_HALF], [_CENTER_AXIS_NODES,
                                          _CENTER_BAND_NODES])
    cs = compute_manifold(seq, "cs", n, x, tol=tol, burn_in=burn_in,
                          max_depth=max_depth, grid=cs_grid)
    cu = compute_manifold(seq, "cu", n, x, tol=tol, burn_in=burn_in,
                          max_depth=max_depth, grid=cu_grid)
    dims = seq.dims
    dom, perp = star_axes(dims, "c")
    lo, hs, npts_list = _grid_for(x[dom])
    h = hs[0]
    npts = npts_list[0]
    coords = lo[0] + h * np.arange(npts)
    s_slice = slice(0, dims.s_dim)
    u_slice = slice(dims.s_dim + dims.c_dim, dims.k)
    s_val = np.tile(x[s_slice], (npts, 1)).astype(float)
    u_val = np.tile(x[u_slice], (npts, 1)).astype(float)
    for it in range(200):
        # s = G_cu(c, u), u = G_cs(s, c): damped alternating fixed point,
        # contraction rate <= slope_cs * slope_cu <= 1/9
        cu_args = np.column_stack([coords, u_val])
        new_s = cu.interp(cu_args)
        cs_args = np.column_stack([new_s, coords])
        new_u = cs.interp(cs_args)
        change = max(float(np.max(np.abs(new_s - s_val))),
                     float(np.max(np.abs(new_u - u_val))))
        s_val, u_val = new_s, new_u
        if change < 1e-14:
            break
    else:
        raise SolveFailure("center nodewise solve did not settle")
    values = np.column_stack([s_val, u_val])
    values = values + (x[perp] - values[(npts - 1) // 2])
    interp = GridInterpolant(np.array([lo[0]]), h, values)
    slope = _slope_sup(interp, 1)
    if slope > _SLOPE_BUDGET + _SLOPE_TOLERANCE:
        raise SlopeBlowup(f"center graph slope {slope:.4f} over budget")
    return GraphManifold("c", n, x.copy(), dom, perp, interp, slope)


def tangent_space(seq: DiffeoSequence, star: str, n: int, x: np.ndarray,
                  graph: GraphManifold | None = None) -> np.ndarray:
    """Orthonormal tangent basis of the leaf at its base point."""
    if graph is None:
        graph = compute_manifold(seq, star, n, np.asarray(x, dtype=float))
    q = np.asarray(x, dtype=float)[graph.dom]
    return graph.tangent_basis(q if len(graph.dom) > 1 else q[0])


RATE_WINDOWS = {
    "s": ("eta", "kappa"),
    "c": ("gamma", "gamma_hat"),
    "u": ("kappa_hat", "eta_hat"),
    "cs": ("eta", "gamma_hat"),
    "cu": ("gamma", "eta_hat"),
}


@dataclass
class RateReport:
    star: str
    n: int
    lo: float
    hi: float
    ratios: np.ndarray = field(repr=False)

    @property
    def worst_low_margin(self) -> float:
        return float(np.min(self.ratios - self.lo))

    @property
    def worst_high_margin(self) -> float:
        return float(np.min(self.hi - self.ratios))

    @property
    def passed(self) -> bool:
        return self.worst_low_margin >= 0.0 and self.worst_high_margin >= 0.0


def verify_rates(seq: DiffeoSequence, star: str, n: int, x: np.ndarray,
                 graph: GraphManifold, adjusted, count: int = 1000,
                 seed: int = 0) -> RateReport:
    """Two-sided rate sandwich on leaf samples within distance 1/2."""
    rng = np.random.default_rng(seed)
    x = np.asarray(x, dtype=float)
    d = len(graph.dom)
    offs = rng.uniform(-0.45, 0.45, size=(count, d))
    if d > 1:
        offs /= np.maximum(np.linalg.norm(offs, axis=1, keepdims=True)
                           / 0.45, 1.0)
    qs = x[graph.dom] + offs
    ys = graph.point(qs if d > 1 else qs[:, 0])
    keep = np.linalg.norm(ys - x, axis=1) <= 0.5
    ys = ys[keep]
    fx = seq.evaluate(n, x)
    fys = seq.evaluate(n, ys)
    num = np.linalg.norm(fys - fx[None, :], axis=1)
    den = np.linalg.norm(ys - x[None, :], axis=1)
    ratios = num / den
    lo_name, hi_name = RATE_WINDOWS[star]
    slot = 0 if len(getattr(adjusted, lo_name)) == 1 else n
    lo = float(np.exp(getattr(adjusted, lo_name)[slot]))
    hi = float(np.exp(getattr(adjusted, hi_name)[slot]))
    return RateReport(star, n, lo, hi, ratios)


def invariance_gap(seq: DiffeoSequence, n: int, graph: GraphManifold,
                   next_graph: GraphManifold, limit: float = 1.5) -> float:
    """Sup over nodes of the distance from f(leaf) to the next leaf.

    Nodes whose image leaves the next graph's box are skipped (the graphs
    only represent the leaves on boxes of half-width 2).
    """
    pts = graph.node_points()
    imgs = seq.evaluate(n, pts)
    qs = imgs[:, next_graph.dom]
    inside = np.all(np.abs(qs - next_graph.base[next_graph.dom]) <= limit,
                    axis=1)
    if not np.any(inside):
        return float("nan")
    return float(np.max(next_graph.transversal_distance(imgs[inside])))


@dataclass
class SubfoliationReport:
    max_leaf_deviation: float
    max_overlap_gap: float
    tol: float

    @property
    def passed(self) -> bool:
        return (self.max_leaf_deviation <= 5.0 * self.tol
                and self.max_overlap_gap <= 5.0 * self.tol)


def subfoliation_check(seq: DiffeoSequence, n: int, x: np.ndarray,
                       count: int = 10, tol: float = 1e-8,
                       seed: int = 0) -> SubfoliationReport:
    """W^s leaves through points of W^cs(x) stay inside W^cs(x)."""
    rng = np.random.default_rng(seed)
    x = np.asarray(x, dtype=float)
    cs = compute_manifold(seq, "cs", n, x, tol=tol)
    dev = 0.0
    overlap_gap = 0.0
    base_s = compute_manifold(seq, "s", n, x, tol=tol)
    for _ in range(count):
        q = x[cs.dom] + rng.uniform(-0.8, 0.8, size=2)
        y = cs.point(q)
        leaf = compute_manifold(seq, "s", n, y, tol=tol)
        nodes = leaf.node_points()
        keep = np.all(np.abs(nodes[:, cs.dom] - x[cs.dom]) <= 1.5, axis=1)
        if np.any(keep):
            dev = max(dev, float(np.max(
                cs.transversal_distance(nodes[keep]))))
        # coincidence: a stable leaf through a point of W^s(x) matches
        z = base_s.point(x[base_s.dom][0] + 0.3)
        leaf_z = compute_manifold(seq, "s", n, z, tol=tol)
        overlap_gap = max(overlap_gap, leaf_z.sup_difference(base_s))
    return SubfoliationReport(dev, overlap_gap, tol)


def leaf_family(seq: DiffeoSequence, star: str, n: int,
                points: np.ndarray, tol: float = 1e-8):
    """Graphs through several base points plus a continuity record."""
    graphs = [compute_manifold(seq, star, n, p, tol=tol) for p in points]
    moduli = []
    for i in range(len(graphs) - 1):
        d = float(np.linalg.norm(graphs[i].base - graphs[i + 1].base))
        if d > 0:
            moduli.append(graphs[i].sup_difference(graphs[i + 1]) / d)
    return graphs, moduli
