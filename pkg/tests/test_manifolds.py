"""Graph-transform manifolds: exactness, rates, invariance, refinement."""

import numpy as np
import pytest

import phlab.manifolds as mf
from phlab.interp import GridInterpolant
from phlab.manifolds import (GraphManifold, compute_manifold,
                             graph_transform_step, invariance_gap,
                             leaf_family, star_axes, subfoliation_check,
                             tangent_space, verify_rates)


@pytest.fixture(scope="module")
def leaves(perturbed_seq):
    x = np.array([0.05, 0.3, -0.02])
    return {star: compute_manifold(perturbed_seq, star, 0, x, tol=1e-8)
            for star in ("s", "c", "u", "cs", "cu")}, x


class TestLinearExactness:
    @pytest.mark.parametrize("star", ["s", "c", "u", "cs", "cu"])
    def test_flat_to_1e12(self, linear_seq, star):
        x = np.array([0.3, -0.2, 0.1])
        g = compute_manifold(linear_seq, star, 0, x)
        flat = np.tile(x[g.perp], g.interp.values.shape[:-1] + (1,))
        assert float(np.max(np.abs(g.interp.values - flat))) <= 1e-12
        assert g.slope_sup <= 1e-12

    def test_tilted_graph_one_step_slope(self, linear_seq):
        # slope contracts by |B^-1||A| = 0.25 per pullback step
        dom, perp = star_axes(linear_seq.dims, "s")
        npts = 257
        h = 4.0 / (npts - 1)
        coords = -2.0 + h * np.arange(npts)
        values = np.zeros((npts, 2))
        values[:, 0] = 0.2 * coords
        g = GraphManifold("s", 1, np.zeros(3), dom, perp,
                          GridInterpolant(np.array([-2.0]), h, values))
        out = graph_transform_step(linear_seq, "s", 0, g, np.zeros(3))
        expect = 0.05 * coords
        got = out.interp.values[:, 0]
        assert float(np.max(np.abs(got - expect))) < 1e-12
        assert out.slope_sup == pytest.approx(0.05, abs=1e-12)

    def test_far_base_point_is_affine_leaf(self, perturbed_seq):
        # the center component keeps every forward image outside the
        # perturbation ball, so the leaf is exactly the affine translate
        x = np.array([3.2, 1.1, -1.1])
        g = compute_manifold(perturbed_seq, "s", 0, x, tol=1e-8)
        flat = np.tile(x[g.perp], (g.interp.values.shape[0], 1))
        assert float(np.max(np.abs(g.interp.values - flat))) <= 1e-9


class TestPerturbedGraphs:
    def test_slope_budget(self, leaves):
        graphs, _ = leaves
        for g in graphs.values():
            assert g.slope_sup <= 1.0 / 3.0

    def test_passes_through_base(self, leaves):
        graphs, x = leaves
        for g in graphs.values():
            q = x[g.dom]
            val = g.interp(q if len(g.dom) > 1 else q[0])
            assert np.linalg.norm(val - x[g.perp]) <= 1e-9

    def test_invariance(self, perturbed_seq, leaves):
        graphs, x = leaves
        fx = perturbed_seq.evaluate(0, x)
        for star, g in graphs.items():
            nxt = compute_manifold(perturbed_seq, star, 1, fx, tol=1e-8)
            gap = invariance_gap(perturbed_seq, 0, g, nxt)
            assert gap <= 10.0 * 1e-8, (star, gap)

    def test_forward_contraction_oracle(self, perturbed_seq, ledger, leaves):
        # independent characterization of W^s: orbit norms contract at
        # e^(kappa_bar + 2 eps') against the base norm; float64 roundoff
        # in the unstable direction caps the verifiable horizon near j=12
        graphs, x = leaves
        g = graphs["s"]
        pts = g.node_points()
        keep = (np.linalg.norm(pts, axis=1) > 0.3) & \
               (np.abs(pts[:, 0] - x[0]) < 1.5)
        pts = pts[keep]
        base = np.linalg.norm(pts - np.zeros(3), axis=1)
        rate = ledger.kappa_bar + 2 * ledger.eps_prime
        # W^s(x) here passes near the origin orbit; measure contraction
        # of differences along pairs on the same leaf instead of norms
        ref = g.point(x[g.dom][0])
        cur = pts.copy()
        cur_ref = ref.copy()
        for j in range(1, 12):
            cur = perturbed_seq.evaluate(j - 1, cur)
            cur_ref = perturbed_seq.evaluate(j - 1, cur_ref)
            gaps = np.linalg.norm(cur - cur_ref[None, :], axis=1)
            base_gap = np.linalg.norm(pts - ref[None, :], axis=1)
            assert np.all(gaps <= np.exp(rate * j) * base_gap + 5e-8), j

    def test_off_leaf_control_fails_oracle(self, perturbed_seq, ledger,
                                           leaves):
        graphs, x = leaves
        g = graphs["s"]
        ref = g.point(x[g.dom][0])
        pt = g.point(x[g.dom][0] + 0.9) + np.array([0.0, 2e-2, 0.0])
        rate = ledger.kappa_bar + 2 * ledger.eps_prime
        cur, cur_ref = pt.copy(), ref.copy()
        base_gap = np.linalg.norm(pt - ref)
        violated = False
        for j in range(1, 12):
            cur = perturbed_seq.evaluate(j - 1, cur)
            cur_ref = perturbed_seq.evaluate(j - 1, cur_ref)
            if np.linalg.norm(cur - cur_ref) > np.exp(rate * j) * base_gap:
                violated = True
                break
        assert violated

    def test_monotone_convergence_ratio(self, perturbed_seq, ledger, leaves):
        # chain sup-differences contract at least at the spectral-gap rate
        graphs, _ = leaves
        hist = graphs["s"].history
        assert len(hist) >= 1
        budget = np.exp(float(np.max(
            ledger.adjusted.kappa - ledger.adjusted.gamma))) + 0.05
        for a, b in zip(hist, hist[1:]):
            if a > 1e-13:
                # chains advance two depths per comparison
                assert b / a <= budget ** 2

    def test_grid_refinement(self, perturbed_seq, monkeypatch):
        x = np.array([0.05, 0.3, -0.02])
        vals = {}
        for npts in (65, 129, 257):
            monkeypatch.setattr(mf, "_GRID_NODES_1D", npts)
            g = compute_manifold(perturbed_seq, "s", 0, x, tol=1e-10)
            qs = np.linspace(x[0] - 1.0, x[0] + 1.0, 33)
            vals[npts] = g.interp(qs)
        change1 = float(np.max(np.abs(vals[129] - vals[65])))
        change2 = float(np.max(np.abs(vals[257] - vals[129])))
        assert change2 <= change1 / 4.0 + 1e-14


class TestTangentSpaces:
    def test_linear_exact(self, linear_seq):
        x = np.array([0.1, 0.2, 0.3])
        basis = tangent_space(linear_seq, "s", 0, x)
        assert np.allclose(np.abs(basis[:, 0]), [1.0, 0.0, 0.0], atol=1e-12)

    def test_sum_spans_cs(self, perturbed_seq, leaves):
        from phlab.linalg import principal_angles
        graphs, x = leaves
        bs = graphs["s"].tangent_basis(x[graphs["s"].dom][0])
        bc = graphs["c"].tangent_basis(x[graphs["c"].dom][0])
        bcs = graphs["cs"].tangent_basis(x[graphs["cs"].dom])
        span = np.column_stack([bs, bc])
        ang = principal_angles(span, bcs)
        assert float(np.max(ang)) < 1e-6


class TestRates:
    def test_linear_stable_ratio(self, linear_seq, ledger):
        x = np.array([0.0, 0.1, 0.0])
        g = compute_manifold(linear_seq, "s", 0, x)
        rep = verify_rates(linear_seq, "s", 0, x, g, ledger.adjusted,
                           count=100)
        assert rep.passed
        assert np.allclose(rep.ratios, 0.25, atol=1e-12)

    def test_linear_center_ratio(self, linear_seq, ledger):
        x = np.array([0.1, 0.0, -0.3])
        g = compute_manifold(linear_seq, "c", 0, x)
        rep = verify_rates(linear_seq, "c", 0, x, g, ledger.adjusted,
                           count=100)
        assert rep.passed
        assert np.allclose(rep.ratios, 1.0, atol=1e-12)

    @pytest.mark.parametrize("star", ["s", "c", "u", "cs", "cu"])
    def test_perturbed_sandwiches(self, perturbed_seq, ledger, leaves, star):
        graphs, x = leaves
        rep = verify_rates(perturbed_seq, star, 0, x, graphs[star],
                           ledger.adjusted, count=1000, seed=7)
        assert rep.passed, (star, rep.worst_low_margin, rep.worst_high_margin)


class TestSubfoliation:
    def test_linear_exact(self, linear_seq):
        rep = subfoliation_check(linear_seq, 0, np.array([0.0, 0.2, 0.0]),
                                 count=3, tol=1e-8)
        assert rep.max_leaf_deviation <= 1e-10
        assert rep.passed

    def test_perturbed(self, perturbed_seq):
        rep = subfoliation_check(perturbed_seq, 0,
                                 np.array([0.05, 0.3, -0.02]), count=5,
                                 tol=1e-8)
        assert rep.passed, (rep.max_leaf_deviation, rep.max_overlap_gap)


class TestLeafFamily:
    def test_coincidence_on_same_leaf(self, perturbed_seq, leaves):
        graphs, x = leaves
        g = graphs["s"]
        y = g.point(x[g.dom][0] + 0.4)
        gy = compute_manifold(perturbed_seq, "s", 0, y, tol=1e-8)
        assert g.sup_difference(gy) <= 5e-8

    def test_family_has_finite_modulus(self, perturbed_seq):
        pts = np.array([[0.0, 0.1, 0.0], [0.0, 0.25, 0.0], [0.0, 0.4, 0.0]])
        graphs, moduli = leaf_family(perturbed_seq, "s", 0, pts)
        assert len(graphs) == 3
        assert all(np.isfinite(m) for m in moduli)


class TestSerialization:
    def test_json_round_trip(self, leaves):
        graphs, _ = leaves
        g = graphs["s"]
        g2 = GraphManifold.from_json(g.to_json())
        assert np.array_equal(g2.interp.values, g.interp.values)
        assert g2.star == g.star

    def test_csv_header_and_rows(self, leaves):
        graphs, _ = leaves
        text = graphs["s"].to_csv()
        lines = text.splitlines()
        assert lines[0].split(",")[:3] == ["dom0", "perp0", "perp1"]
        assert len(lines) == 1 + 257
