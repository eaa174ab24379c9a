import itertools
from collections import deque

import numpy as np
import pytest
from scipy import stats

from funclingam.curves import CurvePanel, build_time_grid
from funclingam.discovery import BinaryGraph, DiscoveryConfig
from funclingam.exceptions import DataError, InsufficientDataError
from funclingam.metrics import (
    CellResult,
    benchmark,
    confusion,
    evaluate,
    gaussianity_scan,
    jarque_bera_pvalues,
    shd,
)

PAIRS3 = [(a, b) for a in range(3) for b in range(3) if a != b]


def graph_from_mask(mask):
    return BinaryGraph.from_edges(3, [e for k, e in enumerate(PAIRS3) if mask >> k & 1])


def bfs_edit_distances(start):
    """Shortest edit paths from ``start`` over all 64 directed 3-node graphs.

    Moves: insert an absent edge, delete a present edge, or reverse a present
    edge whose opposite is absent.
    """
    index = {e: k for k, e in enumerate(PAIRS3)}
    dist = {start: 0}
    queue = deque([start])
    while queue:
        g = queue.popleft()
        nxt = []
        for k, (a, b) in enumerate(PAIRS3):
            nxt.append(g ^ (1 << k))
            back = index[(b, a)]
            if g >> k & 1 and not g >> back & 1:
                nxt.append(g & ~(1 << k) | (1 << back))
        for h in nxt:
            if h not in dist:
                dist[h] = dist[g] + 1
                queue.append(h)
    return dist


class TestConfusion:
    def test_identity(self):
        g = BinaryGraph.chain(3)
        m = confusion(g, g)
        assert (m.precision, m.recall, m.f1, m.tp) == (1.0, 1.0, 1.0, 2)

    def test_half(self):
        pred = BinaryGraph.from_edges(3, [(0, 1), (0, 2)])
        m = confusion(pred, BinaryGraph.chain(3))
        assert (m.precision, m.recall, m.f1) == (0.5, 0.5, 0.5)

    def test_empty_prediction(self):
        m = confusion(BinaryGraph(np.zeros((4, 4))), BinaryGraph.chain(4))
        assert (m.precision, m.recall, m.f1) == (0.0, 0.0, 0.0)

    def test_reversal_is_fp_and_fn(self):
        m = confusion(BinaryGraph.from_edges(2, [(1, 0)]), BinaryGraph.chain(2))
        assert (m.tp, m.fp, m.fn) == (0, 1, 1)

    def test_shape_mismatch(self):
        with pytest.raises(DataError):
            confusion(BinaryGraph.chain(3), BinaryGraph.chain(4))

    def test_f1_consistency_all_3node(self):
        for a in range(64):
            for b in range(0, 64, 7):
                m = confusion(graph_from_mask(a), graph_from_mask(b))
                if m.precision + m.recall > 0:
                    assert m.f1 == 2 * m.precision * m.recall / (m.precision + m.recall)
                assert m.tp + m.fp == len(graph_from_mask(a).edges())
                assert m.tp + m.fn == len(graph_from_mask(b).edges())


class TestShd:
    def test_identical(self):
        assert shd(BinaryGraph.chain(5), BinaryGraph.chain(5)) == 0

    def test_one_reversal(self):
        pred = BinaryGraph.from_edges(3, [(0, 1), (2, 1)])
        assert shd(pred, BinaryGraph.chain(3)) == 1

    @pytest.mark.parametrize("p", [2, 5, 10])
    def test_empty_vs_chain(self, p):
        assert shd(BinaryGraph(np.zeros((p, p))), BinaryGraph.chain(p)) == p - 1

    def test_exhaustive_three_node_oracle(self):
        for a in range(64):
            dist = bfs_edit_distances(a)
            ga = graph_from_mask(a)
            for b in range(64):
                assert shd(ga, graph_from_mask(b)) == dist[b], (a, b)

    def test_symmetric(self):
        for a, b in itertools.product(range(64), repeat=2):
            assert shd(graph_from_mask(a), graph_from_mask(b)) == shd(graph_from_mask(b), graph_from_mask(a))


class TestGaussianityScan:
    def _panel(self, values):
        n, w = values.shape
        return CurvePanel(values.reshape(n, 1, w), build_time_grid(w))

    def test_matches_scipy(self, rng):
        x = rng.gamma(2.0, size=(300, 40))
        pv, deg = jarque_bera_pvalues(x)
        expected = [stats.jarque_bera(x[:, k]).pvalue for k in range(40)]
        np.testing.assert_allclose(pv, expected, rtol=1e-8, atol=1e-300)
        assert not deg.any()

    def test_size_on_normal(self):
        x = np.random.default_rng(1).normal(size=(1000, 200))
        rate = gaussianity_scan(self._panel(x)).rejection_fraction(0.05)
        assert 0.02 <= rate <= 0.10

    def test_power_on_chisquare(self):
        x = np.random.default_rng(2).chisquare(1, size=(500, 200))
        assert gaussianity_scan(self._panel(x)).rejection_fraction(0.05) >= 0.95

    def test_constant_column_flagged(self, rng):
        x = rng.normal(size=(50, 5))
        x[:, 2] = 1.5
        scan = gaussianity_scan(self._panel(x))
        assert scan.degenerate[0, 2] and scan.pvalues[0, 2] == 0.0
        assert scan.degenerate.sum() == 1

    def test_needs_twenty(self, rng):
        with pytest.raises(InsufficientDataError):
            gaussianity_scan(self._panel(rng.normal(size=(19, 4))))


class TestBenchmark:
    def test_single_trial_deterministic(self):
        a = benchmark([(60, 3)], trials=1, seed=4, synth={"w": 100})
        b = benchmark([(60, 3)], trials=1, seed=4, synth={"w": 100})
        assert a.to_dict() == b.to_dict()
        assert a.cell(60, 3).seeds == [4]

    def test_summary_shape(self):
        t = benchmark([(60, 2), (60, 3)], trials=2, seed=0, synth={"w": 100})
        rows = t.rows()
        assert {(r["n"], r["p"]) for r in rows} == {(60, 2), (60, 3)}
        assert all(r["sd"] >= 0 and r["trials"] == 2 for r in rows)

    def test_failures_recorded(self):
        t = benchmark([(30, 2)], trials=2, seed=0, synth={"w": 50}, config=DiscoveryConfig(M=40))
        cell = t.cell(30, 2)
        assert len(cell.failures) == 2 and cell.failed and t.failed

    def test_adding_perfect_trial_never_lowers_means(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            recs = [{"precision": p, "recall": r, "f1": 0.0, "shd": 1} for p, r in rng.uniform(size=(5, 2))]
            before = CellResult(1, 1, 5, list(range(5)), recs).summary()
            perfect = {"precision": 1.0, "recall": 1.0, "f1": 1.0, "shd": 0}
            after = CellResult(1, 1, 6, list(range(6)), recs + [perfect]).summary()
            assert after["precision"][0] >= before["precision"][0]
            assert after["recall"][0] >= before["recall"][0]

    def test_evaluate_has_shd(self):
        m = evaluate(BinaryGraph(np.zeros((5, 5))), BinaryGraph.chain(5))
        assert m.shd == 4 and m.recall == 0
