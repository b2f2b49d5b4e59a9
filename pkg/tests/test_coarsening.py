import numpy as np

from amgforge import coarsening, problems, smoothers, sparse, strength
from amgforge.coarsening import (CFSplitting,
                                 aggregates_from_cf, aggressive_coarsen,
                                 check_mis, cr_refine, greedy_aggregate, mis,
                                 pairwise_aggregate)
from amgforge.strength import StrengthConfig, full_strength, strength_matrix


def path_strength(n):
    return full_strength(problems.laplace_1d(n))


class TestMis:
    def test_path_of_five(self):
        split = mis(path_strength(5))
        assert split.coarse_indices.tolist() == [0, 3]

    def test_edgeless_graph_all_coarse(self):
        a = sparse.from_dense(np.diag([1.0, 2.0, 3.0, 4.0]), sparse.SYMMETRIC)
        s = full_strength(a)
        assert mis(s).n_coarse == 4

    def test_independent_and_maximal(self):
        s = full_strength(problems.fd_poisson_5pt(4))
        split = mis(s)
        assert check_mis(s, split)

    def test_path_of_nine_leftover_promoted(self):
        split = mis(path_strength(9))
        assert split.coarse_indices.tolist() == [0, 3, 6, 8]
        assert check_mis(path_strength(9), split)

    def test_relabeling_equivariance(self):
        a = problems.fd_poisson_5pt(3)
        base = mis(full_strength(a))
        rng = np.random.default_rng(4)
        perm = rng.permutation(9)  # new vertex i holds old vertex perm[i]
        pmat = np.eye(9)[perm]
        a_perm = sparse.from_dense(pmat @ a.toarray() @ pmat.T, sparse.SYMMETRIC)
        invperm = np.argsort(perm)
        split_perm = mis(full_strength(a_perm), order=invperm)
        assert np.array_equal(split_perm.is_coarse, base.is_coarse[perm])

    def test_determinism(self):
        s = full_strength(problems.fd_poisson_5pt(4))
        assert np.array_equal(mis(s).is_coarse, mis(s).is_coarse)


class TestGreedyAggregate:
    def test_path_of_five(self):
        part = greedy_aggregate(path_strength(5))
        assert part.labels.tolist() == [0, 0, 1, 1, 1]

    def test_complete_graph_single_aggregate(self):
        a = sparse.from_dense(4 * np.eye(4) - np.ones((4, 4)), sparse.SYMMETRIC)
        part = greedy_aggregate(full_strength(a))
        assert part.n_aggregates == 1

    def test_grid_aggregates_connected_and_sized(self):
        s = full_strength(problems.fd_poisson_5pt(4))
        part = greedy_aggregate(s)
        sizes = part.sizes()
        assert sizes.min() >= 2 and sizes.max() <= 9
        for k in range(part.n_aggregates):
            assert _connected_in(s, part.members(k))

    def test_isolated_vertex_flagged(self):
        a = sparse.from_dense(
            np.diag([2.0, 2.0, 1.0]) - np.array([[0, 1, 0], [1, 0, 0], [0, 0, 0]]),
            sparse.SYMMETRIC)
        part = greedy_aggregate(full_strength(a))
        assert 2 in part.isolated


def _connected_in(s, members):
    members = set(int(m) for m in members)
    if not members:
        return False
    start = next(iter(members))
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for w in s.neighbors(v):
            if int(w) in members and int(w) not in seen:
                seen.add(int(w))
                stack.append(int(w))
    return seen == members


class TestPairwise:
    def test_tridiag4_pairs(self):
        part = pairwise_aggregate(problems.laplace_1d(4))
        assert part.labels.tolist() == [0, 0, 1, 1]

    def test_single_vertex(self):
        a = sparse.from_dense([[2.0]], sparse.SYMMETRIC)
        part = pairwise_aggregate(a)
        assert part.n_aggregates == 1

    def test_two_passes_compose(self):
        part = pairwise_aggregate(problems.laplace_1d(8), passes=2)
        assert part.n_aggregates == 2
        assert np.array_equal(part.sizes(), [4, 4])

    def test_aggregates_connected(self):
        a = problems.fd_poisson_5pt(4)
        part = pairwise_aggregate(a, passes=2)
        s = full_strength(a)
        for k in range(part.n_aggregates):
            assert _connected_in(s, part.members(k))


class TestAggressive:
    def test_path_of_nine_distance(self):
        s = path_strength(9)
        split = aggressive_coarsen(s, 1, 2)
        coarse = split.coarse_indices
        assert len(coarse) >= 2
        # pairwise distance >= 3 in the original strength graph
        dist = {}
        for c in coarse:
            d = sparse.bfs_distance(s.graph, [c])
            for c2 in coarse:
                if c2 != c:
                    assert d[c2] >= 3

    def test_unit_parameters_reduce_to_mis(self):
        s = full_strength(problems.fd_poisson_5pt(4))
        assert np.array_equal(aggressive_coarsen(s, 1, 1).is_coarse, mis(s).is_coarse)

    def test_no_denser_than_mis(self):
        s = full_strength(problems.fd_poisson_5pt(6))
        assert aggressive_coarsen(s, 2, 2).n_coarse <= mis(s).n_coarse


class TestCompatibleRelaxation:
    def test_perfect_coarsening_untouched(self):
        t = problems.laplace_1d(31)
        split = CFSplitting(np.arange(31) % 2 == 1)
        refined, report = cr_refine(t, smoothers.GaussSeidel, split,
                                    full_strength(t))
        assert report.rho_history[0] <= 0.45
        assert report.added == 0
        assert np.array_equal(refined.is_coarse, split.is_coarse)

    def test_empty_coarse_set_triggers_refinement(self):
        t = problems.laplace_1d(31)
        split = CFSplitting(np.zeros(31, dtype=bool))
        refined, report = cr_refine(t, smoothers.GaussSeidel, split,
                                    full_strength(t))
        assert report.rho_history[0] > 0.7  # close to the full smoother rate
        assert report.added > 0
        assert refined.n_coarse > 0

    def test_anisotropic_full_coarsening_refined_along_lines(self):
        n, eps = 8, 1e-4
        a = problems.fe_anisotropic(n, eps)
        s = strength_matrix(a, StrengthConfig("classical_sym", 0.25))
        # aggressive full coarsening in both directions: every 4th point
        is_coarse = np.zeros(n * n, dtype=bool)
        for j in range(0, n, 4):
            for i in range(0, n, 4):
                is_coarse[j * n + i] = True
        refined, report = cr_refine(a, smoothers.GaussSeidel,
                                    CFSplitting(is_coarse), s,
                                    max_rounds=6, seed=1)
        assert refined.n_coarse > is_coarse.sum()
        assert report.rho_history[-1] <= report.rho_history[0]

    def test_rounds_exhausted_flagged(self):
        t = problems.laplace_1d(31)
        split = CFSplitting(np.zeros(31, dtype=bool))
        _, report = cr_refine(t, smoothers.GaussSeidel, split,
                              full_strength(t), delta_f=0.01, max_rounds=1)
        assert not report.converged


def test_aggregates_from_cf_covers():
    s = full_strength(problems.fd_poisson_5pt(4))
    split = mis(s)
    part = aggregates_from_cf(split, s)
    assert part.n_aggregates == split.n_coarse
    assert (part.labels >= 0).all()
