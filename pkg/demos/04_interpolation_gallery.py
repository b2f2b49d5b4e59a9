# A gallery of prolongation builders
#
# Everything that defines a coarse space lives in one matrix P.  The ideal
# interpolation is the exact harmonic extension (dense, desk-scale only);
# direct/standard/multipass are its sparse classical approximations;
# aggregation stacks indicator or near-kernel blocks; energy minimization
# solves the constrained trace problem over prescribed supports.

import numpy as np

from amgforge import coarsening, interpolation, problems, strength

a = problems.laplace_1d(9)
s = strength.full_strength(a)
split = coarsening.CFSplitting(np.arange(9) % 2 == 1)

p_ideal = interpolation.ideal_interpolation(a, split)
print("ideal interpolation column (the 1/2, 1, 1/2 stencil):")
print(p_ideal.toarray()[:, 1])

p_direct = interpolation.direct_interpolation(a, split, s)
p_std = interpolation.standard_interpolation(a, split, s)
print("direct == standard here (A_FF is diagonal):",
      np.allclose(p_direct.toarray(), p_std.toarray()))

# Multipass handles aggressive coarsening, where some F points have no
# coarse neighbor and must interpolate through nearer F points.
split_aggr = coarsening.aggressive_coarsen(s, 1, 2)
p_multi = interpolation.multipass_interpolation(a, split_aggr, s)
print("multipass row sums:", p_multi.toarray().sum(axis=1))

# Aggregation-based: piecewise constants, then smoothed.
part = coarsening.greedy_aggregate(s)
p_ua = interpolation.ua_prolongation(part)
p_sa = interpolation.sa_prolongation(p_ua, a, nu=1)
print("\nUA nonzeros per column:",
      np.diff(p_ua.matrix.mat.tocsc().indptr).tolist())
print("SA nonzeros per column:",
      np.diff(p_sa.matrix.mat.tocsc().indptr).tolist())

# Multi-vector aggregation preserves supplied near-kernel vectors exactly:
# here, 2D rigid-body modes.
coords = [(float(i), float(j)) for j in range(3) for i in range(3)]
z = np.column_stack(problems.rigid_body_vectors(coords))
part2 = coarsening.AggregatePartition(
    np.repeat(np.array([0, 0, 0, 0, 0, 1, 1, 1, 1]), 2), 2)
p_rigid = interpolation.ua_prolongation(part2, z)
worst = max(np.abs(p_rigid.matrix.mat @ np.eye(6)[j::3].sum(0) - z[:, j]).max()
            for j in range(3))
print("rigid-body preservation defect:", worst)

# Energy minimization over 3-node supports on the Neumann path reproduces
# the coarse hat functions exactly.
n = 9
neu = problems.laplace_1d(n, "neumann")
sup = tuple(np.array([i for i in (c - 1, c, c + 1) if 0 <= i < n])
            for c in range(0, n, 2))
p_emin = interpolation.energy_min_prolongation(neu, interpolation.SupportSet(sup))
print("\nenergy-min interior column:", p_emin.toarray()[:, 1])
