# Strength of connection and coarsening
#
# Coarsening runs on the graph of the strength matrix S, not on A itself:
# weak couplings are filtered first, then a maximal independent set or an
# aggregation carves out the coarse degrees of freedom.

import numpy as np

from amgforge import coarsening, problems, smoothers, sparse, strength

# On the anisotropic problem the classical strength function keeps only the
# strong x-direction couplings: coarsening becomes semicoarsening.
n, eps = 5, 1e-3
an = problems.fe_anisotropic(n, eps)
s = strength.strength_matrix(an, strength.StrengthConfig("classical_sym", 0.25))
print("anisotropic strength neighbors of the center vertex:",
      s.neighbors(n * n // 2), "(x-line only)")

# On the checkerboard jump problem the strength graph disconnects the
# low-coefficient quadrants from the rest.
jump, _ = problems.fe_jump_coefficient(8, 1e-3)
sj = strength.strength_matrix(jump, strength.StrengthConfig("classical_sym", 0.25))
labels = sparse.connected_components(sj.graph)
print("jump strength graph components:", labels.max() + 1)

# Greedy MIS on a path keeps every third vertex; aggregation pairs the rest.
path = strength.full_strength(problems.laplace_1d(9))
split = coarsening.mis(path)
print("\nMIS on the 9-path:", split.coarse_indices.tolist())
print("independent and maximal:", coarsening.check_mis(path, split))
agg = coarsening.greedy_aggregate(path)
print("greedy aggregates:", agg.labels.tolist())

# Pairwise aggregation greedily matches by the local two-level quality score;
# a second pass composes the pairs into size-4 aggregates.
pw = coarsening.pairwise_aggregate(problems.laplace_1d(8), passes=2)
print("pairwise (2 passes):", pw.labels.tolist())

# Aggressive coarsening places coarse points at strength-graph distance >= 3
# by taking path powers of S before the MIS.
split_aggr = coarsening.aggressive_coarsen(path, 1, 2)
print("aggressive (1,2) coarse points:", split_aggr.coarse_indices.tolist())

# Compatible relaxation measures how well the smoother handles the fine
# variables alone, and promotes slow ones to C until it does.
t = problems.laplace_1d(31)
empty = coarsening.CFSplitting(np.zeros(31, dtype=bool))
refined, report = coarsening.cr_refine(t, smoothers.GaussSeidel, empty,
                                       strength.full_strength(t))
print(f"\ncompatible relaxation from an empty C: rho history "
      f"{[round(r, 3) for r in report.rho_history]}, added {report.added} points")
