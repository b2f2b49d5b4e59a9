# The exact two-level convergence identity, live
#
# For an exact two-level method with smoother R and coarse space range(P),
# the A-norm of the error propagator satisfies |E|_A^2 = 1 - 1/K(V_c):
# the rate is entirely determined by how well the coarse space approximates
# in the Rbar^{-1} norm.  The analysis module measures both sides
# independently; this script watches them coincide, then builds the
# best-possible coarse space from the spectrum of Rbar A.

import numpy as np

from amgforge import analysis, coarsening, interpolation, problems, smoothers, strength

a = problems.laplace_1d(15)
gs = smoothers.GaussSeidel(a)
rbar = smoothers.symmetrize(gs)
s = strength.full_strength(a)
split = coarsening.mis(s)

print("builder            |E|_A^2      1-1/K        gap")
for build in ("ideal", "direct"):
    if build == "ideal":
        p = interpolation.ideal_interpolation(a, split)
    else:
        p = interpolation.direct_interpolation(a, split, s)
    rep = analysis.two_level_report(a, gs, p)
    print(f"{build:>8}      {rep.e_norm_sq:12.8f} {rep.rate_from_k:12.8f} "
          f"{rep.identity_gap:10.2e}")

# The optimal coarse space of dimension n_c is spanned by the eigenvectors
# of Rbar A with the n_c smallest eigenvalues, and its rate is 1 - mu_{n_c+1}.
p_opt, mu = analysis.optimal_coarse_space(a, rbar, 7)
rate_opt = analysis.two_level_error_norm(a, gs, p_opt) ** 2
print(f"\noptimal n_c=7 space: measured {rate_opt:.8f}, "
      f"1 - mu_8 = {1 - mu[7]:.8f}")

# No subspace of the same dimension does better (Ky-Fan trace bound).
rng = np.random.default_rng(0)
cands = [rng.standard_normal((15, 7)) for _ in range(20)]
report = analysis.trace_check(a, rbar, p_opt, cands)
print(f"trace bound sum(mu_1..7) = {report.bound:.6f}; optimal attains it: "
      f"{report.optimal_attains}; all 20 random candidates above: "
      f"{report.all_above}")

# Vectors classify as algebraically low/high frequency by comparing the
# A-energy with the Rbar^{-1} norm.
zeta_all, mu_all = analysis.optimal_coarse_space(a, rbar, 15)
print("\nlowest mode classified:",
      analysis.classify_frequencies(a, rbar, zeta_all[:, 0], 0.1, 0.9))
print("highest mode classified:",
      analysis.classify_frequencies(a, rbar, zeta_all[:, -1], 0.1, 0.9))
