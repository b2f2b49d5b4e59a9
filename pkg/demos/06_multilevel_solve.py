# Multilevel hierarchies and preconditioned conjugate gradients
#
# setup() repeats strength -> coarsen -> interpolate -> Galerkin until the
# coarsest level fits a dense pseudo-inverse.  The V(1,1) cycle with forward
# then backward Gauss-Seidel is symmetric, so it drops straight into PCG.

import numpy as np

from amgforge import hierarchy, problems

a = problems.fd_poisson_5pt(31)
h = hierarchy.setup(a, {"interpolation": "standard"})
print("level sizes:", h.level_sizes())
print(f"grid complexity {h.grid_complexity:.2f}, "
      f"operator complexity {h.operator_complexity:.2f}")

b = a.mat @ np.ones(a.n_rows)
x, report = hierarchy.pcg_solve(a, b, h, tol=1e-8)
print(f"\nPCG: {report.iterations} iterations, "
      f"factor {report.convergence_factor:.3f}, "
      f"error {np.abs(x - 1).max():.1e}")

# Iteration counts barely move under refinement: the grid-independence
# signature of multigrid.
for n in (16, 32, 64):
    an = problems.fd_poisson_5pt(n)
    hn = hierarchy.setup(an, {"interpolation": "standard"})
    bn = an.mat @ np.ones(an.n_rows)
    _, rep = hierarchy.pcg_solve(an, bn, hn, tol=1e-8)
    print(f"n={n:3d} ({an.n_rows:5d} unknowns): {rep.iterations} iterations")

# Singular (Neumann) systems work too: declare the kernel and PCG keeps
# iterates orthogonal to it.
neu = problems.fd_poisson_5pt(16, "neumann")
rng = np.random.default_rng(1)
x_exact = rng.standard_normal(neu.n_rows)
x_exact -= x_exact.mean()
x, rep = hierarchy.pcg_solve(neu, neu.mat @ x_exact, None, tol=1e-10,
                             kernel=np.ones((neu.n_rows, 1)))
print(f"\nNeumann solve: converged={rep.converged}, "
      f"mean(x)={x.mean():.1e}, error {np.abs(x - x_exact).max():.1e}")
