"""Eigenvalues of a star graph, first with zero potentials, then perturbed."""
import numpy as np

from star_sl.graph_spectra import StarProblem, find_eigenvalues
from star_sl.sl_core import Potential

# Four edges, Neumann at the pendant ends of edges 1 and 2, Dirichlet elsewhere.
zero = StarProblem.L(4, 2, [Potential.zero()] * 4)
table = find_eigenvalues(zero, 6)

# With sigma = 0 each branch sits on a shifted integer lattice.
for k in range(1, 5):
    print(f"branch {k}: rho =", np.round(np.sqrt(table.branch(k)), 6))

# Small cosine potentials move every eigenvalue by O(1/n).
pots = [Potential.cosine(c) for c in ([0.2, -0.1, 0.05], [0.1, 0.1, 0.0],
                                      [-0.15, 0.05, 0.1], [0.0, -0.2, 0.1])]
perturbed = find_eigenvalues(StarProblem.L(4, 2, pots), 6)
shift = np.sqrt(perturbed.branch(1)) - np.sqrt(table.branch(1))
print("branch 1 shift in rho:", np.round(shift, 5))
print("notes:", perturbed.notes or "none")
