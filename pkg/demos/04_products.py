"""Infinite products over eigenvalue sequences."""
import numpy as np

from star_sl.graph_spectra import StarProblem, find_eigenvalues
from star_sl.products import Asymptote, ZeroSequence, product_eval, representation_check
from star_sl.sl_core import Potential

# Zeros n^2 give sin(rho pi) / (rho pi); at lambda = 1/4 that is 2 / pi.
sine = ZeroSequence.from_pattern(Asymptote.sine(), 200)
print(f"product at 1/4: {product_eval(sine, 0.25):.12f}, 2/pi = {2 / np.pi:.12f}")

# Zeros of a perturbed star graph: the product tracks the trigonometric
# pattern up to a bounded remainder.
pots = [Potential.cosine(c) for c in ([0.2, -0.1, 0.05], [0.1, 0.1, 0.0],
                                      [-0.15, 0.05, 0.1], [0.0, -0.2, 0.1])]
zs = ZeroSequence.from_table(find_eigenvalues(StarProblem.L(4, 2, pots), 40))
rep = representation_check(zs)
print(f"fitted constant {rep.constant:.6f}, max deviation {rep.max_deviation:.2e}")
