"""The transfer matrix over [0, pi] has unit determinant for every lambda."""
import numpy as np

from star_sl.fixtures import random_potential
from star_sl.sl_core import Potential, fundamental_at_pi

rng = np.random.default_rng(0)
worst = 0.0
for _ in range(20):
    p = random_potential(rng, 0.5)
    lam = rng.uniform(-5.0, 100.0)
    worst = max(worst, abs(fundamental_at_pi(p, lam).wronskian_defect))
print(f"largest |C S' - C' S - 1| over 20 draws: {worst:.1e}")

# A step potential is integrated piece by piece.
step = Potential.step_function([(0.0, 1.0), (np.pi / 2, -1.0)])
print("step potential at lambda = 3:", fundamental_at_pi(step, 3.0))
