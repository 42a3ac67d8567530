"""Shifted sine and cosine families stay uniformly conditioned."""
import numpy as np

from star_sl.riesz import frame_bound_check, hilbert_form_diag

for beta in (0.125, 0.25, 0.3):
    rep = frame_bound_check(beta, 200, "sin", seed=1)
    print(f"beta={beta}: observed [{rep.min_ratio:.4f}, {rep.max_ratio:.4f}]"
          f" within [{rep.lower:.4f}, {rep.upper:.4f}]: {rep.passed}")

# The diagonal series behind those bounds has a closed form.
for beta in (0.125, 0.25, 0.3):
    exact = (np.pi / np.sin(2 * np.pi * beta)) ** 2
    print(f"beta={beta}: series {hilbert_form_diag(beta):.10f}, closed form {exact:.10f}")
