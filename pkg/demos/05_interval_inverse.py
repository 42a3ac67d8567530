"""Recover a potential on [0, pi] from two spectra and from Weyl samples."""
import numpy as np

from star_sl.interval_inverse import spectra_from_potential, two_spectra_reconstruct, weyl_fit_reconstruct
from star_sl.sl_core import Potential, relative_l2_error
from star_sl.weyl import weyl_m

truth = Potential.cosine([0.3, -0.2, 0.25])

# Neumann-Dirichlet and Dirichlet-Dirichlet eigenvalues.
nu, theta = spectra_from_potential(truth, 30)
fit = two_spectra_reconstruct(nu, theta, n_basis=8, n_use=30)
print("two spectra:", np.round(fit.potential.coefficients(4), 6),
      f"error {relative_l2_error(fit.potential, truth):.1e}")

# The Weyl function on the negative axis determines the potential too,
# though the fit has to be guided past spurious minima.
lam = -np.arange(1.0, 41.0)
samples = np.column_stack([lam, weyl_m(truth, lam, "neumann")])
fit = weyl_fit_reconstruct(samples, 8)
print("Weyl samples:", np.round(fit.potential.coefficients(4), 6),
      f"error {relative_l2_error(fit.potential, truth):.1e}, {len(fit.starts_tried)} attempt(s)")
