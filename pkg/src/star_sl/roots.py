"""Batched bracketing on the signed spectral variable s, lam = s |s|.

Working in s instead of lam keeps the bisection tolerance comparable to a
tolerance in rho = sqrt(lam) for positive eigenvalues, while still covering
negative lam.
"""
from __future__ import annotations

import numpy as np


def lam_of(s):
    s = np.asarray(s, dtype=float)
    return s * np.abs(s)


def s_of(lam):
    lam = np.asarray(lam, dtype=float)
    return np.sign(lam) * np.sqrt(np.abs(lam))


def sign_changes(values) -> np.ndarray:
    """Indices i with values[i] and values[i+1] of strictly opposite sign."""
    v = np.asarray(values)
    return np.nonzero(np.sign(v[:-1]) * np.sign(v[1:]) < 0)[0]


def bisect_batch(fn, lo, hi, tol: float = 1e-12, flo=None, fhi=None):
    """Vectorized bisection of ``fn`` (array in s -> array) on brackets [lo, hi].

    Every bracket must carry a sign change; exact zeros at an endpoint are
    returned as they are.
    """
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    if lo.size == 0:
        return lo
    flo = fn(lo) if flo is None else np.array(flo, dtype=float)
    fhi = fn(hi) if fhi is None else np.array(fhi, dtype=float)
    done_lo = flo == 0
    done_hi = fhi == 0
    if np.any((np.sign(flo) * np.sign(fhi) > 0)):
        raise ValueError("bracket without sign change")
    width = np.max(hi - lo)
    n_iter = int(np.ceil(np.log2(max(width, tol) / tol))) + 1
    for _ in range(n_iter):
        mid = 0.5 * (lo + hi)
        fm = fn(mid)
        left = np.sign(fm) * np.sign(flo) <= 0
        hi = np.where(left, mid, hi)
        fhi = np.where(left, fm, fhi)
        lo = np.where(left, lo, mid)
        flo = np.where(left, flo, fm)
    root = 0.5 * (lo + hi)
    root = np.where(done_lo, lo, root)
    root = np.where(done_hi & ~done_lo, hi, root)
    return root
