"""Zeros of C(pi, .) and S(pi, .) for a single edge.

The zeros are the eigenvalues of the edge problem with y^[1](0) = 0 (kind
"C") or y(0) = 0 (kind "S") and y(pi) = 0.  They are simple, real and
bounded below by -max(sigma^2), which follows from the quadratic form
int |y^[1]|^2 - sigma^2 |y|^2.  Completeness of a scan is checked against
the Sturm node count of the solution at the top of the scan range.
"""
from __future__ import annotations

import numpy as np

from .roots import bisect_batch, lam_of, s_of, sign_changes
from .sl_core import DEFAULT_STEPS, Potential, QuasiState, solution_on_grid, transfer_matrix


class SpectrumError(RuntimeError):
    """Root scan inconsistent with the expected count or multiplicities."""


_INIT = {"C": QuasiState(1.0, 0.0), "S": QuasiState(0.0, 1.0)}


def edge_function(p: Potential, kind: str, n_steps: int = DEFAULT_STEPS):
    """s -> C(pi, s|s|) or S(pi, s|s|)."""
    if kind not in _INIT:
        raise ValueError(f"kind must be 'C' or 'S', got {kind!r}")

    def fn(s):
        C, S, _, _ = transfer_matrix(p, lam_of(s), n_steps)
        return C if kind == "C" else S

    return fn


def lower_bound(p: Potential) -> float:
    return -(p.sup_norm() ** 2) - 1.0


def node_count(p: Potential, kind: str, lam: float, n_steps: int = DEFAULT_STEPS) -> int:
    """Number of zeros in (0, pi) of the kind's solution: eigenvalues below lam."""
    ys, _ = solution_on_grid(p, lam, _INIT[kind], n_steps)
    ys = ys[1:]
    nz = ys[ys != 0.0]
    return int(np.count_nonzero(np.sign(nz[:-1]) != np.sign(nz[1:])))


def edge_zeros(p: Potential, kind: str, rho_max: float, n_steps: int = DEFAULT_STEPS,
               step: float = 1.0 / 32, tol: float = 1e-12) -> np.ndarray:
    """All zeros lam < rho_max^2 of C(pi, lam) or S(pi, lam), ascending."""
    fn = edge_function(p, kind, n_steps)
    s_lo = -np.sqrt(-lower_bound(p))
    # the node count is ambiguous when a zero sits at the top; move the top off it
    top = rho_max
    while abs(fn(np.array([top]))[0]) < 1e-3 / max(1.0, top):
        top += 1e-2
    expected = node_count(p, kind, top ** 2, n_steps)
    for _ in range(4):
        grid = np.concatenate([np.arange(s_lo, 0.0, step), np.arange(0.0, top, step), [top]])
        vals = fn(grid)
        exact = grid[vals == 0.0]
        idx = sign_changes(vals)
        roots = bisect_batch(fn, grid[idx], grid[idx + 1], tol=tol, flo=vals[idx], fhi=vals[idx + 1])
        roots = np.sort(np.concatenate([roots, exact]))
        if roots.size == expected:
            return lam_of(roots[roots < rho_max])
        step /= 4
    raise SpectrumError(
        f"edge scan found {roots.size} zeros of {kind}(pi, .) below rho={rho_max}, "
        f"node count says {expected}")


def edge_zeros_count(p: Potential, kind: str, count: int, n_steps: int = DEFAULT_STEPS) -> np.ndarray:
    """The ``count`` smallest zeros of C(pi, .) or S(pi, .)."""
    rho_max = count + 1.0
    while True:
        z = edge_zeros(p, kind, rho_max, n_steps)
        if z.size >= count:
            return z[:count]
        rho_max += 2.0


def signed_rho(lam) -> np.ndarray:
    return s_of(lam)
