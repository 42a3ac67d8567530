"""Weyl functions, their sums at eigenvalues, and the pair D1, D2."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .graph_spectra import SpectrumTable, StarProblem
from .sl_core import DEFAULT_STEPS, Potential, transfer_matrix

POLE_TOL = 1e-10


class PoleError(ArithmeticError):
    """A Weyl-function denominator vanished (within tolerance) at a requested point."""


class AssumptionError(RuntimeError):
    """An assumption of the inverse problem fails on the supplied data."""


class AssumptionPoleError(AssumptionError, PoleError):
    """(A1)/(A2): a known Weyl function has a pole at a given eigenvalue."""


def _ratio(num, den, what: str):
    num = np.asarray(num)
    den = np.asarray(den)
    bad = np.abs(den) < POLE_TOL * (1.0 + np.abs(num))
    if np.any(bad):
        raise PoleError(f"{what}: pole at {int(np.count_nonzero(bad))} point(s)")
    return -num / den


def weyl_m(p: Potential, lam, bc: str = "neumann", n_steps: int = DEFAULT_STEPS):
    """M(lam) = -C^[1]/C (``bc="neumann"``) or -S^[1]/S (``bc="dirichlet"``) at x = pi."""
    C, S, C1, S1 = transfer_matrix(p, lam, n_steps)
    if bc == "neumann":
        out = _ratio(C1, C, "M = -C1/C")
    elif bc == "dirichlet":
        out = _ratio(S1, S, "M = -S1/S")
    else:
        raise ValueError("bc must be 'neumann' or 'dirichlet'")
    return out[()]


def _known_edges(prob: StarProblem):
    """(index, bc) of the edges other than 1 and p+1, with their L-type condition."""
    p = prob.p
    return [(j, "neumann" if j < p else "dirichlet") for j in range(prob.m) if j not in (0, p)]


def g_values(prob: StarProblem, lam, n_steps: int = DEFAULT_STEPS) -> np.ndarray:
    """-sum of M_j over the known edges at the given points."""
    lam = np.asarray(lam, dtype=float)
    total = np.zeros_like(lam)
    for j, bc in _known_edges(prob):
        total = total - weyl_m(prob.potentials[j], lam, bc, n_steps)
    return total


@dataclass
class WeylSamples:
    g: dict[tuple[int, int], float] = field(default_factory=dict)
    hN: dict[tuple[int, int], float] = field(default_factory=dict)
    h: dict[tuple[int, int], float] = field(default_factory=dict)

    @staticmethod
    def _enc(d):
        return {f"{n}:{k}": float(v) for (n, k), v in d.items()}

    @staticmethod
    def _dec(d):
        out = {}
        for key, v in d.items():
            n, k = key.split(":")
            out[(int(n), int(k))] = float(v)
        return out

    def to_json(self) -> str:
        return json.dumps({"g": self._enc(self.g), "hN": self._enc(self.hN), "h": self._enc(self.h)})

    @classmethod
    def from_json(cls, text: str) -> "WeylSamples":
        data = json.loads(text)
        return cls(*(cls._dec(data.get(key, {})) for key in ("g", "hN", "h")))


def weyl_sum_g(probL: StarProblem, specL: SpectrumTable, n_steps: int = DEFAULT_STEPS,
               zero_tol: float = 1e-8) -> dict[tuple[int, int], float]:
    """g_nk = M_1 + M_{p+1} at lam_nk, computed from the known edges only.

    The potentials on edges 1 and p+1 of ``probL`` are ignored.
    """
    sel = specL.select(range(1, 5))
    try:
        g = g_values(probL, sel.lam, n_steps)
    except PoleError as exc:
        raise AssumptionPoleError(f"(A1) violated: {exc}") from exc
    small = np.abs(g) <= zero_tol * np.maximum(1.0, np.sqrt(np.abs(sel.lam)))
    if np.any(small):
        bad = [(int(n), int(k)) for n, k in zip(sel.n[small], sel.k[small])]
        raise AssumptionError(f"(A4) violated: g_nk = 0 at {bad[:6]}")
    return {(int(n), int(k)): float(v) for n, k, v in zip(sel.n, sel.k, g)}


def d_functions(sigma1: Potential, sigma_p1: Potential, lam, n_steps: int = DEFAULT_STEPS):
    """D1 = -(C1^[1] S_{p+1} + C1 S_{p+1}^[1]),  D2 = C1 S_{p+1} at x = pi."""
    C, _, C1, _ = transfer_matrix(sigma1, lam, n_steps)
    _, S, _, S1 = transfer_matrix(sigma_p1, lam, n_steps)
    D1 = -(C1 * S + C * S1)
    D2 = C * S
    return D1[()], D2[()]


def weyl_sums_h(probL0: StarProblem, specL0: SpectrumTable, sum_m1_mp1,
                n_steps: int = DEFAULT_STEPS):
    """(h^N_nk, h_nk) at the L0 eigenvalues of branches 1 and 2.

    ``sum_m1_mp1`` evaluates M_1 + M_{p+1} on an array of lambda values.
    """
    sel = specL0.select((1, 2))
    try:
        hN = g_values(probL0, sel.lam, n_steps)
    except PoleError as exc:
        raise AssumptionPoleError(f"(A2) violated: {exc}") from exc
    h = np.asarray(sum_m1_mp1(sel.lam), dtype=float)
    if np.any(~np.isfinite(h)):
        raise PoleError("M_1 + M_{p+1} not finite at an L0 eigenvalue")
    if np.any(np.abs(hN - h) <= POLE_TOL * (1.0 + np.abs(hN))):
        raise AssumptionError("h^N_nk = h_nk: C_{p+1} S_{p+1} would be infinite")
    keys = [(int(n), int(k)) for n, k in zip(sel.n, sel.k)]
    return dict(zip(keys, map(float, hN))), dict(zip(keys, map(float, h)))
