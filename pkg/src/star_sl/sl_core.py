"""Potentials and the quasi-derivative Sturm-Liouville system on [0, pi].

The equation -(y^[1])' - sigma y^[1] - sigma^2 y = lam y with y^[1] = y' - sigma y
is integrated as the first-order system

    y'     = sigma y + y^[1]
    y^[1]' = -(lam + sigma^2) y - sigma y^[1]

whose coefficient matrix is traceless with determinant ``lam``.  For a
constant sigma its exponential is ``cos(rho x) I + sin(rho x)/rho A``, so
piecewise-constant potentials are propagated exactly.  Cosine-series
potentials use the fourth-order Magnus scheme on a uniform grid; every step
is again the exponential of a traceless 2x2 matrix, which keeps the
Wronskian equal to one up to rounding.
"""
from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

PI = np.pi
DEFAULT_STEPS = 2000
_CHUNK = 1024


class IntegrationError(RuntimeError):
    """Raised when the propagated state stops being finite."""


@dataclass(frozen=True)
class Potential:
    """A real potential sigma on [0, pi].

    Exactly one of the two representations is active:

    * ``fourier_cos``: coefficients ``a_r`` of ``sum_r a_r cos(r x)``;
    * ``steps``: pairs ``(x_i, v_i)``; sigma equals ``v_i`` on ``[x_i, x_{i+1})``.
      The first breakpoint must be 0.
    """

    fourier_cos: tuple[float, ...] | None = None
    steps: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if (self.fourier_cos is None) == (self.steps is None):
            raise ValueError("exactly one of fourier_cos / steps must be given")
        if self.fourier_cos is not None:
            coeffs = tuple(float(a) for a in self.fourier_cos)
            if not coeffs:
                coeffs = (0.0,)
            if not all(np.isfinite(coeffs)):
                raise ValueError("non-finite Fourier coefficient")
            object.__setattr__(self, "fourier_cos", coeffs)
        else:
            steps = tuple((float(x), float(v)) for x, v in self.steps)
            if not steps:
                raise ValueError("empty step list")
            xs = [x for x, _ in steps]
            if xs[0] != 0.0:
                raise ValueError("first breakpoint must be 0")
            if any(b <= a for a, b in zip(xs, xs[1:])) or xs[-1] >= PI:
                raise ValueError("breakpoints must increase strictly inside [0, pi)")
            if not all(np.isfinite([v for _, v in steps])):
                raise ValueError("non-finite step value")
            object.__setattr__(self, "steps", steps)

    # constructors -----------------------------------------------------
    @classmethod
    def zero(cls) -> "Potential":
        return cls(fourier_cos=(0.0,))

    @classmethod
    def constant(cls, value: float) -> "Potential":
        return cls(fourier_cos=(float(value),))

    @classmethod
    def cosine(cls, coeffs) -> "Potential":
        return cls(fourier_cos=tuple(np.asarray(coeffs, dtype=float).ravel()))

    @classmethod
    def step_function(cls, pairs) -> "Potential":
        return cls(steps=tuple((float(x), float(v)) for x, v in pairs))

    # properties -------------------------------------------------------
    @property
    def is_piecewise_constant(self) -> bool:
        if self.steps is not None:
            return True
        return all(a == 0.0 for a in self.fourier_cos[1:])

    def pieces(self) -> list[tuple[float, float]]:
        """(length, value) pieces for a piecewise-constant potential."""
        if self.steps is not None:
            xs = [x for x, _ in self.steps] + [PI]
            return [(xs[i + 1] - xs[i], v) for i, (_, v) in enumerate(self.steps)]
        if self.is_piecewise_constant:
            return [(PI, self.fourier_cos[0])]
        raise ValueError("potential is not piecewise constant")

    def sup_norm(self) -> float:
        """An upper bound for max |sigma|."""
        if self.steps is not None:
            return max(abs(v) for _, v in self.steps)
        return float(np.sum(np.abs(self.fourier_cos)))

    def l2_norm(self) -> float:
        if self.steps is not None:
            return float(np.sqrt(sum(L * v * v for L, v in self.pieces())))
        a = np.asarray(self.fourier_cos)
        return float(np.sqrt(PI * a[0] ** 2 + 0.5 * PI * np.sum(a[1:] ** 2)))

    def coefficients(self, size: int | None = None) -> np.ndarray:
        if self.fourier_cos is None:
            raise ValueError("step potential has no cosine coefficients")
        a = np.asarray(self.fourier_cos, dtype=float)
        if size is None:
            return a.copy()
        out = np.zeros(size)
        out[: min(size, a.size)] = a[:size]
        return out

    def __call__(self, x):
        return eval_sigma(self, x)

    # serialization ----------------------------------------------------
    def to_dict(self) -> dict:
        if self.fourier_cos is not None:
            return {"fourier_cos": list(self.fourier_cos)}
        return {"steps": [list(s) for s in self.steps]}

    @classmethod
    def from_dict(cls, data: dict) -> "Potential":
        if "fourier_cos" in data and "steps" not in data:
            return cls(fourier_cos=tuple(data["fourier_cos"]))
        if "steps" in data and "fourier_cos" not in data:
            return cls(steps=tuple(tuple(s) for s in data["steps"]))
        raise ValueError("potential JSON needs exactly one of 'fourier_cos', 'steps'")

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Potential":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class QuasiState:
    y: complex | float
    y1: complex | float


@dataclass(frozen=True)
class FundamentalValues:
    """C, C^[1], S, S^[1] at x = pi for one lambda."""

    C: float
    C1: float
    S: float
    S1: float

    @property
    def wronskian_defect(self) -> float:
        return float(abs(self.S1 * self.C - self.C1 * self.S - 1.0))


def eval_sigma(p: Potential, x):
    """Value of sigma at x in [0, pi] (scalar or array)."""
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0.0) or np.any(xa > PI) or not np.all(np.isfinite(xa)):
        raise ValueError("x must lie in [0, pi]")
    if p.fourier_cos is not None:
        r = np.arange(len(p.fourier_cos))
        out = np.cos(np.multiply.outer(xa, r)) @ np.asarray(p.fourier_cos)
    else:
        xs = np.array([b for b, _ in p.steps])
        vs = np.array([v for _, v in p.steps])
        out = vs[np.searchsorted(xs, xa, side="right") - 1]
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# step matrices

def _expm_traceless(X, Y, Z):
    """exp([[X, Y], [Z, -X]]) = ch I + sh Omega with d = X^2 + Y Z."""
    d = X * X + Y * Z
    if np.iscomplexobj(d):
        u = np.sqrt(d)
        small = np.abs(u) < 1e-7
        us = np.where(small, 1.0, u)
        ch = np.cosh(u)
        sh = np.where(small, 1.0 + d / 6.0, np.sinh(us) / us)
    else:
        u = np.sqrt(np.abs(d))
        pos = d > 0
        us = np.where(u < 1e-7, 1.0, u)
        ch = np.where(pos, np.cosh(u), np.cos(u))
        sh = np.where(u < 1e-7, 1.0 + d / 6.0, np.where(pos, np.sinh(us), np.sin(us)) / us)
    return ch + sh * X, sh * Y, sh * Z, ch - sh * X


@lru_cache(maxsize=64)
def _magnus_nodes(p: Potential, n_steps: int):
    """Per-step Magnus data: Omega = P + lam Q with P, Q independent of lam."""
    h = PI / n_steps
    left = np.arange(n_steps) * h
    g = np.sqrt(3.0) / 6.0
    a1 = eval_sigma(p, left + (0.5 - g) * h)
    a2 = eval_sigma(p, left + (0.5 + g) * h)
    k = np.sqrt(3.0) * h * h / 12.0
    diff = a2 - a1
    X = 0.5 * h * (a1 + a2) + k * diff * (a1 + a2)
    Y = h + 2.0 * k * diff
    Z0 = -0.5 * h * (a1 * a1 + a2 * a2) - 2.0 * k * diff * a1 * a2
    Z1 = -h + 2.0 * k * diff  # coefficient of lam in Z
    return X, Y, Z0, Z1


def _piece_data(p: Potential):
    pieces = p.pieces()
    L = np.array([length for length, _ in pieces])
    v = np.array([val for _, val in pieces])
    # Omega = L * [[v, 1], [-(lam + v^2), -v]]
    return L * v, L, -L * v * v, -L


def _step_components(p: Potential, lam, n_steps: int):
    """Arrays (a, b, c, d) of shape (n_steps, n_lam) for each step matrix."""
    if p.is_piecewise_constant:
        X, Y, Z0, Z1 = _piece_data(p)
    else:
        X, Y, Z0, Z1 = _magnus_nodes(p, n_steps)
    lam = lam[None, :]
    Xb = np.broadcast_to(X[:, None], (X.size, lam.shape[1]))
    Yb = np.broadcast_to(Y[:, None], Xb.shape)
    Zb = Z0[:, None] + Z1[:, None] * lam
    return _expm_traceless(Xb, Yb, Zb)


def _chain(a, b, c, d):
    """Ordered product M_{N-1} ... M_1 M_0 by pairwise reduction."""
    while a.shape[0] > 1:
        if a.shape[0] % 2:
            tail = (a[-1:], b[-1:], c[-1:], d[-1:])
            a, b, c, d = a[:-1], b[:-1], c[:-1], d[:-1]
        else:
            tail = None
        la, lb, lc, ld = a[1::2], b[1::2], c[1::2], d[1::2]
        ra, rb, rc, rd = a[0::2], b[0::2], c[0::2], d[0::2]
        a, b, c, d = (la * ra + lb * rc, la * rb + lb * rd,
                      lc * ra + ld * rc, lc * rb + ld * rd)
        if tail is not None:
            a = np.concatenate([a, tail[0]])
            b = np.concatenate([b, tail[1]])
            c = np.concatenate([c, tail[2]])
            d = np.concatenate([d, tail[3]])
    return a[0], b[0], c[0], d[0]


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("STAR_SL_THREADS", "1")))
    except ValueError:
        return 1


def transfer_matrix(p: Potential, lam, n_steps: int = DEFAULT_STEPS):
    """Fundamental matrix [[C, S], [C^[1], S^[1]]] at x = pi.

    ``lam`` may be a scalar or an array (real or complex).  Returns four
    arrays ``(C, S, C1, S1)`` with the shape of ``lam``.
    """
    lam_arr = np.asarray(lam)
    if not np.iscomplexobj(lam_arr):
        lam_arr = lam_arr.astype(float)
    flat = lam_arr.ravel()
    chunks = [flat[i:i + _CHUNK] for i in range(0, flat.size, _CHUNK)] or [flat]

    def run(chunk):
        return _chain(*_step_components(p, chunk, n_steps))

    if _workers() > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=_workers()) as ex:
            parts = list(ex.map(run, chunks))
    else:
        parts = [run(ch) for ch in chunks]
    out = [np.concatenate([part[i] for part in parts]).reshape(lam_arr.shape) for i in range(4)]
    for arr in out:
        if not np.all(np.isfinite(arr)):
            raise IntegrationError("non-finite state during integration")
    return tuple(out)


def fundamental_arrays(p: Potential, lam, n_steps: int = DEFAULT_STEPS):
    """Vectorized (C, C1, S, S1) at x = pi."""
    C, S, C1, S1 = transfer_matrix(p, lam, n_steps)
    return C, C1, S, S1


def integrate_system(p: Potential, lam, init: QuasiState,
                     n_steps: int = DEFAULT_STEPS) -> QuasiState:
    """Propagate (y, y^[1]) from x = 0 to x = pi."""
    if not (np.isfinite(init.y) and np.isfinite(init.y1)):
        raise IntegrationError("initial state must be finite")
    C, S, C1, S1 = (v[()] for v in transfer_matrix(p, lam, n_steps))
    y = C * init.y + S * init.y1
    y1 = C1 * init.y + S1 * init.y1
    if np.isrealobj(y) and np.isrealobj(y1):
        return QuasiState(float(y), float(y1))
    return QuasiState(complex(y), complex(y1))


def fundamental_at_pi(p: Potential, lam, n_steps: int = DEFAULT_STEPS) -> FundamentalValues:
    C, S, C1, S1 = (v[()] for v in transfer_matrix(p, lam, n_steps))
    return FundamentalValues(C=C, C1=C1, S=S, S1=S1)


def wronskian_defect(p: Potential, lam, n_steps: int = DEFAULT_STEPS) -> float:
    return fundamental_at_pi(p, lam, n_steps).wronskian_defect


def solution_on_grid(p: Potential, lam: float, init: QuasiState, n_steps: int = DEFAULT_STEPS):
    """The state (y, y^[1]) at the left end of every integration step and at pi.

    Used for Sturm node counting, so piecewise-constant potentials are
    subdivided into at least ``n_steps`` exact sub-steps.
    """
    if p.is_piecewise_constant:
        pieces = []
        for length, val in p.pieces():
            k = max(1, int(np.ceil(length / PI * n_steps)))
            pieces += [(length / k, val)] * k
        L = np.array([l for l, _ in pieces])
        v = np.array([val for _, val in pieces])
        a, b, c, d = _expm_traceless(L * v, L, -L * (lam + v * v))
    else:
        X, Y, Z0, Z1 = _magnus_nodes(p, n_steps)
        a, b, c, d = _expm_traceless(X, Y, Z0 + Z1 * lam)
    ys = np.empty(a.size + 1)
    y1s = np.empty(a.size + 1)
    y, y1 = float(init.y), float(init.y1)
    ys[0], y1s[0] = y, y1
    for i in range(a.size):
        y, y1 = a[i] * y + b[i] * y1, c[i] * y + d[i] * y1
        ys[i + 1], y1s[i + 1] = y, y1
    return ys, y1s


def l2_distance(p: Potential, q: Potential, n_grid: int = 4097) -> float:
    """||p - q|| in L2(0, pi); exact for two cosine series."""
    if p.fourier_cos is not None and q.fourier_cos is not None:
        size = max(len(p.fourier_cos), len(q.fourier_cos))
        return Potential.cosine(p.coefficients(size) - q.coefficients(size)).l2_norm()
    x = np.linspace(0.0, PI, n_grid)
    diff = eval_sigma(p, x) - eval_sigma(q, x)
    return float(np.sqrt(np.trapezoid(diff * diff, x)))


def relative_l2_error(recovered: Potential, truth: Potential) -> float:
    """||recovered - truth|| / ||truth||; absolute error when truth vanishes."""
    ref = truth.l2_norm()
    dist = l2_distance(recovered, truth)
    return dist / ref if ref > 0 else dist
