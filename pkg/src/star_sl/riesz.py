"""Nonharmonic trigonometric systems on [0, 2 pi] and their Gram algebra.

Everything here is closed form: inner products of cos/sin atoms come from
product-to-sum identities, so frame-bound checks carry no quadrature error.
Elements of H = L2(0, 2pi) + L2(0, 2pi) are stored as a shared frequency
list with a cosine coefficient per frequency in channel 1 and a sine
coefficient in channel 2, which is the shape of every vector that occurs
(v_nk, model vectors, recovered (N, K) and T).
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

log = logging.getLogger(__name__)

LENGTH = 2.0 * np.pi


class GramConditionError(np.linalg.LinAlgError):
    pass


class ExpansionError(ValueError):
    pass


# ---------------------------------------------------------------------------
# closed-form integrals over [0, LENGTH]

def _int_cos(w):
    """int_0^L cos(w t) dt."""
    return LENGTH * np.sinc(np.asarray(w) * LENGTH / np.pi)


def _int_sin(w):
    """int_0^L sin(w t) dt."""
    w = np.asarray(w)
    return LENGTH * np.sin(0.5 * w * LENGTH) * np.sinc(w * LENGTH / (2 * np.pi))


def cc(a, b):
    """int cos(a t) cos(b t) dt, broadcasting; complex frequencies allowed."""
    return 0.5 * (_int_cos(np.subtract(a, b)) + _int_cos(np.add(a, b)))


def ss(a, b):
    return 0.5 * (_int_cos(np.subtract(a, b)) - _int_cos(np.add(a, b)))


def cs(a, b):
    """int cos(a t) sin(b t) dt."""
    return 0.5 * (_int_sin(np.add(a, b)) + _int_sin(np.subtract(b, a)))


@dataclass(frozen=True)
class TrigAtom:
    """scale * cos(frequency t) or scale * sin(frequency t) on [0, 2 pi]."""

    channel: str
    frequency: float
    scale: float = 1.0

    def __post_init__(self):
        if self.channel not in ("cos", "sin"):
            raise ValueError("channel must be 'cos' or 'sin'")
        if not (np.isfinite(self.frequency) and np.isfinite(self.scale)):
            raise ValueError("atom must be finite")
        if self.frequency < 0:
            raise ValueError("frequency must be >= 0")


# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HVector:
    """(N, K) with N = sum c1_i cos(w_i t), K = sum c2_i sin(w_i t)."""

    frequencies: np.ndarray
    c1: np.ndarray
    c2: np.ndarray

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.frequencies, dtype=float))
        a = np.atleast_1d(np.asarray(self.c1, dtype=float))
        b = np.atleast_1d(np.asarray(self.c2, dtype=float))
        if not (w.shape == a.shape == b.shape):
            raise ValueError("frequencies and coefficient arrays must have equal length")
        object.__setattr__(self, "frequencies", w)
        object.__setattr__(self, "c1", a)
        object.__setattr__(self, "c2", b)

    @classmethod
    def basis(cls, frequency: float, scale: float) -> "HVector":
        return cls(np.array([frequency]), np.array([scale]), np.array([1.0]))

    @classmethod
    def zero(cls) -> "HVector":
        return cls(np.zeros(0), np.zeros(0), np.zeros(0))

    def __add__(self, other: "HVector") -> "HVector":
        return HVector(np.concatenate([self.frequencies, other.frequencies]),
                       np.concatenate([self.c1, other.c1]), np.concatenate([self.c2, other.c2]))

    def __mul__(self, factor: float) -> "HVector":
        return HVector(self.frequencies, factor * self.c1, factor * self.c2)

    __rmul__ = __mul__

    def __sub__(self, other: "HVector") -> "HVector":
        return self + (-1.0) * other

    def inner(self, other: "HVector") -> float:
        wa, wb = self.frequencies[:, None], other.frequencies[None, :]
        return float(self.c1 @ cc(wa, wb) @ other.c1 + self.c2 @ ss(wa, wb) @ other.c2)

    def norm(self) -> float:
        return float(np.sqrt(max(self.inner(self), 0.0)))

    def channel_norms(self) -> tuple[float, float]:
        w = self.frequencies
        n1 = self.c1 @ cc(w[:, None], w[None, :]) @ self.c1
        n2 = self.c2 @ ss(w[:, None], w[None, :]) @ self.c2
        return float(np.sqrt(max(n1, 0))), float(np.sqrt(max(n2, 0)))

    def evaluate(self, t):
        t = np.asarray(t, dtype=float)
        arg = np.multiply.outer(t, self.frequencies)
        return np.cos(arg) @ self.c1, np.sin(arg) @ self.c2

    def cos_transform(self, rho):
        """int_0^{2pi} N(t) cos(rho t) dt; rho may be complex."""
        rho = np.asarray(rho)
        return cc(np.multiply.outer(rho, np.ones_like(self.frequencies)), self.frequencies) @ self.c1

    def sin_transform(self, rho):
        """int_0^{2pi} K(t) sin(rho t) dt; rho may be complex."""
        rho = np.asarray(rho)
        return ss(np.multiply.outer(rho, np.ones_like(self.frequencies)), self.frequencies) @ self.c2

    def to_dict(self) -> dict:
        return {"channel1_coeffs": self.c1.tolist(), "channel2_coeffs": self.c2.tolist(),
                "frequencies": self.frequencies.tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "HVector":
        return cls(np.array(data["frequencies"], dtype=float),
                   np.array(data["channel1_coeffs"], dtype=float),
                   np.array(data["channel2_coeffs"], dtype=float))


def gram_entry(a, b) -> float:
    """Inner product of two atoms (in L2(0, 2pi)) or two H vectors."""
    if isinstance(a, HVector) and isinstance(b, HVector):
        return a.inner(b)
    if isinstance(a, TrigAtom) and isinstance(b, TrigAtom):
        if a.channel == b.channel == "cos":
            val = cc(a.frequency, b.frequency)
        elif a.channel == b.channel == "sin":
            val = ss(a.frequency, b.frequency)
        elif a.channel == "cos":
            val = cs(a.frequency, b.frequency)
        else:
            val = cs(b.frequency, a.frequency)
        return float(a.scale * b.scale * val)
    raise TypeError("gram_entry expects two TrigAtoms or two HVectors")


# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Family:
    """Basis elements [scale_i cos(w_i t); sin(w_i t)] with optional (n, k) labels."""

    frequencies: np.ndarray
    scales: np.ndarray
    labels: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "frequencies", np.asarray(self.frequencies, dtype=float))
        object.__setattr__(self, "scales", np.asarray(self.scales, dtype=float))

    def __len__(self):
        return int(self.frequencies.size)

    def element(self, i: int) -> HVector:
        return HVector.basis(self.frequencies[i], self.scales[i])

    def gram(self) -> np.ndarray:
        w = self.frequencies
        s = self.scales
        G = np.outer(s, s) * cc(w[:, None], w[None, :]) + ss(w[:, None], w[None, :])
        return 0.5 * (G + G.T)

    def combine(self, coeffs) -> HVector:
        coeffs = np.asarray(coeffs, dtype=float)
        return HVector(self.frequencies, coeffs * self.scales, coeffs)

    def moments(self, f: HVector) -> np.ndarray:
        """(f, v_i)_H for every element."""
        w = self.frequencies
        return (self.scales * (f.c1 @ cc(f.frequencies[:, None], w[None, :]))
                + f.c2 @ ss(f.frequencies[:, None], w[None, :]))

    def subset(self, mask) -> "Family":
        mask = np.asarray(mask)
        labels = tuple(l for l, keep in zip(self.labels, mask) if keep) if self.labels else ()
        return Family(self.frequencies[mask], self.scales[mask], labels)


def sine_family(frequencies, labels=()) -> Family:
    """{sin(w t)} as elements of the second channel only."""
    w = np.asarray(frequencies, dtype=float)
    return Family(w, np.zeros_like(w), tuple(labels))


def model_family(alpha: float, n_max: int) -> Family:
    """The comparison system v0_nk, n <= n_max, k = 1..4."""
    if abs(alpha - np.pi / 4) < 1e-12:
        raise ValueError("alpha = pi/4 makes tan(2 alpha) undefined")
    beta = alpha / np.pi
    t2 = np.tan(2 * alpha)
    w, s, lab = [], [], []
    for n in range(1, n_max + 1):
        for k, freq, scale in ((1, n - 1 + beta, -0.5 * t2), (2, n - beta, 0.5 * t2),
                               (3, n - 0.5, 0.0), (4, float(n), 0.0)):
            w.append(freq)
            s.append(scale)
            lab.append((n, k))
    return Family(np.array(w), np.array(s), tuple(lab))


@dataclass
class Recovery:
    hvector: HVector
    coeffs: np.ndarray
    condition: float
    residual: float
    ridge: float


def recover_from_coefficients(family: Family, targets, ridge: float | None = None,
                              auto_cond: float = 1e10, max_cond: float = 1e13) -> Recovery:
    """Minimum-norm element of span(family) with prescribed inner products.

    ``ridge=None`` switches on ``1e-10 * trace(G) / dim`` automatically when
    the Gram condition number exceeds ``auto_cond``; an explicit ``ridge=0``
    refuses systems worse than ``max_cond``.
    """
    targets = np.asarray(targets, dtype=float)
    if targets.shape != (len(family),):
        raise ValueError("one target per family element required")
    G = family.gram()
    ev = np.linalg.eigvalsh(G)
    cond = float(ev[-1] / ev[0]) if ev[0] > 0 else np.inf
    if ridge is None:
        ridge = 0.0
        if cond > auto_cond:
            ridge = 1e-10 * np.trace(G) / len(family)
            log.info("Gram condition %.3e > %.1e: ridge %.3e enabled", cond, auto_cond, ridge)
    elif ridge == 0.0 and cond > max_cond:
        raise GramConditionError(f"Gram condition number {cond:.3e} exceeds {max_cond:.1e}")
    A = G + ridge * np.eye(len(family))
    try:
        coeffs = sla.solve(A, targets, assume_a="pos")
    except np.linalg.LinAlgError:
        coeffs = np.linalg.lstsq(A, targets, rcond=None)[0]
    resid = float(np.linalg.norm(G @ coeffs - targets) / max(np.linalg.norm(targets), 1e-300))
    return Recovery(family.combine(coeffs), coeffs, cond, resid, float(ridge))


# ---------------------------------------------------------------------------
# Appendix-style checks on shifted integer systems

@dataclass
class FrameReport:
    beta: float
    channel: str
    lower: float
    upper: float
    min_ratio: float
    max_ratio: float
    passed: bool


def shifted_gram(beta: float, n_range: int, channel: str = "sin") -> np.ndarray:
    w = np.arange(-n_range, n_range + 1) + beta
    kern = ss if channel == "sin" else cc
    return kern(w[:, None], w[None, :])


def frame_bound_check(beta: float, trials: int = 200, channel: str = "sin", n_range: int = 12,
                      slack: float = 1e-8, seed: int = 0) -> FrameReport:
    """Exact norms of random sums c_n sin/cos((n + beta) t) against pi (1 +- cos 2 beta pi)."""
    if not 0.0 < beta < 0.5:
        raise ValueError("beta must lie in (0, 1/2)")
    G = shifted_gram(beta, n_range, channel)
    rng = np.random.default_rng(seed)
    c = rng.standard_normal((trials, G.shape[0]))
    ratios = np.einsum("ti,ij,tj->t", c, G, c) / np.sum(c * c, axis=1)
    spread = abs(np.cos(2 * beta * np.pi))
    lower, upper = np.pi * (1 - spread), np.pi * (1 + spread)
    ok = bool(np.all(ratios >= lower - slack) and np.all(ratios <= upper + slack))
    return FrameReport(beta, channel, lower, upper, float(ratios.min()), float(ratios.max()), ok)


def hilbert_form_diag(beta: float, n_terms: int = 10**6) -> float:
    """sum over all integers n of (n + 2 beta)^-2, truncated at |n| <= n_terms plus tail."""
    if float(2 * beta).is_integer():
        raise ValueError("2 beta must not be an integer")
    c = 2.0 * beta
    n = np.arange(-n_terms, n_terms + 1, dtype=float)
    head = np.sum(1.0 / (n + c) ** 2)
    tail = 1.0 / (n_terms + 0.5 + c) + 1.0 / (n_terms + 0.5 - c)
    return float(head + tail)


# ---------------------------------------------------------------------------

def _shift_sign(freqs, beta, tol=1e-10):
    """+1 if w = n + beta, -1 if w = -(n + beta) for an integer n."""
    up = np.abs((freqs - beta) - np.round(freqs - beta)) < tol
    down = np.abs((freqs + beta) - np.round(freqs + beta)) < tol
    return np.where(up, 1.0, np.where(down, -1.0, 0.0))


def operator_A(v: HVector, alpha: float, inverse: bool = False) -> HVector:
    """[v1; v2 +- 2 cot(2 alpha) sum c_n sin((n + beta) t)], v1 = sum c_n cos((n + beta) t)."""
    if abs(alpha - np.pi / 4) < 1e-12:
        raise ValueError("alpha = pi/4 excluded")
    beta = alpha / np.pi
    sgn = _shift_sign(v.frequencies, beta)
    if np.any((sgn == 0) & (v.c1 != 0)):
        raise ExpansionError("channel 1 has a cosine outside the system cos((n + beta) t)")
    factor = 2.0 / np.tan(2 * alpha) * (-1.0 if inverse else 1.0)
    return HVector(v.frequencies, v.c1.copy(), v.c2 + factor * sgn * v.c1)


def operator_A_roundtrip(v: HVector, alpha: float):
    """(A v, A^-1 A v, ||A^-1 A v - v||)."""
    Av = operator_A(v, alpha)
    back = operator_A(Av, alpha, inverse=True)
    return Av, back, (back - v).norm()
