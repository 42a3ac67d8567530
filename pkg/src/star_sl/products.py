"""Canonical products over eigenvalue sequences with closed-form tails.

A sequence is stored together with the asymptotic pattern its square roots
follow.  The pattern is a union of shifted integer lattices,

    shift a:  rho = n - 1 + a and rho = n - a   (zeros of cos 2 pi rho - cos 2 pi a)
    cosine:   rho = n - 1/2                     (zeros of cos pi rho)
    sine:     rho = n                           (zeros of sin pi rho / (pi rho))

each with a multiplicity, so the product over the unperturbed pattern has a
closed form normalized to 1 at lambda = 0.  Truncated products are completed
by the pattern's product over the lattice points beyond the retained block
count.  That tail is summed as a Hurwitz-zeta series when it converges well
and taken as closed-form total divided by head otherwise.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import zeta

from .graph_spectra import SpectrumTable


class PatternError(ValueError):
    pass


@dataclass(frozen=True)
class Asymptote:
    shift: float | None = None
    cos_mult: int = 0
    sin_mult: int = 0

    def __post_init__(self):
        if self.shift is not None and not 0.0 < self.shift < 0.5:
            raise PatternError("shift must lie in (0, 1/2)")
        if self.cos_mult < 0 or self.sin_mult < 0:
            raise PatternError("multiplicities must be >= 0")
        if self.block_size == 0:
            raise PatternError("empty pattern")

    @classmethod
    def sine(cls):
        return cls(sin_mult=1)

    @classmethod
    def cosine(cls):
        return cls(cos_mult=1)

    @classmethod
    def shifted(cls, a: float):
        return cls(shift=a)

    @classmethod
    def four_branch(cls, beta: float, half_mult: int = 1, int_mult: int = 1):
        return cls(shift=beta, cos_mult=half_mult, sin_mult=int_mult)

    @property
    def offsets(self) -> list[float]:
        """c with rho = n + c for every lattice (repeated by multiplicity), n >= 1."""
        out = []
        if self.shift is not None:
            out += [self.shift - 1.0, -self.shift]
        out += [-0.5] * self.cos_mult + [0.0] * self.sin_mult
        return out

    @property
    def block_size(self) -> int:
        return (2 if self.shift is not None else 0) + self.cos_mult + self.sin_mult

    @property
    def type_(self) -> float:
        """Exponential type in rho."""
        return np.pi * self.block_size

    def lattice(self, n_blocks: int) -> np.ndarray:
        """Sorted lambda values of the first ``n_blocks`` lattice points per class."""
        n = np.arange(1, n_blocks + 1, dtype=float)
        return np.sort(np.concatenate([(n + c) ** 2 for c in self.offsets]))

    def total(self, lam):
        """Product over the whole pattern, P(0) = 1; lam may be complex."""
        rho = np.emath.sqrt(np.asarray(lam, dtype=complex))
        out = np.ones_like(rho)
        if self.shift is not None:
            c2a = np.cos(2 * np.pi * self.shift)
            out = out * (np.cos(2 * np.pi * rho) - c2a) / (1.0 - c2a)
        if self.cos_mult:
            out = out * np.cos(np.pi * rho) ** self.cos_mult
        if self.sin_mult:
            out = out * np.sinc(rho) ** self.sin_mult
        return out


@dataclass(frozen=True)
class ZeroSequence:
    """Retained zeros (ascending lambda) covering n = 1..n_blocks of every class."""

    zeros: np.ndarray
    asymptote: Asymptote

    def __post_init__(self):
        z = np.sort(np.asarray(self.zeros, dtype=float))
        if np.any(z == 0.0):
            raise ValueError("zero lambda_n is not allowed in a canonical product")
        if z.size % self.asymptote.block_size:
            raise PatternError(
                f"{z.size} zeros do not fill whole blocks of size {self.asymptote.block_size}")
        object.__setattr__(self, "zeros", z)

    @property
    def n_blocks(self) -> int:
        return self.zeros.size // self.asymptote.block_size

    def truncated(self, n_blocks: int) -> "ZeroSequence":
        return ZeroSequence(self.zeros[: n_blocks * self.asymptote.block_size], self.asymptote)

    @classmethod
    def from_pattern(cls, asymptote: Asymptote, n_blocks: int) -> "ZeroSequence":
        return cls(asymptote.lattice(n_blocks), asymptote)

    @classmethod
    def from_table(cls, table: SpectrumTable) -> "ZeroSequence":
        """All L-type branches of a spectrum table as one four-branch sequence."""
        ks = np.unique(table.k)
        n_half = table.neumann_count - 1
        n_int = table.m - table.neumann_count - 1
        if ks.size != 2 + n_half + n_int:
            raise PatternError("table must contain every branch k = 1..m")
        return cls(table.lam, Asymptote.four_branch(table.alpha / np.pi, n_half, n_int))


def _tail_series(offsets, n_blocks, lam, max_terms=80):
    """log prod_{n > n_blocks} (1 - lam / (n + c)^2) summed over the offsets."""
    lam = np.asarray(lam, dtype=complex)
    acc = np.zeros_like(lam)
    for c in offsets:
        q = n_blocks + 1.0 + c
        power = np.ones_like(lam)
        for k in range(1, max_terms + 1):
            power = power * lam
            term = power * zeta(2.0 * k, q) / k
            acc -= term
            if np.all(np.abs(term) < 1e-18 * (1 + np.abs(acc))):
                break
    return np.exp(acc)


def tail_closed_form(asymptote: Asymptote, n_blocks: int, lam, method: str = "auto"):
    """Product of (1 - lam/lam_n) over the pattern's lattice beyond ``n_blocks``."""
    lam = np.asarray(lam, dtype=complex)
    q_min = n_blocks + 1.0 + min(asymptote.offsets)
    use_series = np.abs(lam) <= 0.25 * q_min ** 2
    if method == "series":
        use_series = np.ones_like(use_series)
    elif method == "ratio":
        use_series = np.zeros_like(use_series)
    elif method != "auto":
        raise ValueError("method must be 'auto', 'series' or 'ratio'")
    out = np.empty_like(lam)
    if np.any(use_series):
        out[use_series] = _tail_series(asymptote.offsets, n_blocks, lam[use_series])
    rest = ~use_series
    if np.any(rest):
        head = np.prod(1.0 - lam[rest][..., None] / asymptote.lattice(n_blocks), axis=-1)
        out[rest] = asymptote.total(lam[rest]) / head
    return out


def product_eval(zs: ZeroSequence, lam):
    """prod_n (1 - lam / lam_n): retained zeros times the pattern tail.

    Real input gives real output; complex lam is accepted.
    """
    lam_arr = np.asarray(lam)
    cplx = np.iscomplexobj(lam_arr)
    lam_c = lam_arr.astype(complex)
    # z - lam is exact at a retained zero, so the head vanishes there exactly
    head = np.prod((zs.zeros - lam_c[..., None]) / zs.zeros, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = head * tail_closed_form(zs.asymptote, zs.n_blocks, lam_c)
    val = np.where(head == 0, 0.0, val)
    out = val if cplx else val.real
    return out[()] if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------

@dataclass
class RepresentationReport:
    constant: float
    max_deviation: float
    rms_deviation: float
    lower_bound_constant: float
    grid_size: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def representation_check(zs: ZeroSequence, rho_min: float = 0.3, rho_max: float = 10.0,
                         n_grid: int = 2000, zero_gap: float = 1e-3) -> RepresentationReport:
    """Compare rho P(rho^2) with a fitted multiple of rho times the pattern product.

    ``rho * total`` is the pure trigonometric part of the representation; the
    constant is the least-squares ratio over the grid, and the deviation is
    what is left for the band-limited remainder.  The lower-bound constant is
    min |rho P(rho^2)| e^{-type |Im rho|} along arg rho = pi/4, |rho| in [2, 10].
    """
    asym = zs.asymptote
    rho = np.linspace(rho_min, rho_max, n_grid)
    lattice_rho = np.sqrt(asym.lattice(int(np.ceil(rho_max)) + 2))
    all_rho = np.concatenate([np.sqrt(zs.zeros), lattice_rho])
    keep = np.min(np.abs(rho[:, None] - all_rho[None, :]), axis=1) > zero_gap
    rho = rho[keep]
    lhs = rho * product_eval(zs, rho ** 2)
    model = rho * asym.total(rho ** 2).real
    const = float(lhs @ model / (model @ model))
    dev = lhs - const * model

    radius = np.linspace(2.0, 10.0, 200)
    ray = radius * np.exp(0.25j * np.pi)
    vals = np.abs(ray * product_eval(zs, ray ** 2)) * np.exp(-asym.type_ * np.abs(ray.imag))
    return RepresentationReport(const, float(np.max(np.abs(dev))), float(np.sqrt(np.mean(dev ** 2))),
                                float(np.min(vals)), int(rho.size))
