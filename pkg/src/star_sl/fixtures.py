"""Synthetic star-graph data sets with known potentials."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .graph_spectra import AssumptionReport, SpectrumTable, StarProblem, find_eigenvalues, verify_assumptions
from .sl_core import DEFAULT_STEPS, Potential

log = logging.getLogger(__name__)

# small, pairwise distinct potentials for the edges whose data are given
KNOWN_EDGE_COEFFS = (
    (0.11, -0.07, 0.03),
    (-0.09, 0.05, 0.06),
    (0.05, 0.10, -0.04),
    (-0.03, -0.06, 0.08),
    (0.08, 0.02, -0.07),
)


class FixtureError(RuntimeError):
    pass


def random_potential(rng: np.random.Generator, amplitude: float, modes: int = 3) -> Potential:
    """sum_{r < modes} a_r cos(r x) with |a_r| <= amplitude."""
    return Potential.cosine(rng.uniform(-amplitude, amplitude, modes))


@dataclass
class StarFixture:
    m: int
    p: int
    potentials: tuple[Potential, ...]
    specL: SpectrumTable
    specL0: SpectrumTable
    report: AssumptionReport
    seed: int
    attempts: int

    @property
    def probL(self) -> StarProblem:
        return StarProblem.L(self.m, self.p, self.potentials)

    @property
    def probL0(self) -> StarProblem:
        return StarProblem.L0(self.m, self.p, self.potentials)

    @property
    def sigma1(self) -> Potential:
        return self.potentials[0]

    @property
    def sigma_p1(self) -> Potential:
        return self.potentials[self.p]

    def known(self) -> dict[int, Potential]:
        """Potentials of the edges other than 1 and p+1, keyed by 0-based index."""
        return {j: q for j, q in enumerate(self.potentials) if j not in (0, self.p)}


def make_fixture(m: int = 5, p: int = 2, amplitude: float = 0.3, n_max: int = 30, seed: int = 0,
                 max_attempts: int = 10, min_margin: float = 1e-3, unknown=None,
                 n_steps: int = DEFAULT_STEPS) -> StarFixture:
    """Draw sigma_1, sigma_{p+1} until every assumption holds with ``min_margin``.

    ``unknown`` fixes the pair (sigma_1, sigma_{p+1}) instead of drawing it;
    then a single attempt is made.
    """
    if m - 2 > len(KNOWN_EDGE_COEFFS):
        raise ValueError(f"at most {len(KNOWN_EDGE_COEFFS) + 2} edges supported")
    rng = np.random.default_rng(seed)
    known = [Potential.cosine(c) for c in KNOWN_EDGE_COEFFS[: m - 2]]
    attempts = 1 if unknown is not None else max_attempts
    last = None
    for attempt in range(1, attempts + 1):
        if unknown is None:
            s1, sp1 = random_potential(rng, amplitude), random_potential(rng, amplitude)
        else:
            s1, sp1 = unknown
        pots = list(known)
        pots.insert(0, s1)
        pots.insert(p, sp1)
        probL, probL0 = StarProblem.L(m, p, pots), StarProblem.L0(m, p, pots)
        specL = find_eigenvalues(probL, n_max, n_steps)
        specL0 = find_eigenvalues(probL0, n_max, n_steps)
        report = verify_assumptions(probL, probL0, specL, specL0, n_steps)
        last = report
        if report.ok and min(report.margins.values()) > min_margin:
            return StarFixture(m, p, tuple(pots), specL, specL0, report, seed, attempt)
        log.info("fixture attempt %d rejected: %s", attempt, report.margins)
    raise FixtureError(f"no admissible fixture in {attempts} attempts; last margins {last.margins}")
