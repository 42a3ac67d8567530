"""Self-check suites shared by the command line and the demos.

Each suite returns a list of ``Check`` rows; a suite passes when every row
passes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph_spectra import StarProblem, char_delta, find_eigenvalues
from .products import Asymptote, ZeroSequence, product_eval, representation_check
from .riesz import frame_bound_check, hilbert_form_diag
from .sl_core import Potential, fundamental_at_pi, transfer_matrix


@dataclass
class Check:
    suite: str
    name: str
    passed: bool
    value: float
    limit: float

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.suite:<13} {self.name:<40} {self.value:.3e} (limit {self.limit:.1e})"


def wronskian_suite(trials: int = 100, seed: int = 0, tol: float = 1e-9) -> list[Check]:
    """S^[1] C - C^[1] S = 1 for random 3-mode potentials and lam in [-5, 100]."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        p = Potential.cosine(rng.uniform(-0.5, 0.5, 3))
        worst = max(worst, abs(fundamental_at_pi(p, rng.uniform(-5.0, 100.0)).wronskian_defect))
    return [Check("wronskian", f"{trials} random (sigma, lambda) pairs", worst <= tol, worst, tol)]


def frame_bounds_suite(betas=(0.125, 0.25, 0.3), trials: int = 200, seed: int = 0) -> list[Check]:
    rows = []
    for beta in betas:
        for channel in ("sin", "cos"):
            rep = frame_bound_check(beta, trials, channel, seed=seed)
            excess = max(rep.lower - rep.min_ratio, rep.max_ratio - rep.upper, 0.0)
            rows.append(Check("frame-bounds", f"beta={beta:g} {channel}", rep.passed, excess, 1e-8))
    tight = frame_bound_check(0.25, trials, "sin", seed=seed)
    dev = max(abs(tight.min_ratio - np.pi), abs(tight.max_ratio - np.pi))
    rows.append(Check("frame-bounds", "beta=1/4 tight (norm^2 = pi sum c^2)", dev <= 1e-10, dev, 1e-10))
    for beta in betas:
        err = abs(hilbert_form_diag(beta) - (np.pi / np.sin(2 * np.pi * beta)) ** 2)
        rows.append(Check("frame-bounds", f"diagonal sum beta={beta:g}", err <= 1e-6, err, 1e-6))
    return rows


def products_suite(n_z: int = 200) -> list[Check]:
    rows = []
    val = product_eval(ZeroSequence.from_pattern(Asymptote.sine(), n_z), 0.25)
    err = abs(val - 2 / np.pi)
    rows.append(Check("products", "zeros n^2 at lambda=1/4 -> 2/pi", err <= 1e-6, err, 1e-6))
    val = product_eval(ZeroSequence.from_pattern(Asymptote.cosine(), n_z), 1.0)
    err = abs(val + 1.0)
    rows.append(Check("products", "zeros (n-1/2)^2 at lambda=1 -> -1", err <= 1e-6, err, 1e-6))
    rho = np.linspace(0.3, 5.0, 57)
    rho = rho[np.abs(np.cos(2 * np.pi * rho)) > 1e-2]
    ratio = product_eval(ZeroSequence.from_pattern(Asymptote.shifted(0.25), n_z), rho ** 2) / np.cos(2 * np.pi * rho)
    spread = float(np.ptp(ratio) / np.abs(ratio).mean())
    rows.append(Check("products", "shift 1/4 ratio to cos 2 rho pi constant", spread <= 1e-4, spread, 1e-4))
    table = find_eigenvalues(StarProblem.L(4, 2, [Potential.zero()] * 4), n_z)
    rep = representation_check(ZeroSequence.from_table(table))
    rows.append(Check("products", "four-branch zero-potential representation", rep.max_deviation <= 1e-4,
                      rep.max_deviation, 1e-4))
    rows.append(Check("products", "lower-bound constant positive", rep.lower_bound_constant > 0,
                      rep.lower_bound_constant, 0.0))
    return rows


def identities_suite(fixture=None, tol: float = 1e-6) -> list[Check]:
    """Data/truth identities on a generic fixture."""
    from .fixtures import make_fixture
    from .pipeline import truth_identities
    from .weyl import weyl_m

    fx = fixture or make_fixture(n_max=10, seed=0)
    res = truth_identities(fx.m, fx.p, fx.known(), fx.specL, fx.specL0, fx.sigma1, fx.sigma_p1)
    rows = [Check("identities", name, res[name] <= tol, res[name], tol)
            for name in ("defg", "moments", "CS", "sysT", "prodCS")]
    rows.append(Check("identities", "flipped f_nk breaks moments (O(1))",
                      res["moments_sign_flipped"] >= 0.1, res["moments_sign_flipped"], 0.1))
    lam = np.array([-3.3, 0.7, 5.1, 20.3, 47.9])
    prob = fx.probL
    total = sum(weyl_m(q, lam, "neumann" if kind == "C" else "dirichlet")
                for q, kind in zip(prob.potentials, prob.kinds()))
    denom = np.ones_like(lam)
    for q, kind in zip(prob.potentials, prob.kinds()):
        C, S, _, _ = transfer_matrix(q, lam)
        denom = denom * (C if kind == "C" else S)
    err = float(np.max(np.abs(total + char_delta(prob, lam) / denom) / (1 + np.abs(total))))
    rows.append(Check("identities", "sum of Weyl functions vs Delta", err <= 1e-8, err, 1e-8))
    return rows


SUITES = {
    "wronskian": wronskian_suite,
    "frame-bounds": frame_bounds_suite,
    "products": products_suite,
    "identities": identities_suite,
}
