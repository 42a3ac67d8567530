"""Recovery of sigma_1 and sigma_{p+1} from the known edges and two partial spectra.

Stages, in order:

    weyl_sum_g      g_nk = M_1 + M_{p+1} at lam_nk from the known edges
    build_fnk       right-hand sides of the moment problem for f = (N, K)
    recover_sum     Gram solve for (N, K); M_1 + M_{p+1} = D1 / D2
    weyl_sums_h     h^N_nk from the known edges, h_nk from the recovered sum
    recover_T       sine-moment problem for T; C_{p+1} S_{p+1} follows
    split_zeros     zeros of that product, alternately nu_n and theta_n
    two_spectra     sigma_{p+1} from (nu, theta)
    weyl_fit        sigma_1 from samples of M_1 = (sum) - M_{p+1}

The M_1 samples are taken where they are exact up to the sigma_{p+1}
error: at lam_nk the recovered sum interpolates g_nk, and at mu_nk
M_1 = h^N_nk - M^N_{p+1}.  Samples close to a pole of the subtracted
M_{p+1} are dropped.
"""
from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from . import riesz
from .graph_spectra import AssumptionReport, SpectrumTable, StarProblem, _distinct_positive, _edge_margin
from .interval_inverse import FitDivergence, two_spectra_reconstruct, weyl_fit_reconstruct
from .roots import bisect_batch, lam_of, s_of, sign_changes
from .sl_core import DEFAULT_STEPS, Potential, relative_l2_error, transfer_matrix
from .weyl import AssumptionError, PoleError, d_functions, g_values, weyl_m, weyl_sum_g, weyl_sums_h

log = logging.getLogger(__name__)


class StageError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


# ---------------------------------------------------------------------------

def _sorted_items(d: dict):
    keys = sorted(d)
    return keys, np.array([d[k] for k in keys], dtype=float)


def _rho(lam):
    """sqrt(lam) on the principal branch, kept away from 0."""
    r = np.emath.sqrt(np.asarray(lam, dtype=complex))
    return np.where(np.abs(r) < 1e-9, 1e-9, r)


def build_fnk(specL: SpectrumTable, g: dict, sign: float = 1.0) -> dict:
    """f_nk = -[(rho/g) cos 2 rho pi + 1/2 sin 2 rho pi].

    ``sign=-1`` returns the negated values (negative control only).
    """
    out = {}
    for (n, k), gv in g.items():
        if gv == 0:
            raise AssumptionError(f"(A4) violated: g_{n}{k} = 0")
        r = np.sqrt(specL.get(n, k))
        out[(n, k)] = -sign * ((r / gv) * np.cos(2 * r * np.pi) + 0.5 * np.sin(2 * r * np.pi))
    return out


def vnk_family(specL: SpectrumTable, g: dict, n_trunc: int | None = None) -> riesz.Family:
    """v_nk = [(rho/g) cos rho t; sin rho t] for n <= n_trunc, k = 1..4."""
    keys = [key for key in sorted(g) if n_trunc is None or key[0] <= n_trunc]
    rho = np.sqrt(np.array([specL.get(n, k) for n, k in keys]))
    return riesz.Family(rho, rho / np.array([g[key] for key in keys]), tuple(keys))


@dataclass
class SumWeyl:
    """M_1 + M_{p+1} = D1 / D2 assembled from recovered (N, K)."""

    NK: riesz.HVector
    recovery: riesz.Recovery

    def d1(self, lam):
        r = _rho(lam)
        return (-(np.cos(2 * r * np.pi) + self.NK.cos_transform(r))).real

    def d2(self, lam):
        r = _rho(lam)
        return (np.sin(2 * r * np.pi) / (2 * r) + self.NK.sin_transform(r) / r).real

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=float)
        num, den = self.d1(lam), self.d2(lam)
        if np.any(np.abs(den) < 1e-12 * (1 + np.abs(num))):
            raise PoleError("D2 vanishes at a requested point")
        out = num / den
        return out[()] if out.ndim == 0 else out


def recover_sum_weyl(specL: SpectrumTable, g: dict, n_trunc: int = 30, ridge=None) -> SumWeyl:
    fam = vnk_family(specL, g, n_trunc)
    f = build_fnk(specL, g)
    targets = np.array([f[key] for key in fam.labels])
    rec = riesz.recover_from_coefficients(fam, targets, ridge=ridge)
    log.info("sum recovery: %d elements, cond %.3e, residual %.2e", len(fam), rec.condition, rec.residual)
    return SumWeyl(rec.hvector, rec)


@dataclass
class CSProduct:
    """C_{p+1} S_{p+1}(pi, lam) = sin 2 rho pi / (2 rho) + (1/rho) int T sin rho t."""

    T: riesz.HVector
    recovery: riesz.Recovery

    def __call__(self, lam):
        r = _rho(lam)
        out = (np.sin(2 * r * np.pi) / (2 * r) + self.T.sin_transform(r) / r).real
        return out[()] if np.ndim(out) == 0 else out


def sysT_rhs(mu, hN, h):
    r = np.sqrt(np.asarray(mu, dtype=float))
    gap = np.asarray(hN) - np.asarray(h)
    if np.any(gap == 0):
        raise AssumptionError("h^N_nk = h_nk")
    return r / gap - 0.5 * np.sin(2 * r * np.pi)


def recover_T(specL0: SpectrumTable, hN: dict, h: dict, n_trunc: int = 30, ridge=None) -> CSProduct:
    keys = [key for key in sorted(hN) if key[0] <= n_trunc]
    mu = np.array([specL0.get(n, k) for n, k in keys])
    rhs = sysT_rhs(mu, [hN[key] for key in keys], [h[key] for key in keys])
    fam = riesz.sine_family(np.sqrt(mu), keys)
    rec = riesz.recover_from_coefficients(fam, rhs, ridge=ridge)
    log.info("T recovery: %d elements, cond %.3e, residual %.2e", len(fam), rec.condition, rec.residual)
    return CSProduct(rec.hvector, rec)


# ---------------------------------------------------------------------------

class SplitError(StageError):
    def __init__(self, message: str):
        super().__init__("split_zeros", message)


def split_sorted(zeros, gap_tol: float = 1e-8):
    """Alternate an ascending merged list into (nu_0, nu_1, ...) and (theta_1, ...)."""
    z = np.asarray(zeros, dtype=float)
    if z.size == 0:
        raise SplitError("no zeros")
    gaps = np.diff(s_of(z))
    if np.any(gaps <= gap_tol):
        i = int(np.argmin(gaps))
        raise SplitError(f"double or near-double zero at lambda = {z[i]:.10g}")
    return z[0::2], z[1::2]


def product_zeros(product_fn, s_max: float, s_min: float = -3.0, step: float = 1.0 / 64,
                  tol: float = 1e-13) -> np.ndarray:
    """Zeros lam = s|s| of ``product_fn`` for s in [s_min, s_max]."""
    grid = np.arange(s_min, s_max, step) + step / 2

    def fn(s):
        return product_fn(lam_of(s))

    vals = fn(grid)
    idx = sign_changes(vals)
    return lam_of(bisect_batch(fn, grid[idx], grid[idx + 1], tol=tol, flo=vals[idx], fhi=vals[idx + 1]))


def split_zeros(product_fn, n_max: int, s_min: float = -3.0, gap_tol: float = 1e-8):
    """(nu_0..nu_{n_max}, theta_1..theta_{n_max}) from the zeros of C S below (n_max + 3/4)^2."""
    z = product_zeros(product_fn, n_max + 0.75, s_min)
    expected = 2 * n_max + 1
    if z.size != expected:
        raise SplitError(f"found {z.size} zeros below rho = {n_max + 0.75}, expected {expected}")
    return split_sorted(z, gap_tol)


# ---------------------------------------------------------------------------

@dataclass
class ReconstructionParams:
    n_trunc: int = 30
    n_use: int = 20
    n_basis: int = 8
    ridge: float | None = None
    pole_bound: float = 5.0
    zero_scan_min: float = -3.0
    weyl_accept_tol: float = 1e-3
    n_steps: int = DEFAULT_STEPS


@dataclass
class ReconstructionReport:
    params: dict
    assumptions: dict
    stages: dict = field(default_factory=dict)
    sigma1: Potential | None = None
    sigma_p1: Potential | None = None
    status: str = "running"
    failed_stage: str | None = None
    error: str | None = None
    truth_checks: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def to_dict(self) -> dict:
        return {"status": self.status, "failed_stage": self.failed_stage, "error": self.error,
                "params": self.params, "assumptions": self.assumptions, "stages": self.stages,
                "sigma1": None if self.sigma1 is None else self.sigma1.to_dict(),
                "sigma_p1": None if self.sigma_p1 is None else self.sigma_p1.to_dict(),
                "truth_checks": self.truth_checks, "errors": self.errors}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=float)


def _problems(m: int, p: int, known: dict):
    pots = [known.get(j, Potential.zero()) for j in range(m)]
    missing = [j for j in range(m) if j not in (0, p) and j not in known]
    if missing:
        raise ValueError(f"potentials missing for edges {[j + 1 for j in missing]}")
    return StarProblem.L(m, p, pots), StarProblem.L0(m, p, pots)


def data_assumptions(m: int, p: int, known: dict, specL: SpectrumTable, specL0: SpectrumTable,
                     n_steps: int = DEFAULT_STEPS, tol: float = 1e-8) -> AssumptionReport:
    """(A1)-(A5) as far as they can be checked without sigma_1, sigma_{p+1}."""
    probL, probL0 = _problems(m, p, known)
    lamL = specL.select(range(1, 5)).lam
    lamL0 = specL0.select((1, 2)).lam
    passed, margins, details = {}, {}, {}
    edges = [j for j in range(m) if j not in (0, p)]
    margins["A1"] = _edge_margin(probL, lamL, [(j, "C" if j < p else "S") for j in edges], n_steps)
    passed["A1"] = margins["A1"] > tol
    margins["A2"] = _edge_margin(probL0, lamL0, [(j, "C" if j <= p else "S") for j in edges], n_steps)
    passed["A2"] = margins["A2"] > tol
    gap, low, ok = _distinct_positive(lamL, tol)
    margins["A3"], passed["A3"] = min(gap, low), ok
    details["A3"] = f"min gap {gap:.3e}, min eigenvalue {low:.6g}"
    if passed["A1"]:
        g = g_values(probL, lamL, n_steps)
        margins["A4"] = float(np.min(np.abs(g) / np.maximum(1.0, np.sqrt(np.abs(lamL)))))
        passed["A4"] = margins["A4"] > tol
    else:
        margins["A4"], passed["A4"] = 0.0, False
        details["A4"] = "g_nk undefined: a known Weyl function has a pole at an eigenvalue"
    gap0, low0, ok0 = _distinct_positive(lamL0, tol)
    margins["A5"], passed["A5"] = min(gap0, low0), ok0
    details["A5"] = f"min gap {gap0:.3e}, min eigenvalue {low0:.6g}"
    return AssumptionReport(passed, margins, details)


def m1_samples(sum_fn, sigma_p1: Potential, specL: SpectrumTable, hN: dict, specL0: SpectrumTable,
               n_trunc: int, pole_bound: float = 5.0, n_steps: int = DEFAULT_STEPS):
    """(lam, M_1) pairs at lam_nk (n <= n_trunc) and mu_nk, away from poles of M_{p+1}."""
    selL = specL.select(range(1, 5), n_trunc)
    keys0, hNv = _sorted_items({key: v for key, v in hN.items() if key[0] <= n_trunc})
    mu = np.array([specL0.get(n, k) for n, k in keys0])

    C, S, C1, S1 = transfer_matrix(sigma_p1, np.concatenate([selL.lam, mu]), n_steps)
    nL = selL.lam.size
    num = np.concatenate([S1[:nL], C1[nL:]])
    den = np.concatenate([S[:nL], C[nL:]])
    lam = np.concatenate([selL.lam, mu])
    scale = np.maximum(1.0, np.sqrt(np.abs(lam)))
    keep = np.abs(num) < pole_bound * scale * np.abs(den)
    m_p1 = -num[keep] / den[keep]
    base = np.concatenate([sum_fn(selL.lam), hNv])[keep]
    return np.column_stack([lam[keep], base - m_p1]), int(lam.size - keep.sum())


def truth_identities(m: int, p: int, known: dict, specL: SpectrumTable, specL0: SpectrumTable,
                     sigma1: Potential, sigma_p1: Potential, n_steps: int = DEFAULT_STEPS) -> dict:
    """Residuals of the identities linking data and the true sigma_1, sigma_{p+1}."""
    probL, probL0 = _problems(m, p, known)
    g = weyl_sum_g(probL, specL, n_steps)
    keys, gv = _sorted_items(g)
    lam = np.array([specL.get(n, k) for n, k in keys])
    D1, D2 = d_functions(sigma1, sigma_p1, lam, n_steps)
    rho = np.sqrt(lam)
    F1 = -D1 - np.cos(2 * rho * np.pi)
    F2 = rho * D2 - 0.5 * np.sin(2 * rho * np.pi)
    f = build_fnk(specL, g)
    fv = np.array([f[key] for key in keys])
    moment = (rho / gv) * F1 + F2

    def true_sum(x):
        a, b = d_functions(sigma1, sigma_p1, x, n_steps)
        return a / b

    hN, h = weyl_sums_h(probL0, specL0, true_sum, n_steps)
    keys0, hNv = _sorted_items(hN)
    hv = np.array([h[key] for key in keys0])
    mu = np.array([specL0.get(n, k) for n, k in keys0])
    C, S, _, _ = transfer_matrix(sigma_p1, mu, n_steps)
    r = np.sqrt(mu)
    rhs = sysT_rhs(mu, hNv, hv)
    F3 = r * C * S - 0.5 * np.sin(2 * r * np.pi)
    return {
        "defg": float(np.max(np.abs(gv - D1 / D2) / np.maximum(1.0, np.abs(gv)))),
        "moments": float(np.max(np.abs(moment - fv))),
        "moments_sign_flipped": float(np.max(np.abs(moment + fv))),
        "CS": float(np.max(np.abs((hNv - hv) * C * S - 1.0))),
        "sysT": float(np.max(np.abs(rhs - F3))),
        "prodCS": float(np.max(np.abs(C * S - (np.sin(2 * r * np.pi) / (2 * r) + rhs / r)))),
    }


def run_full_reconstruction(m: int, p: int, known: dict, specL: SpectrumTable, specL0: SpectrumTable,
                            params: ReconstructionParams | None = None, truth=None,
                            dry_run: bool = False) -> ReconstructionReport:
    """Recover (sigma_1, sigma_{p+1}); ``truth`` adds identity checks and final errors."""
    params = params or ReconstructionParams()
    assumptions = data_assumptions(m, p, known, specL, specL0, params.n_steps)
    report = ReconstructionReport(asdict(params), assumptions.to_dict())
    if truth is not None:
        try:
            report.truth_checks = truth_identities(m, p, known, specL, specL0, *truth,
                                                   n_steps=params.n_steps)
        except (AssumptionError, PoleError) as exc:
            report.truth_checks = {"error": str(exc)}
    if not assumptions.ok:
        report.status, report.failed_stage = "failed", "assumptions"
        report.error = f"assumptions violated: {assumptions.failed()}"
        return report
    if dry_run:
        report.status = "dry-run"
        return report

    probL, probL0 = _problems(m, p, known)
    stage = "weyl_sum_g"
    try:
        g = weyl_sum_g(probL, specL, params.n_steps)
        report.stages[stage] = {"count": len(g)}

        stage = "recover_sum"
        sum_fn = recover_sum_weyl(specL, g, params.n_trunc, params.ridge)
        rec = sum_fn.recovery
        report.stages[stage] = {"elements": int(rec.coeffs.size), "condition": rec.condition,
                                "residual": rec.residual, "ridge": rec.ridge}

        stage = "weyl_sums_h"
        hN, h = weyl_sums_h(probL0, specL0, sum_fn, params.n_steps)
        gaps = np.abs(np.array([hN[key] - h[key] for key in hN]))
        report.stages[stage] = {"count": len(hN), "min_gap": float(gaps.min())}

        stage = "recover_T"
        product = recover_T(specL0, hN, h, params.n_trunc, params.ridge)
        rec = product.recovery
        report.stages[stage] = {"elements": int(rec.coeffs.size), "condition": rec.condition,
                                "residual": rec.residual, "ridge": rec.ridge}

        stage = "split_zeros"
        nu, theta = split_zeros(product, params.n_use, params.zero_scan_min)
        report.stages[stage] = {"nu_count": int(nu.size), "theta_count": int(theta.size),
                                "min_gap_rho": float(np.min(np.diff(s_of(np.sort(np.r_[nu, theta])))))}

        stage = "two_spectra"
        fit = two_spectra_reconstruct(nu, theta, params.n_basis, params.n_use, params.n_steps)
        report.sigma_p1 = fit.potential
        report.stages[stage] = {"residual_norm": fit.residual_norm, "evaluations": fit.evaluations,
                                "converged": fit.converged}

        stage = "weyl_fit"
        samples, dropped = m1_samples(sum_fn, fit.potential, specL, hN, specL0, params.n_trunc,
                                      params.pole_bound, params.n_steps)
        fit1 = weyl_fit_reconstruct(samples, params.n_basis, n_steps=params.n_steps,
                                    accept_tol=params.weyl_accept_tol)
        report.sigma1 = fit1.potential
        report.stages[stage] = {"samples": int(samples.shape[0]), "dropped_near_poles": dropped,
                                "residual_norm": fit1.residual_norm, "evaluations": fit1.evaluations,
                                "converged": fit1.converged}
    except (StageError, AssumptionError, PoleError, FitDivergence, np.linalg.LinAlgError,
            ValueError, RuntimeError) as exc:
        report.status = "failed"
        report.failed_stage = getattr(exc, "stage", stage)
        report.error = str(exc)
        log.error("reconstruction failed in %s: %s", report.failed_stage, exc)
        return report

    report.status = "ok"
    if truth is not None:
        s1, sp1 = truth
        report.errors = {"sigma1": relative_l2_error(report.sigma1, s1),
                         "sigma_p1": relative_l2_error(report.sigma_p1, sp1)}
        probe = -np.linspace(1.0, 40.0, 50)
        a, b = d_functions(s1, sp1, probe, params.n_steps)
        report.errors["sum_weyl_probe"] = float(np.max(np.abs(sum_fn(probe) - a / b) / np.abs(a / b)))
    return report
