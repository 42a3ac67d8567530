"""Single-edge inverse problems solved by least-squares fitting.

Potentials are sought in the span of cos(r x), r < R.  The forward solver
is the model: for two spectra the residuals are eigenvalue mismatches, for
Weyl data they are mismatches of -C^[1]/C at the sample points.  The
optimizer is scipy's Levenberg-Marquardt with analytic gradients from
first-order perturbation of the quasi-derivative system.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson
from scipy.optimize import least_squares

from .edge import edge_zeros_count, lower_bound
from .roots import lam_of, s_of
from .sl_core import DEFAULT_STEPS, PI, Potential, _expm_traceless, _magnus_nodes, transfer_matrix
from .weyl import PoleError, weyl_m

log = logging.getLogger(__name__)


class InterlacingError(ValueError):
    pass


class FitDivergence(RuntimeError):
    pass


def spectra_from_potential(p: Potential, n_max: int, n_steps: int = DEFAULT_STEPS):
    """(nu_0..nu_{n_max}, theta_1..theta_{n_max}): zeros of C(pi, .) and S(pi, .)."""
    nu = edge_zeros_count(p, "C", n_max + 1, n_steps)
    theta = edge_zeros_count(p, "S", n_max, n_steps)
    return nu, theta


def check_interlacing(nu, theta) -> None:
    nu = np.asarray(nu, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if nu.size not in (theta.size, theta.size + 1):
        raise InterlacingError("need len(nu) = len(theta) or len(theta) + 1")
    merged = np.empty(nu.size + theta.size)
    merged[0::2] = nu
    merged[1::2] = theta
    if np.any(np.diff(merged) <= 0):
        raise InterlacingError("sequences do not interlace as nu_0 < theta_1 < nu_1 < ...")


# ---------------------------------------------------------------------------
# model eigenvalues near given data

def _brackets(s_data, s_merged, s_floor):
    """Midpoints to the neighbours of each value in the merged list."""
    idx = np.searchsorted(s_merged, s_data)
    prev = np.where(idx > 0, s_merged[np.maximum(idx - 1, 0)], np.nan)
    nxt = np.where(idx + 1 < s_merged.size, s_merged[np.minimum(idx + 1, s_merged.size - 1)], np.nan)
    lo = np.where(np.isnan(prev), s_floor, 0.5 * (prev + s_data))
    gap = np.where(np.isnan(prev), nxt - s_data, s_data - prev)
    hi = np.where(np.isnan(nxt), s_data + 0.5 * gap, 0.5 * (s_data + nxt))
    return lo, hi


def _safeguarded_newton(fn, s0, lo, hi, tol=4e-16, max_iter=60):
    """Zeros of fn (vectorized in s) inside sign-changing brackets [lo, hi]."""
    flo, fhi = fn(lo), fn(hi)
    if np.any(np.sign(flo) * np.sign(fhi) > 0):
        return None
    x = s0.copy()
    for _ in range(max_iter):
        h = 1e-7 * (1.0 + np.abs(x))
        both = fn(np.concatenate([x, x + h]))
        fx, fh = both[: x.size], both[x.size:]
        same_lo = np.sign(fx) == np.sign(flo)
        lo = np.where(same_lo, x, lo)
        flo = np.where(same_lo, fx, flo)
        hi = np.where(same_lo, hi, x)
        deriv = (fh - fx) / h
        with np.errstate(divide="ignore", invalid="ignore"):
            cand = x - fx / deriv
        bad = ~np.isfinite(cand) | (cand <= lo) | (cand >= hi)
        new = np.where(bad, 0.5 * (lo + hi), cand)
        step = np.abs(new - x)
        x = new
        if np.all((step < tol * (1 + np.abs(x))) | (fx == 0)):
            break
    return x


def model_spectra(p: Potential, nu_data, theta_data, n_steps: int = DEFAULT_STEPS):
    """Eigenvalues of ``p`` with the same indices as the data sequences."""
    nu_data = np.asarray(nu_data, dtype=float)
    theta_data = np.asarray(theta_data, dtype=float)
    merged = np.sort(s_of(np.concatenate([nu_data, theta_data])))
    floor = -np.sqrt(-lower_bound(p)) - 0.1
    out = []
    for kind, data in (("C", nu_data), ("S", theta_data)):
        sd = s_of(data)
        lo, hi = _brackets(sd, merged, min(floor, merged[0] - 1.0))

        def fn(s, kind=kind):
            C, S, _, _ = transfer_matrix(p, lam_of(s), n_steps)
            return C if kind == "C" else S

        s = _safeguarded_newton(fn, sd, lo, hi)
        if s is None:
            out.append(edge_zeros_count(p, kind, data.size, n_steps))
        else:
            out.append(lam_of(s))
    return out[0], out[1]


def _mode_integrals(p: Potential, lam, kind: str, n_basis: int, n_steps: int):
    """int cos(r x) y (y^[1] + sigma y) dx, int y^2 dx and (y, y^[1])(pi) per lam."""
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    X, Y, Z0, Z1 = _magnus_nodes(p, n_steps)
    a, b, c, d = _expm_traceless(X[:, None], Y[:, None], Z0[:, None] + Z1[:, None] * lam[None, :])
    y = np.empty((n_steps + 1, lam.size))
    y1 = np.empty_like(y)
    y[0], y1[0] = (1.0, 0.0) if kind == "C" else (0.0, 1.0)
    for i in range(n_steps):
        y[i + 1] = a[i] * y[i] + b[i] * y1[i]
        y1[i + 1] = c[i] * y[i] + d[i] * y1[i]
    x = np.linspace(0.0, PI, n_steps + 1)
    yy = y * (y1 + p(x)[:, None] * y)
    modes = np.cos(np.outer(x, np.arange(n_basis)))
    proj = simpson(modes[:, :, None] * yy[:, None, :], x=x, axis=0).T
    return proj, simpson(y * y, x=x, axis=0), y[-1], y1[-1]


def eigen_gradients(p: Potential, lam, kind: str, n_basis: int, n_steps: int = DEFAULT_STEPS):
    """d lam / d a_r for the eigenvalues ``lam`` of kind "C" or "S", r < n_basis.

    First-order perturbation of the form int y'^2 - 2 sigma y y' gives
    -2 int cos(r x) y y' dx / int y^2 with y' = y^[1] + sigma y.
    """
    proj, norm, _, _ = _mode_integrals(p, lam, kind, n_basis, n_steps)
    return -2.0 * proj / norm[:, None]


def weyl_gradients(p: Potential, lam, n_basis: int, n_steps: int = DEFAULT_STEPS):
    """(M, dM/da_r) for M = -C^[1]/C(pi, lam); dM = 2 int delta_sigma y y' / C(pi)^2."""
    proj, _, C, C1 = _mode_integrals(p, lam, "C", n_basis, n_steps)
    return -C1 / C, 2.0 * proj / (C * C)[:, None]


# ---------------------------------------------------------------------------

@dataclass
class FitReport:
    potential: Potential
    residual_norm: float
    initial_residual_norm: float
    evaluations: int
    converged: bool
    message: str
    starts_tried: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"potential": self.potential.to_dict(), "residual_norm": self.residual_norm,
                "initial_residual_norm": self.initial_residual_norm,
                "evaluations": self.evaluations, "converged": self.converged,
                "message": self.message, "starts_tried": self.starts_tried}


def gauss_newton(residual, x0, jac=None, max_iter: int = 50, step_tol: float = 1e-10,
                 residual_tol: float = 1e-12, fallback_starts=(0.5, -0.5)) -> FitReport:
    """Damped Gauss-Newton (Levenberg-Marquardt) over cosine coefficients.

    ``jac`` defaults to forward differences.  A start that fails to reduce
    the residual triggers the constant fallback starts; the best iterate
    over all starts is returned.
    """
    x0 = np.asarray(x0, dtype=float)
    starts = [x0] + [np.concatenate([[c], np.zeros(x0.size - 1)]) for c in fallback_starts]
    best, tried = None, []
    r0 = float(np.linalg.norm(residual(x0)))
    for x_start in starts:
        try:
            res = least_squares(residual, x_start, method="lm", xtol=step_tol, ftol=1e-10,
                                gtol=1e-12, max_nfev=max_iter * (x0.size + 1), diff_step=1e-6,
                                jac="2-point" if jac is None else jac)
        except (PoleError, ArithmeticError, ValueError) as exc:
            tried.append({"start": x_start.tolist(), "error": str(exc)})
            continue
        norm = float(np.linalg.norm(res.fun))
        tried.append({"start": x_start.tolist(), "residual_norm": norm, "status": int(res.status)})
        if best is None or norm < best[1]:
            best = (res, norm)
        if res.status > 0 and (norm < r0 or norm <= residual_tol):
            break
    if best is None:
        raise FitDivergence("every start failed")
    res, norm = best
    if norm >= r0 and r0 > residual_tol:
        raise FitDivergence(f"residual not reduced ({norm:.3e} >= {r0:.3e})")
    converged = res.status > 0 or norm < residual_tol
    return FitReport(Potential.cosine(res.x), norm, r0, int(res.nfev), bool(converged),
                     str(res.message), tried)


def two_spectra_reconstruct(nu, theta, n_basis: int = 8, n_use: int = 30,
                            n_steps: int = DEFAULT_STEPS, initial: Potential | None = None) -> FitReport:
    """Cosine-series potential whose C- and S-spectra match ``nu`` and ``theta``.

    Uses nu_0..nu_{n_use} and theta_1..theta_{n_use}; squared mismatches are
    weighted by 1/(1 + n)^2.
    """
    check_interlacing(nu, theta)
    nu = np.asarray(nu, dtype=float)[: n_use + 1]
    theta = np.asarray(theta, dtype=float)[:n_use]
    w_nu = 1.0 / (1.0 + np.arange(nu.size))
    w_theta = 1.0 / (1.0 + np.arange(1, theta.size + 1))

    cache = {}

    def model(x):
        key = x.tobytes()
        if key not in cache:
            cache.clear()
            cache[key] = model_spectra(Potential.cosine(x), nu, theta, n_steps)
        return cache[key]

    def residual(x):
        mn, mt = model(x)
        return np.concatenate([w_nu * (mn - nu), w_theta * (mt - theta)])

    def jac(x):
        p = Potential.cosine(x)
        mn, mt = model(x)
        return np.vstack([w_nu[:, None] * eigen_gradients(p, mn, "C", n_basis, n_steps),
                          w_theta[:, None] * eigen_gradients(p, mt, "S", n_basis, n_steps)])

    x0 = np.zeros(n_basis) if initial is None else initial.coefficients(n_basis)
    return gauss_newton(residual, x0, jac=jac)


def _wrap(angle):
    return (angle + 0.5 * np.pi) % np.pi - 0.5 * np.pi


# |lam| thresholds of the partial sample sets, tried in turn
WEYL_STAGE_PLANS = ((5.0, 2.0), (3.0,), (10.0, 5.0, 2.0), ())


def weyl_fit_reconstruct(samples, n_basis: int = 8, initial: Potential | None = None,
                         n_steps: int = DEFAULT_STEPS, accept_tol: float = 1e-9,
                         fallback_starts=(0.5, -0.5)) -> FitReport:
    """Cosine-series potential whose M = -C^[1]/C(pi, lam) matches ``samples``.

    ``samples`` holds (lam, M) pairs.  Mismatches are measured as angles,
    arctan(M / s) with s = max(1, sqrt|lam|), taken modulo pi, so samples
    near a pole of M neither blow up nor dominate.

    Fitting all samples and modes at once from zero often ends in a wrong
    local minimum, so the fit is continued twice.  The first stage uses only
    samples with |lam| above a threshold, where M is close to its
    asymptotics, and adds cosine modes one at a time; later stages lower the
    threshold until every sample is in.  The plans in ``WEYL_STAGE_PLANS``
    are tried in turn, then the constant ``fallback_starts``, until the rms
    residual drops to ``accept_tol``; the smallest residual wins.
    """
    data = np.asarray(samples, dtype=float)
    if data.ndim != 2 or data.shape[1] != 2:
        raise ValueError("samples must be (lam, value) pairs")
    lam_all, val = data[:, 0], data[:, 1]
    if not np.all(np.isfinite(val)):
        raise PoleError("non-finite Weyl sample")
    scale_all = np.maximum(1.0, np.sqrt(np.abs(lam_all)))
    target_all = np.arctan(val / scale_all)
    size = np.abs(lam_all)

    def problem(mask):
        lam, scale, target = lam_all[mask], scale_all[mask], target_all[mask]

        def mismatch(x):
            C, _, C1, _ = transfer_matrix(Potential.cosine(x), lam, n_steps)
            return _wrap(np.arctan2(-C1 / scale, C) - target)

        def jac(x):
            proj, _, C, C1 = _mode_integrals(Potential.cosine(x), lam, "C", x.size, n_steps)
            return 2.0 * proj / (scale * (C * C + (C1 / scale) ** 2))[:, None]

        return mismatch, jac

    everything = np.ones(size.size, dtype=bool)
    full_mismatch = problem(everything)[0]

    def rms(x):
        return float(np.sqrt(np.mean(full_mismatch(x) ** 2)))

    def fit_from(x, cuts):
        masks = [size >= c for c in cuts if n_basis <= np.count_nonzero(size >= c) < size.size]
        nfev, res = 0, None
        for i, mask in enumerate(masks + [everything]):
            mismatch, jac = problem(mask)
            first = int(np.max(np.nonzero(x)[0], initial=0)) + 1 if i == 0 else n_basis
            for r in range(first, n_basis + 1):
                res = least_squares(mismatch, x[:r], jac=jac, method="lm",
                                    xtol=1e-14, ftol=1e-14, gtol=1e-15, max_nfev=400)
                x = np.r_[res.x, np.zeros(n_basis - r)]
                nfev += res.nfev
        return x, nfev, res

    x0 = np.zeros(n_basis) if initial is None else initial.coefficients(n_basis)
    r0 = rms(x0)
    attempts = [(x0, cuts) for cuts in WEYL_STAGE_PLANS]
    attempts += [(np.r_[c, np.zeros(n_basis - 1)], WEYL_STAGE_PLANS[0]) for c in fallback_starts]
    best, tried, total = None, [], 0
    for x_start, cuts in attempts:
        try:
            x, nfev, res = fit_from(x_start, cuts)
        except (PoleError, ArithmeticError, ValueError) as exc:
            tried.append({"start": x_start.tolist(), "cuts": list(cuts), "error": str(exc)})
            continue
        total += nfev
        value = rms(x)
        tried.append({"start": x_start.tolist(), "cuts": list(cuts), "residual_rms": value})
        if best is None or value < best[1]:
            best = (x, value, res)
        if value <= accept_tol:
            break
    if best is None:
        raise FitDivergence("every start failed")
    x, value, res = best
    if value >= r0 and r0 > accept_tol:
        raise FitDivergence(f"residual not reduced ({value:.3e} >= {r0:.3e})")
    if value > accept_tol:
        log.info("Weyl fit: rms residual %.3e above %.1e", value, accept_tol)
    return FitReport(Potential.cosine(x), value, r0, total, bool(value <= accept_tol),
                     str(res.message), tried)
