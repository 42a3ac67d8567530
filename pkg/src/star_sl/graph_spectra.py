"""Characteristic functions and branch-labelled spectra of the star-graph problems.

Edges ``1..neumann_count`` carry y^[1](0) = 0 and contribute C-factors,
the remaining edges carry y(0) = 0 and contribute S-factors.  With
``neumann_count = p`` this is problem L, with ``p + 1`` problem L0.

Eigenvalues are located through the Weyl functions: every M_j is strictly
increasing between its poles (dM/dlam = int y^2 / y(pi)^2), hence
sum_j M_j = -Delta / (prod C prod S) has exactly one zero below the
smallest pole and one between any two consecutive distinct poles, while
r coinciding poles carry an eigenvalue of multiplicity r - 1.  The poles
are the per-edge zeros, which are simple and easy to scan.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .edge import SpectrumError, edge_zeros
from .roots import bisect_batch, lam_of, s_of
from .sl_core import DEFAULT_STEPS, Potential, transfer_matrix

__all__ = [
    "StarProblem", "SpectrumTable", "SpectrumError", "char_delta", "asymptotic_prediction",
    "branch_classes", "find_eigenvalues", "verify_assumptions", "AssumptionReport",
]


@dataclass(frozen=True)
class StarProblem:
    m: int
    p: int
    potentials: tuple[Potential, ...]
    neumann_count: int

    def __post_init__(self):
        if self.m < 4:
            raise ValueError("need m >= 4 edges")
        if not 2 <= self.p <= self.m - 2:
            raise ValueError(f"need 2 <= p <= m-2, got p={self.p}, m={self.m}")
        if len(self.potentials) != self.m:
            raise ValueError(f"expected {self.m} potentials, got {len(self.potentials)}")
        if self.neumann_count not in (self.p, self.p + 1):
            raise ValueError("neumann_count must be p (problem L) or p+1 (problem L0)")
        object.__setattr__(self, "potentials", tuple(self.potentials))

    @classmethod
    def L(cls, m, p, potentials):
        return cls(m, p, tuple(potentials), p)

    @classmethod
    def L0(cls, m, p, potentials):
        return cls(m, p, tuple(potentials), p + 1)

    def kinds(self) -> list[str]:
        return ["C" if j < self.neumann_count else "S" for j in range(self.m)]

    @property
    def alpha(self) -> float:
        return float(np.arccos(np.sqrt(self.neumann_count / self.m)))


def branch_classes(m: int, neumann_count: int) -> dict[int, str]:
    """Asymptotic class of every branch index k = 1..m.

    Classes: "a" (n - 1 + alpha/pi), "b" (n - alpha/pi), "half" (n - 1/2),
    "int" (n).  Index 3 goes to the half-integer set and 4 to the integer
    set whenever those sets are non-empty.
    """
    n_half = neumann_count - 1
    order = [3] + list(range(5, m + 1)) + [4]
    half = set(order[:n_half])
    out = {1: "a", 2: "b"}
    for k in range(3, m + 1):
        out[k] = "half" if k in half else "int"
    return out


def _class_position(cls_name: str, n, a: float):
    return {"a": n - 1 + a, "b": n - a, "half": n - 0.5, "int": n}[cls_name]


def asymptotic_prediction(m: int, neumann_count: int, n: int, k: int) -> float:
    """Leading-order rho_nk with the decaying remainder set to zero."""
    if not 1 <= k <= m:
        raise ValueError(f"branch index k must be in 1..{m}")
    if n < 1:
        raise ValueError("n must be positive")
    a = np.arccos(np.sqrt(neumann_count / m)) / np.pi
    return float(_class_position(branch_classes(m, neumann_count)[k], n, a))


@dataclass
class SpectrumTable:
    """Eigenvalues lam_nk with their branch labels.

    ``rho`` is the signed square root: sqrt(lam) for lam >= 0 and
    -sqrt(-lam) otherwise.
    """

    n: np.ndarray
    k: np.ndarray
    lam: np.ndarray
    m: int
    neumann_count: int
    notes: list[str] = field(default_factory=list)

    @property
    def rho(self) -> np.ndarray:
        return s_of(self.lam)

    @property
    def alpha(self) -> float:
        return float(np.arccos(np.sqrt(self.neumann_count / self.m)))

    @property
    def n_max(self) -> int:
        return int(self.n.max()) if self.n.size else 0

    def branch(self, k: int) -> np.ndarray:
        sel = self.k == k
        order = np.argsort(self.n[sel])
        return self.lam[sel][order]

    def select(self, ks, n_max: int | None = None) -> "SpectrumTable":
        sel = np.isin(self.k, list(ks))
        if n_max is not None:
            sel &= self.n <= n_max
        return SpectrumTable(self.n[sel], self.k[sel], self.lam[sel], self.m,
                             self.neumann_count, list(self.notes))

    def get(self, n: int, k: int) -> float:
        hit = np.nonzero((self.n == n) & (self.k == k))[0]
        if hit.size != 1:
            raise KeyError((n, k))
        return float(self.lam[hit[0]])

    def __len__(self):
        return int(self.lam.size)

    def records(self) -> list[dict]:
        return [{"n": int(n), "k": int(k), "lambda": float(l), "rho": float(r)}
                for n, k, l, r in zip(self.n, self.k, self.lam, self.rho)]

    def to_json(self) -> str:
        return json.dumps(self.records(), indent=1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "k", "lambda", "rho"])
        for r in self.records():
            w.writerow([r["n"], r["k"], repr(r["lambda"]), repr(r["rho"])])
        return buf.getvalue()

    @classmethod
    def from_records(cls, records, m: int, neumann_count: int) -> "SpectrumTable":
        recs = list(records)
        return cls(np.array([int(r["n"]) for r in recs], dtype=int),
                   np.array([int(r["k"]) for r in recs], dtype=int),
                   np.array([float(r["lambda"]) for r in recs]), m, neumann_count)

    @classmethod
    def from_json(cls, text: str, m: int, neumann_count: int) -> "SpectrumTable":
        return cls.from_records(json.loads(text), m, neumann_count)

    @classmethod
    def from_csv(cls, text: str, m: int, neumann_count: int) -> "SpectrumTable":
        return cls.from_records(csv.DictReader(io.StringIO(text)), m, neumann_count)


# ---------------------------------------------------------------------------

def _edge_values(prob: StarProblem, lam, n_steps):
    vals = []
    for pot, kind in zip(prob.potentials, prob.kinds()):
        C, S, C1, S1 = transfer_matrix(pot, lam, n_steps)
        vals.append((C, C1) if kind == "C" else (S, S1))
    return vals


def char_delta(prob: StarProblem, lam, n_steps: int = DEFAULT_STEPS):
    """Characteristic function Delta(lam); zeros are the eigenvalues."""
    vals = _edge_values(prob, lam, n_steps)
    total = 0.0
    for j in range(prob.m):
        term = vals[j][1]
        for i in range(prob.m):
            if i != j:
                term = term * vals[i][0]
        total = total + term
    return total[()] if isinstance(total, np.ndarray) else total


def _unique_problems(prob: StarProblem):
    """Group edges with identical (potential, kind)."""
    groups: dict[tuple, list[int]] = {}
    for j, key in enumerate(zip(prob.potentials, prob.kinds())):
        groups.setdefault(key, []).append(j)
    return groups


def _poles(prob: StarProblem, rho_max: float, n_steps: int):
    zeros = []
    for (pot, kind), edges in _unique_problems(prob).items():
        z = edge_zeros(pot, kind, rho_max, n_steps)
        zeros += [z] * len(edges)
    return np.sort(np.concatenate(zeros))


def weyl_sum_sign(prob: StarProblem, s, n_steps: int = DEFAULT_STEPS):
    """sum_j M_j at lam = s|s|; increasing between consecutive poles."""
    total = 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        for val, der in _edge_values(prob, lam_of(s), n_steps):
            total = total - der / val
    return total


def _graph_roots(prob: StarProblem, rho_max: float, n_steps: int, pole_tol: float = 1e-10):
    poles = s_of(_poles(prob, rho_max, n_steps))
    # coincident poles: multiplicity r - 1 roots at the common pole
    groups = []
    for s in poles:
        if groups and abs(s - groups[-1][-1]) <= pole_tol * max(1.0, abs(s)):
            groups[-1].append(s)
        else:
            groups.append([s])
    centers = np.array([np.mean(g) for g in groups])
    multi = [c for c, g in zip(centers, groups) for _ in range(len(g) - 1)]

    lower = -np.sqrt(max(pt.sup_norm() for pt in prob.potentials) ** 2 + 1.0)
    lo = np.concatenate([[lower], centers])
    hi = np.concatenate([centers, [rho_max]])
    fn = lambda s: weyl_sum_sign(prob, s, n_steps)
    # the Weyl sum runs from -inf to +inf between consecutive poles
    f_lo = -np.ones(lo.size)
    f_hi = np.ones(lo.size)
    f_lo[0] = fn(np.array([lower]))[0]
    f_hi[-1] = fn(np.array([rho_max]))[0]
    if not f_lo[0] < 0:
        raise SpectrumError("Weyl sum not negative at the lower spectral bound")
    keep = np.ones(lo.size, dtype=bool)
    keep[-1] = f_hi[-1] > 0
    roots = bisect_batch(fn, lo[keep], hi[keep], flo=f_lo[keep], fhi=f_hi[keep])
    return np.sort(np.concatenate([roots, multi]))


def _assign_branches(roots_s, m: int, nc: int, n_max: int, amb_tol: float = 1e-9):
    a = np.arccos(np.sqrt(nc / m)) / np.pi
    classes = branch_classes(m, nc)
    mult = {c: sum(v == c for v in classes.values()) for c in ("a", "b", "half", "int")}
    cand = []
    for n in range(1, n_max + 3):
        for c in ("a", "b", "half", "int"):
            if mult[c]:
                cand.append((_class_position(c, n, a), n, c))
    pos = np.array([x[0] for x in cand])
    buckets: dict[tuple[int, str], list[float]] = {}
    for s in roots_s:
        d = np.abs(pos - max(s, 0.0))
        order = np.argsort(d)
        i0, i1 = order[0], order[1]
        if abs(d[i1] - d[i0]) <= amb_tol and pos[i1] != pos[i0]:
            raise SpectrumError(f"ambiguous branch for rho={s}: equidistant from two asymptotes")
        _, n, c = cand[i0]
        buckets.setdefault((n, c), []).append(s)
    n_out, k_out, s_out = [], [], []
    problems = []
    for n in range(1, n_max + 1):
        for c in ("a", "b", "half", "int"):
            got = sorted(buckets.get((n, c), []))
            if len(got) != mult[c]:
                problems.append(f"n={n} class={c}: {len(got)} roots, expected {mult[c]}")
                continue
            ks = sorted(k for k, v in classes.items() if v == c)
            for k, s in zip(ks, got):
                n_out.append(n)
                k_out.append(k)
                s_out.append(s)
    return np.array(n_out, dtype=int), np.array(k_out, dtype=int), np.array(s_out), problems


def _assign_by_rank(roots_s, m: int, nc: int, n_max: int):
    """j-th smallest root to the j-th smallest asymptote, multiplicities included."""
    a = np.arccos(np.sqrt(nc / m)) / np.pi
    classes = branch_classes(m, nc)
    slots = sorted((_class_position(c, n, a), n, k)
                   for n in range(1, n_max + 3) for k, c in classes.items())
    roots_s = np.sort(roots_s)
    picked = [(n, k, s) for (_, n, k), s in zip(slots, roots_s) if n <= n_max]
    if len(picked) != m * n_max:
        return None
    n, k, s = map(np.array, zip(*picked))
    return n.astype(int), k.astype(int), s


def find_eigenvalues(prob: StarProblem, n_max: int, n_steps: int = DEFAULT_STEPS,
                     strict: bool = True) -> SpectrumTable:
    """Eigenvalues lam_nk, n <= n_max, labelled by nearest asymptote.

    Roots are counted exactly, so when a low-lying root sits nearer to a
    neighbouring asymptote the labels fall back to rank order (noted in
    ``notes``).  With ``strict`` a remaining count mismatch raises
    SpectrumError; otherwise incomplete groups are left out and listed in
    ``notes``.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    roots = _graph_roots(prob, n_max + 1.0, n_steps)
    n, k, s, problems = _assign_branches(roots, prob.m, prob.neumann_count, n_max)
    if problems:
        ranked = _assign_by_rank(roots, prob.m, prob.neumann_count, n_max)
        if ranked is not None:
            problems = ["nearest-asymptote labels incomplete; rank order used: " + "; ".join(problems[:3])]
            n, k, s = ranked
            strict = False
    if problems and strict:
        raise SpectrumError("; ".join(problems[:6]))
    order = np.lexsort((n, k))
    return SpectrumTable(n[order], k[order], lam_of(s[order]), prob.m, prob.neumann_count,
                         notes=problems)


# ---------------------------------------------------------------------------

@dataclass
class AssumptionReport:
    passed: dict[str, bool]
    margins: dict[str, float]
    details: dict[str, str] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.passed.values())

    def failed(self) -> list[str]:
        return [k for k, v in self.passed.items() if not v]

    def to_dict(self) -> dict:
        return {"ok": self.ok, "passed": dict(self.passed),
                "margins": {k: float(v) for k, v in self.margins.items()},
                "details": dict(self.details)}


def _edge_margin(prob: StarProblem, lam, edges_kinds, n_steps):
    worst = np.inf
    for j, kind in edges_kinds:
        C, S, C1, S1 = transfer_matrix(prob.potentials[j], lam, n_steps)
        val, der = (C, C1) if kind == "C" else (S, S1)
        # scale-free: |y(pi)| relative to the size of (y, y^[1]) at pi
        rel = np.abs(val) / (np.abs(val) + np.abs(der) / np.maximum(1.0, np.sqrt(np.abs(lam))))
        worst = min(worst, float(np.min(rel)) if rel.size else np.inf)
    return worst


def _distinct_positive(lams, tol):
    lams = np.sort(np.asarray(lams, dtype=float))
    gap = float(np.min(np.diff(lams))) if lams.size > 1 else np.inf
    low = float(lams.min()) if lams.size else np.inf
    return gap, low, (gap > tol and low > 0)


def verify_assumptions(probL: StarProblem, probL0: StarProblem, specL: SpectrumTable,
                       specL0: SpectrumTable, n_steps: int = DEFAULT_STEPS,
                       tol: float = 1e-8) -> AssumptionReport:
    """Check (A1)-(A5) on the supplied spectra and report worst margins.

    Only branches k = 1..4 of L and k = 1, 2 of L0 enter the inverse
    problem, so those are the ones checked.
    """
    from .weyl import g_values  # local import: weyl depends on this module

    m, p = probL.m, probL.p
    lamL = specL.select(range(1, 5)).lam
    lamL0 = specL0.select((1, 2)).lam
    passed, margins, details = {}, {}, {}

    a1 = [(j, "C") for j in range(p)] + [(j, "S") for j in range(p, m)]
    margins["A1"] = _edge_margin(probL, lamL, a1, n_steps)
    passed["A1"] = margins["A1"] > tol
    a2 = [(j, "C") for j in range(p + 1)] + [(j, "S") for j in range(p, m)]
    margins["A2"] = _edge_margin(probL0, lamL0, a2, n_steps)
    passed["A2"] = margins["A2"] > tol

    gap, low, ok = _distinct_positive(lamL, tol)
    margins["A3"] = min(gap, low)
    passed["A3"] = ok
    details["A3"] = f"min gap {gap:.3e}, min eigenvalue {low:.6g}"

    if passed["A1"]:
        g = g_values(probL, lamL, n_steps)
        rel = np.abs(g) / np.maximum(1.0, np.sqrt(np.abs(lamL)))
        margins["A4"] = float(rel.min())
        passed["A4"] = margins["A4"] > tol
    else:
        margins["A4"] = 0.0
        passed["A4"] = False
        details["A4"] = "g_nk undefined: a Weyl function has a pole at an eigenvalue"

    gap0, low0, ok0 = _distinct_positive(lamL0, tol)
    margins["A5"] = min(gap0, low0)
    passed["A5"] = ok0
    details["A5"] = f"min gap {gap0:.3e}, min eigenvalue {low0:.6g}"
    return AssumptionReport(passed, margins, details)
