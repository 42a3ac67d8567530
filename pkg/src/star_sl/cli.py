"""star-sl: forward solves, reconstructions and self-checks from a JSON config.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 forward-solver error, 4 assumption failure, 5 reconstruction-stage failure.
"""
from __future__ import annotations

import argparse
import copy
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .checks import SUITES
from .edge import SpectrumError
from .fixtures import FixtureError, make_fixture
from .graph_spectra import SpectrumTable, StarProblem, find_eigenvalues
from .pipeline import ReconstructionParams, run_full_reconstruction
from .sl_core import IntegrationError, Potential

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_SOLVER, EXIT_ASSUMPTION, EXIT_STAGE = 0, 1, 2, 3, 4, 5

DEFAULTS = {
    "graph": {"m": 5, "p": 2},
    "potentials": {},
    "spectra": {},
    "truncation": {"n_max": 30, "n_trunc": 30, "n_use": 20, "n_basis": 8, "n_steps": 2000},
    "tolerances": {"pole_bound": 5.0, "ridge": None, "min_margin": 1e-3, "zero_scan_min": -3.0,
                   "weyl_accept_tol": 1e-3},
    "seeds": {"fixture": 0, "amplitude": 0.3},
    "outputs": {"dir": "star_sl_out", "plot_points": 512},
}

log = logging.getLogger("star_sl")


class ConfigError(ValueError):
    pass


def _merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in extra.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = val
    return out


def load_config(path: str | None) -> dict:
    if path is None:
        return copy.deepcopy(DEFAULTS)
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(raw) - set(DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    cfg = _merge(DEFAULTS, raw)
    m, p = cfg["graph"].get("m"), cfg["graph"].get("p")
    if not isinstance(m, int) or not isinstance(p, int):
        raise ConfigError("graph.m and graph.p must be integers")
    if m < 4 or not 2 <= p <= m - 2:
        raise ConfigError(f"need m >= 4 and 2 <= p <= m-2, got m={m}, p={p}")
    return cfg


def _potential(spec) -> Potential:
    if isinstance(spec, (int, float)):
        return Potential.constant(spec)
    if isinstance(spec, list):
        return Potential.cosine(spec)
    if isinstance(spec, dict):
        return Potential.from_dict(spec)
    raise ConfigError(f"cannot read potential from {spec!r}")


def _edge_potentials(cfg: dict, allow_unknown: bool = False) -> list[Potential | None] | None:
    """Edge potentials; with ``allow_unknown`` edges 1 and p+1 may be null."""
    edges = cfg["potentials"].get("edges")
    if edges is None:
        return None
    if len(edges) != cfg["graph"]["m"]:
        raise ConfigError(f"potentials.edges must list {cfg['graph']['m']} potentials")
    unknown = (0, cfg["graph"]["p"]) if allow_unknown else ()
    try:
        return [None if e is None and j in unknown else _potential(e) for j, e in enumerate(edges)]
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc


def _fixture(cfg: dict):
    t = cfg["truncation"]
    return make_fixture(cfg["graph"]["m"], cfg["graph"]["p"], cfg["seeds"]["amplitude"], t["n_max"],
                        cfg["seeds"]["fixture"], min_margin=cfg["tolerances"]["min_margin"],
                        n_steps=t["n_steps"])


def _out_dir(cfg: dict, override: str | None) -> Path:
    out = Path(override or cfg["outputs"]["dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True, default=float) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------

def cmd_forward(cfg: dict, out_dir: Path) -> int:
    m, p = cfg["graph"]["m"], cfg["graph"]["p"]
    t = cfg["truncation"]
    pots = _edge_potentials(cfg)
    if pots is None:
        pots = list(_fixture(cfg).potentials)
    for name, prob in (("L", StarProblem.L(m, p, pots)), ("L0", StarProblem.L0(m, p, pots))):
        table = find_eigenvalues(prob, t["n_max"], t["n_steps"])
        (out_dir / f"spectrum_{name}.json").write_text(table.to_json(), encoding="utf-8")
        (out_dir / f"spectrum_{name}.csv").write_text(table.to_csv(), encoding="utf-8")
    _write_json(out_dir / "forward_config.json", {"config": cfg, "potentials": [q.to_dict() for q in pots]})
    print(f"wrote spectra for L and L0 to {out_dir}")
    return EXIT_OK


def _plot_rows(report, truth, n_points: int):
    x = np.linspace(0.0, np.pi, n_points)
    cols = {"x": x}
    for label, rec, true in (("sigma1", report.sigma1, truth[0] if truth else None),
                             ("sigma_p1", report.sigma_p1, truth[1] if truth else None)):
        if true is not None:
            cols[f"{label}_true"] = true(x)
        if rec is not None:
            cols[f"{label}_recovered"] = rec(x)
    return cols


def cmd_reconstruct(cfg: dict, out_dir: Path, dry_run: bool) -> int:
    m, p = cfg["graph"]["m"], cfg["graph"]["p"]
    t, tol = cfg["truncation"], cfg["tolerances"]
    spectra = cfg["spectra"]
    truth = None
    if spectra.get("L") and spectra.get("L0"):
        pots = _edge_potentials(cfg, allow_unknown=True)
        if pots is None:
            raise ConfigError("potentials.edges is required with spectra files (unknown edges may be null)")
        known = {j: q for j, q in enumerate(pots) if j not in (0, p)}
        try:
            specL = SpectrumTable.from_json(Path(spectra["L"]).read_text(encoding="utf-8"), m, p)
            specL0 = SpectrumTable.from_json(Path(spectra["L0"]).read_text(encoding="utf-8"), m, p + 1)
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError(f"cannot read spectra: {exc}") from exc
        if pots[0] is not None and pots[p] is not None:
            truth = (pots[0], pots[p])
    else:
        fx = _fixture(cfg)
        known, specL, specL0 = fx.known(), fx.specL, fx.specL0
        truth = (fx.sigma1, fx.sigma_p1)

    params = ReconstructionParams(n_trunc=t["n_trunc"], n_use=t["n_use"], n_basis=t["n_basis"],
                                  ridge=tol["ridge"], pole_bound=tol["pole_bound"],
                                  zero_scan_min=tol["zero_scan_min"],
                                  weyl_accept_tol=tol["weyl_accept_tol"], n_steps=t["n_steps"])
    report = run_full_reconstruction(m, p, known, specL, specL0, params, truth=truth, dry_run=dry_run)
    data = report.to_dict()
    data["config"] = cfg
    _write_json(out_dir / "report.json", data)
    print(f"status: {report.status}" + (f" ({report.failed_stage}: {report.error})" if report.error else ""))
    for name, val in report.errors.items():
        print(f"  relative error {name}: {val:.3e}")
    if report.failed_stage == "assumptions":
        return EXIT_ASSUMPTION
    if dry_run:
        return EXIT_OK
    if report.status != "ok":
        return EXIT_STAGE
    cols = _plot_rows(report, truth, int(cfg["outputs"]["plot_points"]))
    with open(out_dir / "potentials.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(cols))
        writer.writerows(zip(*(np.round(v, 12) for v in cols.values())))
    return EXIT_OK


def cmd_verify(suites: list[str]) -> int:
    unknown = [s for s in suites if s not in SUITES]
    if unknown:
        raise ConfigError(f"unknown suites {unknown}; choose from {sorted(SUITES)}")
    ok = True
    for name in suites or list(SUITES):
        for row in SUITES[name]():
            print(row.line())
            ok &= row.passed
    print("all checks passed" if ok else "some checks FAILED")
    return EXIT_OK if ok else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="star-sl", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=["forward", "reconstruct", "verify"])
    parser.add_argument("suites", nargs="*", help="verify only: " + ", ".join(SUITES))
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--dry-run", action="store_true", help="reconstruct: check assumptions only")
    parser.add_argument("--out", help="output directory (overrides outputs.dir)")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "verify":
            return cmd_verify(args.suites)
        cfg = load_config(args.config)
        out = _out_dir(cfg, args.out)
        if args.command == "forward":
            return cmd_forward(cfg, out)
        return cmd_reconstruct(cfg, out, args.dry_run)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SpectrumError, IntegrationError, FixtureError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
