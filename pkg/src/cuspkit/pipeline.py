"""Run configuration and the verify / profile / spectrum / density drivers.

The drivers return plain data (dicts and row lists); :mod:`cuspkit.cli`
handles arguments, serialization and exit codes.
"""

from __future__ import annotations

import json
import math
import platform
import re
from dataclasses import asdict, dataclass, fields
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .angular import degree_power, l2_limit, lm_pairs, smooth_parts, sphere_rule
from .core import RadialGrid, WavefunctionModel, cusp_factor, log_grid, probe_directions, smooth_handle
from .density import DensityField, density_handle, evaluate, h_values
from .errors import ConfigurationError, CuspkitError, DomainError
from .hydrogenic import parse_state, to_model
from .orbitals import load_model, product_model
from .radial import (TOLERANCES, CheckResult, averaged_h_limit, averaged_profile, check_averaged_second,
                     check_cusp0_first, check_cusp0_second, check_first_order_cusp, check_kato_cusp,
                     check_marias, check_second_order_cusp, differencing_estimates, expansion_field,
                     fit_cusp_expansion, h_limit, radial_profile, reference_density, structure_tails)
from .regularity import classify

STRUCTURE_TOLERANCE = 1e-6
GENERAL_CHECKS = ("kato_cusp", "first_order_cusp", "second_order_cusp", "averaged_second", "polynomial_structure")
SYMMETRIC_CHECKS = ("cusp0_first", "cusp0_second", "marias")
CATALOG = GENERAL_CHECKS + SYMMETRIC_CHECKS


@dataclass
class RunConfig:
    model: str = "1s:Z=1"
    nucleus: int = 0
    scheme: str = "closed-form"
    samples: int = 100_000
    seed: int = 0
    grid_min: float = 1e-4
    grid_max: float = 5e-2
    grid_points: int = 24
    rule_degree: int = 17
    lmax: int = 8
    tol: float | None = None
    out: str | None = None
    deterministic: bool = False

    def __post_init__(self):
        if self.tol is not None and not self.tol > 0:
            raise ConfigurationError("tolerance must be positive")
        if self.samples < 2 or self.grid_points < 2:
            raise ConfigurationError("samples and grid points must be >= 2")
        if self.rule_degree < 2 * self.lmax:
            raise ConfigurationError(f"rule degree {self.rule_degree} aliases l <= {self.lmax}")

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        names = {f.name for f in fields(cls)}
        kw = {}
        for k, v in doc.items():
            key = k.lstrip("-").replace("-", "_")
            if key not in names:
                raise ConfigurationError(f"unknown configuration key {k!r}")
            kw[key] = v
        return cls(**kw)

    @classmethod
    def load(cls, path) -> "RunConfig":
        p = Path(path)
        if not p.is_file():
            raise ConfigurationError(f"configuration file {path} not found")
        return cls.from_dict(json.loads(p.read_text()))

    def to_dict(self) -> dict:
        return {k.replace("_", "-"): v for k, v in asdict(self).items()}

    def tolerance(self, identity: str) -> float:
        return TOLERANCES.get(identity, STRUCTURE_TOLERANCE) if self.tol is None else self.tol


_PRODUCT = re.compile(r"^\s*product:(1s|2s|2p|mixed)(?::Z=([0-9.eE+-]+))?(?::N=(\d+))?\s*$")


def resolve_model(spec: str) -> WavefunctionModel:
    """Built-in state (``"2p:Z=1"``), product state (``"product:1s:Z=1:N=2"``) or model JSON path."""
    m = _PRODUCT.match(spec)
    if m:
        return product_model(float(m.group(2) or 1.0), int(m.group(3) or 2), m.group(1))
    try:
        return to_model(parse_state(spec))
    except DomainError:
        pass
    p = Path(spec)
    if p.is_file():
        return load_model(p)
    raise ConfigurationError(f"model {spec!r} is neither a built-in state nor an existing file")


def make_field(cfg: RunConfig, model: WavefunctionModel) -> DensityField:
    return DensityField(model, scheme=cfg.scheme, samples=cfg.samples, seed=cfg.seed, anchor=cfg.nucleus)


def _grid(cfg: RunConfig, model, r_max=None) -> RadialGrid:
    return log_grid(cfg.grid_min, cfg.grid_max if r_max is None else min(cfg.grid_max, r_max),
                    cfg.grid_points, anchor=cfg.nucleus, frame=model.frame)


def _aggregate(identity, results, tolerance):
    """One report entry per identity: worst direction on top, all directions listed."""
    worst = max(results, key=lambda r: (not r.passed, r.relative if math.isfinite(r.relative) else math.inf))
    entry = worst.to_dict()
    entry.pop("direction", None)
    entry.update(identity=identity, tolerance=tolerance, **{"pass": all(r.passed for r in results)})
    entry["inconclusive"] = any(r.inconclusive for r in results)
    if len(results) > 1 or results[0].direction is not None:
        entry["worst_direction"] = list(worst.direction) if worst.direction else None
        entry["directions"] = [r.to_dict() for r in results]
    return entry


def _versions():
    return {"cuspkit": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__}


def verify(cfg: RunConfig) -> dict:
    """Run every applicable identity check and the regularity probe."""
    report = {
        "config": cfg.to_dict(),
        "catalog": list(CATALOG),
        "checks": [],
        "skipped": [],
        "errors": [],
    }
    try:
        model = resolve_model(cfg.model)
        field = make_field(cfg, model)
        frame = model.frame
        if not 0 <= cfg.nucleus < len(frame):
            raise ConfigurationError(f"nucleus {cfg.nucleus} not in frame")
        Z = float(frame.charges[cfg.nucleus])
        center = frame.positions[cfg.nucleus]
        grid = _grid(cfg, model)
        rule = sphere_rule(cfg.rule_degree)
        rho = density_handle(field)
    except CuspkitError as exc:
        report["errors"].append({"stage": "setup", "type": type(exc).__name__, "message": str(exc)})
        report["skipped"] = [{"identity": name, "reason": "setup failed"} for name in CATALOG]
        return _finish(report, cfg)

    report["model"] = {"name": model.name, "electrons": model.n_electrons, "energy": model.energy,
                       "symmetry": model.symmetry, "frame": frame.to_dict(), "anchor_charge": Z}

    def stage(name, fn):
        try:
            return fn()
        except CuspkitError as exc:
            report["errors"].append({"stage": name, "type": type(exc).__name__, "message": str(exc)})
            return None

    mgrid = _grid(cfg, model, 1e-2)
    sp = stage("smooth_parts", lambda: smooth_parts(rho, Z, rule, mgrid, center))
    if sp is not None:
        report["smooth_parts"] = {"grad_eta": sp.grad_eta.tolist(), "C": sp.C.tolist(),
                                  "hessian_chi": sp.hessian_chi.tolist(), "diagnostics": sp.diagnostics}

    avg = stage("averaged_profile", lambda: averaged_profile(field, frame, cfg.nucleus, rule, grid))
    ref = reference_density(avg) if avg is not None else 0.0
    results = {name: [] for name in CATALOG}

    if avg is not None:
        r = stage("kato_cusp", lambda: check_kato_cusp(avg, cfg.tolerance("kato_cusp")))
        if r is not None:
            results["kato_cusp"].append(r)
        ht = stage("averaged_h", lambda: averaged_h_limit(field, frame, cfg.nucleus, rule, grid))
        if ht is not None:
            report["h_averaged_0"] = {"value": ht[0], "uncertainty": ht[1]}
            r = stage("averaged_second", lambda: check_averaged_second(
                avg, ht[0], cfg.tolerance("averaged_second"), h0_uncertainty=ht[1]))
            if r is not None:
                results["averaged_second"].append(r)

    ef = stage("polynomial_structure", lambda: expansion_field(field, frame, cfg.nucleus, rule, grid))
    if ef is not None:
        tails = structure_tails(ef, Z, cfg.lmax)
        tol = cfg.tolerance("polynomial_structure")
        worst = max(tails.values())
        results["polynomial_structure"].append(_structure_result(tails, tol))
        report["spectrum"] = {
            q: degree_power(f.coefficients(cfg.lmax)).tolist() for q, f in (("phi1", ef.phi1), ("phi2", ef.phi2))
        }
        report["spectrum"]["tails"] = tails
        report["spectrum"]["truncated"] = bool(worst <= tol)

    symmetric = model.symmetry in ("even", "odd") and frame.is_atomic
    reason = None
    if model.symmetry not in ("even", "odd"):
        reason = f"model symmetry tag is {model.symmetry!r}; needs even or odd"
    elif not frame.is_atomic:
        reason = "identity holds for atomic eigenfunctions only"
    L = stage("l2_limit", lambda: l2_limit(rho, rule, grid, center, cfg.lmax)) if symmetric else None

    expansions = []
    for w in probe_directions():
        prof = stage("radial_profile", lambda: radial_profile(field, frame, cfg.nucleus, w, grid))
        if prof is None:
            continue
        ex = stage("fit", lambda: fit_cusp_expansion(prof))
        if ex is not None:
            d = ex.to_dict()
            d["direction"] = w.tolist()
            d["differencing"] = list(differencing_estimates(prof))
            expansions.append(d)
        if sp is not None:
            for name, fn in (
                ("first_order_cusp", lambda: check_first_order_cusp(
                    prof, sp.grad_eta, cfg.tolerance("first_order_cusp"), reference=ref)),
                ("second_order_cusp", lambda: check_second_order_cusp(
                    prof, sp.C, sp.hessian_chi, sp.grad_eta, cfg.tolerance("second_order_cusp"), reference=ref)),
            ):
                r = stage(name, fn)
                if r is not None:
                    results[name].append(r)
        if symmetric:
            r = stage("cusp0_first", lambda: check_cusp0_first(
                prof, model.symmetry, cfg.tolerance("cusp0_first"), reference=ref))
            if r is not None:
                results["cusp0_first"].append(r)
            if sp is not None:
                r = stage("cusp0_second", lambda: check_cusp0_second(
                    prof, sp.hessian_chi, model.symmetry, cfg.tolerance("cusp0_second"), reference=ref))
                if r is not None:
                    results["cusp0_second"].append(r)
            hw = stage("h_limit", lambda: h_limit(field, frame, cfg.nucleus, w, grid))
            if hw is not None and L is not None:
                r = stage("marias", lambda: check_marias(
                    prof, hw[0], float(L.limit.at(w, cfg.lmax)[0]), model.symmetry,
                    cfg.tolerance("marias"), h0_uncertainty=hw[1], reference=ref))
                if r is not None:
                    results["marias"].append(r)
    report["expansions"] = expansions

    for name in CATALOG:
        if name in SYMMETRIC_CHECKS and not symmetric:
            report["skipped"].append({"identity": name, "reason": reason})
        elif results[name]:
            report["checks"].append(_aggregate(name, results[name], cfg.tolerance(name)))
        else:
            report["skipped"].append({"identity": name, "reason": "not evaluated: see errors"})

    mu = smooth_handle(frame, rho)
    verdict = stage("regularity", lambda: classify(mu, f"mu[{model.name}]", center=center))
    if verdict is not None:
        report["regularity"] = verdict.to_dict()
    return _finish(report, cfg)


def _structure_result(tails, tol):
    worst = max(tails, key=tails.get)
    v = tails[worst]
    return CheckResult("polynomial_structure", v, 0.0, v, tol, bool(v <= tol), False, 0.0, 1.0,
                       note=f"largest relative tail: {worst}")


def _finish(report, cfg):
    report["summary"] = {
        "executed": len(report["checks"]),
        "skipped": len(report["skipped"]),
        "catalog_size": len(CATALOG),
        "all_passed": bool(report["checks"]) and all(c["pass"] for c in report["checks"]) and not report["errors"],
    }
    prov = {"versions": _versions(), "seed": cfg.seed, "scheme": cfg.scheme}
    if not cfg.deterministic:
        prov["timestamp"] = datetime.now(timezone.utc).isoformat()
    report["provenance"] = prov
    return sanitize(report)


def sanitize(obj):
    """Replace non-finite floats by None and numpy scalars by Python ones."""
    if isinstance(obj, dict):
        return {k: sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return sanitize(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


def exit_code(report: dict) -> int:
    """0 iff every executed check passed and no stage failed."""
    if report["errors"]:
        return 2
    return 0 if report["summary"]["all_passed"] else 1


# --------------------------------------------------------------------------- tables

def profile_rows(cfg: RunConfig, directions, radii) -> list:
    """Rows ``r, wx, wy, wz, rho, rho_err, eta, eta_err, mu, mu_err``."""
    model = resolve_model(cfg.model)
    field = make_field(cfg, model)
    frame = model.frame
    grid = RadialGrid(np.asarray(radii, float), cfg.nucleus).check(frame)
    center = frame.positions[cfg.nucleus]
    Z = float(frame.charges[cfg.nucleus])
    rows = []
    for w in directions:
        w = np.asarray(w, float) / np.linalg.norm(w)
        pts = center + grid.radii[:, None] * w
        v, e = evaluate(field, pts)
        f_all = np.exp(-np.asarray(cusp_factor(frame, pts)))
        eta = np.exp(Z * grid.radii)
        for k, r in enumerate(grid.radii):
            rows.append([r, *w, v[k], e[k], eta[k] * v[k], eta[k] * e[k], f_all[k] * v[k], f_all[k] * e[k]])
    return rows


PROFILE_HEADER = ["r", "wx", "wy", "wz", "rho", "rho_err", "eta", "eta_err", "mu", "mu_err"]
SPECTRUM_HEADER = ["quantity", "l", "m", "coefficient", "radius"]
DENSITY_HEADER = ["x", "y", "z", "value", "error"]


def spectrum_rows(cfg: RunConfig):
    """Harmonic coefficients of ``phi1`` and ``phi2`` plus the truncation verdicts."""
    model = resolve_model(cfg.model)
    field = make_field(cfg, model)
    rule = sphere_rule(cfg.rule_degree)
    grid = _grid(cfg, model)
    ef = expansion_field(field, model.frame, cfg.nucleus, rule, grid)
    Z = float(model.frame.charges[cfg.nucleus])
    rows = []
    for name, f in (("phi1", ef.phi1), ("phi2", ef.phi2)):
        c = f.coefficients(cfg.lmax)
        for (l, m), v in zip(lm_pairs(cfg.lmax), c):
            rows.append([name, l, m, float(v), 0.0])
    tails = structure_tails(ef, Z, cfg.lmax)
    tol = cfg.tolerance("polynomial_structure")
    verdicts = {
        "phi1": {"max_degree": 1, "relative_tail": tails["phi1"], "truncated": tails["phi1"] <= tol},
        "phi2": {"max_degree": 2, "relative_tail": tails["phi2"], "truncated": tails["phi2"] <= tol},
    }
    return rows, verdicts


def density_rows(cfg: RunConfig, points, with_h: bool = False) -> tuple:
    model = resolve_model(cfg.model)
    field = make_field(cfg, model)
    pts = np.asarray(points, float).reshape(-1, 3)
    v, e = evaluate(field, pts)
    rows = [[*p, a, b] for p, a, b in zip(pts, v, e)]
    header = list(DENSITY_HEADER)
    if with_h:
        hv, he = h_values(field, pts)
        rows = [row + [a, b] for row, a, b in zip(rows, hv, he)]
        header += ["h", "h_error"]
    return header, rows
