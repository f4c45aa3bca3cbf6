"""Scenario configs: a grid, named fields, and one table per analysis.

The config is TOML. A role inside an analysis table is either the name of a
table under ``[fields]`` or an inline family table; a missing role means the
zero field. ``factor = [re, im]`` in a field table multiplies the sampled
family by ``re + i im``.

    [grid]
    dim = 3
    points = 32
    levels = [16, 32]

    [fields.sigma]
    family = "hardy"
    gamma = 0.2

    [analysis.riccatind]
    sigma = "sigma"
"""
from __future__ import annotations

import logging
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import certificates as cert
from . import hodge, regnorms, varforms
from .families import UnknownFamily, build_field, resolve
from .fieldio import write_field
from .grid import Grid, MatrixField, ScalarField, VectorField
from .krylov import DEFAULT_CAP, DEFAULT_TOL
from .reduction import CoefficientSet
from .report import SCHEMA_VERSION, write_json, write_result_csv, write_trace_csv

log = logging.getLogger(__name__)

__all__ = ["ScenarioError", "Scenario", "AnalysisOutcome", "load_scenario", "run_analysis", "run_scenario", "ANALYSES"]

DEFAULT_MAX_POINTS = 2**24


class ScenarioError(ValueError):
    """Malformed config or unresolvable family; nothing has been computed or written."""


@dataclass
class Scenario:
    dim: int
    points: int
    side: float | tuple[float, ...] = 1.0
    inner: float = 0.5
    levels: list[int] = field(default_factory=list)
    fields: dict[str, dict] = field(default_factory=dict)
    analyses: dict[str, dict] = field(default_factory=dict)
    seed: int = 0
    tol: float = DEFAULT_TOL
    max_matvecs: int = DEFAULT_CAP
    max_points: int = DEFAULT_MAX_POINTS
    out: str = "results"
    fmt: str = "json"

    def grid(self, points: int | None = None) -> Grid:
        return Grid(self.dim, points or self.points, self.side, self.inner)

    def all_levels(self) -> list[int]:
        return sorted(set(self.levels)) if self.levels else [self.points]


@dataclass
class AnalysisOutcome:
    name: str
    status: str
    report: dict
    trace: list[tuple[int, float]]
    witnesses: dict[str, Any]


# roles: name -> field kind, per analysis
ROLES: dict[str, dict[str, str]] = {
    "decompose": {"b": "vector", "A_c": "matrix"},
    "norms": {"field": "scalar", "vector_field": "vector", "matrix_field": "matrix"},
    "formbound": {"A": "matrix", "b": "vector", "c": "scalar"},
    "accretivity": {"A": "matrix", "b": "vector", "c": "scalar"},
    "commutator": {"d": "vector"},
    "subordination": {"q": "scalar"},
    "magnetic": {"a": "vector", "q": "scalar"},
    "riccati1d": {"p": "scalar", "b": "scalar", "c": "scalar"},
    "riccatind": {"P": "matrix", "sigma": "scalar"},
    "check-certificate": {"p": "scalar", "b": "scalar", "c": "scalar", "f": "scalar",
                          "P": "matrix", "sigma": "scalar", "g": "vector"},
}
OPTIONS = {"kind", "s", "alpha", "atoms", "form", "mass_term", "crosscheck", "window", "mode", "epsilons",
           "p_exponent", "margin", "inner_only"}


def load_scenario(path: str | Path) -> Scenario:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
    return scenario_from_dict(raw)


def scenario_from_dict(raw: dict) -> Scenario:
    g = raw.get("grid")
    if not isinstance(g, dict) or "dim" not in g or "points" not in g:
        raise ScenarioError("[grid] needs dim and points")
    side = g.get("side", 1.0)
    sc = Scenario(
        dim=int(g["dim"]),
        points=int(g["points"]),
        side=tuple(side) if isinstance(side, list) else float(side),
        inner=float(g.get("inner", 0.5)),
        levels=[int(x) for x in g.get("levels", [])],
        fields=dict(raw.get("fields", {})),
        analyses=dict(raw.get("analysis", {})),
        seed=int(raw.get("seed", 0)),
        tol=float(raw.get("tol", DEFAULT_TOL)),
        max_matvecs=int(raw.get("max_matvecs", DEFAULT_CAP)),
        max_points=int(raw.get("max_points", DEFAULT_MAX_POINTS)),
        out=str(raw.get("out", "results")),
    )
    return sc


def validate(sc: Scenario, only: list[str] | None = None) -> None:
    """Check everything that can fail before computation starts."""
    try:
        for n in sc.all_levels():
            sc.grid(n)
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc
    lv = sc.all_levels()
    if any(b != 2 * a for a, b in zip(lv, lv[1:])):
        raise ScenarioError(f"refinement levels must double at each step, got {lv}")
    for n in lv:
        if n**sc.dim > sc.max_points:
            raise ScenarioError(f"level {n} needs {n**sc.dim} points, above the cap {sc.max_points}")
    names = only if only is not None else list(sc.analyses)
    if not names:
        raise ScenarioError("no analysis requested")
    for name in names:
        if name not in ROLES:
            raise ScenarioError(f"unknown analysis {name!r}")
        table = sc.analyses.get(name, {})
        for key, val in table.items():
            if key in ROLES[name]:
                _field_spec(sc, val)
            elif key not in OPTIONS:
                raise ScenarioError(f"[analysis.{name}] has unknown key {key!r}")


def _field_spec(sc: Scenario, ref) -> dict:
    if isinstance(ref, str):
        if ref not in sc.fields:
            raise ScenarioError(f"no field named {ref!r}")
        ref = sc.fields[ref]
    if not isinstance(ref, dict):
        raise ScenarioError(f"field reference must be a name or a table, got {ref!r}")
    spec = {k: v for k, v in ref.items() if k != "factor"}
    try:
        resolve(spec)
    except UnknownFamily as exc:
        raise ScenarioError(f"unresolvable family {exc.args[0]!r}") from exc
    if spec["family"] == "file" and not Path(str(spec.get("path", ""))).is_file():
        raise ScenarioError(f"field file {spec.get('path')!r} not found")
    return ref


def _build(sc: Scenario, grid: Grid, table: dict, role: str, kind: str):
    if role not in table:
        return None
    ref = _field_spec(sc, table[role])
    spec = {k: v for k, v in ref.items() if k != "factor"}
    f = build_field(grid, spec, kind)
    if "factor" in ref:
        re, im = (list(ref["factor"]) + [0.0])[:2]
        lam = complex(re, im)
        if isinstance(f, MatrixField):
            f = MatrixField(grid, f.values * lam, skew=f.skew)
        else:
            f = type(f)(grid, f.values * lam)
    return f


def _zero(grid: Grid, kind: str):
    if kind == "scalar":
        return ScalarField(grid, np.zeros(grid.shape))
    if kind == "vector":
        return VectorField(grid, np.zeros((grid.dim, *grid.shape)))
    return MatrixField.zeros(grid)


def _fields(sc: Scenario, grid: Grid, name: str, table: dict) -> dict:
    return {r: _build(sc, grid, table, r, k) for r, k in ROLES[name].items()}


def _or_zero(f, grid, kind):
    return _zero(grid, kind) if f is None else f


def _atoms(table: dict) -> list[tuple[float, float]]:
    return [(float(x), float(w)) for x, w in table.get("atoms", [])]


# analyses: each returns (result dict, headline value, witnesses, converged) -----

def _an_decompose(sc, grid, table, fl):
    b = _or_zero(fl["b"], grid, "vector")
    parts = hodge.decompose_with_skew(b, fl["A_c"]) if fl["A_c"] is not None else hodge.hodge_decompose(b)
    rec = parts.reconstruct().values
    scale = float(np.max(np.abs(b.values)))
    err = float(np.max(np.abs(rec - b.values))) / (scale if scale > 0 else 1.0)
    bmo = regnorms.bmo_norm(MatrixField(grid, np.real(parts.F.values), skew=True))
    res = {**parts.summary(), "reconstruction_error": err, "F_bmo": bmo.value, "F_bmo_witness": bmo.witness}
    return res, bmo.value, {"f": parts.f, "c_irr": parts.c_irr, "F": parts.F}, True


def _an_norms(sc, grid, table, fl):
    kind = table.get("kind", "bmo")
    if kind == "bmo":
        f = fl["matrix_field"] if fl["matrix_field"] is not None else _or_zero(fl["field"], grid, "scalar")
        rep = regnorms.bmo_norm(f if isinstance(f, MatrixField) else ScalarField(grid, np.real(f.values)))
    elif kind == "morrey":
        f = fl["vector_field"] if fl["vector_field"] is not None else _or_zero(fl["field"], grid, "scalar")
        rep = regnorms.morrey_constant(f, float(table.get("s", grid.dim)))
    elif kind == "lip":
        rep = regnorms.lip_seminorm(ScalarField(grid, np.real(_or_zero(fl["field"], grid, "scalar").values)),
                                    float(table.get("alpha", 1.0)), bool(table.get("inner_only", False)))
    elif kind == "trace":
        rep = regnorms.trace_norm(_or_zero(fl["field"], grid, "scalar"), _atoms(table),
                                  tol=sc.tol, max_matvecs=sc.max_matvecs, seed=sc.seed)
    else:
        raise ScenarioError(f"unknown norm kind {kind!r}")
    wit = {"witness": rep.witness_field} if rep.witness_field is not None else {}
    return rep.summary(), rep.value, wit, rep.converged


def _coefficients(grid, table, fl) -> CoefficientSet:
    return CoefficientSet.build(grid, fl["A"], fl["b"], fl["c"], table.get("form", "divergence"), _atoms(table))


def _an_formbound(sc, grid, table, fl):
    rep = varforms.form_bound_constant(_coefficients(grid, table, fl), bool(table.get("mass_term", False)),
                                       tol=sc.tol, max_matvecs=sc.max_matvecs, seed=sc.seed)
    return rep.summary(), rep.constant, {"u": rep.witness_u, "v": rep.witness_v}, rep.converged


def _an_accretivity(sc, grid, table, fl):
    rep = varforms.accretivity_min(_coefficients(grid, table, fl), tol=sc.tol, max_matvecs=sc.max_matvecs, seed=sc.seed)
    return rep.summary(), rep.min_rayleigh, {"u": rep.witness_u}, rep.converged


def _an_commutator(sc, grid, table, fl):
    d = _or_zero(fl["d"], grid, "vector")
    rep = varforms.commutator_constant(d, tol=sc.tol, max_matvecs=sc.max_matvecs, seed=sc.seed)
    res = rep.summary()
    if table.get("crosscheck", False):
        res["crosscheck"] = varforms.criterion_crosscheck(d, float(table.get("window", 50.0)), sc.tol, sc.seed).summary()
    return res, rep.constant, {"u": rep.witness_u, "v": rep.witness_v}, rep.converged


def _an_subordination(sc, grid, table, fl):
    q = _or_zero(fl["q"], grid, "scalar")
    mode = table.get("mode", "trudinger")
    eps = table.get("epsilons")
    rep = varforms.subordination_profile(q, mode, eps, table.get("p_exponent"), _atoms(table),
                                         tol=sc.tol, max_matvecs=sc.max_matvecs, seed=sc.seed)
    head = rep.fitted_beta if mode == "trudinger" else rep.p_constant if rep.p_constant is not None else rep.constants[0]
    return rep.summary(), float(head if head is not None else math.nan), {}, True


def _an_magnetic(sc, grid, table, fl):
    rep = varforms.magnetic_comparability(_or_zero(fl["a"], grid, "vector"), _or_zero(fl["q"], grid, "scalar"),
                                          bool(table.get("mass_term", False)), float(table.get("window", 50.0)),
                                          sc.tol, sc.seed)
    return rep.summary(), rep.ratio, {}, True


def _one_d_inputs(grid, fl):
    p = fl["p"] if fl["p"] is not None else ScalarField(grid, np.ones(grid.shape))
    return p, _or_zero(fl["b"], grid, "scalar"), _or_zero(fl["c"], grid, "scalar")


def _an_riccati1d(sc, grid, table, fl):
    p, b, c = _one_d_inputs(grid, fl)
    atoms = _atoms(table)
    form = cert.form_nonneg_1d(p, b, c, atoms, seed=sc.seed)
    res = {"form_min": form.min_rayleigh, "form_verdict": form.verdict}
    try:
        cf = cert.riccati_construct_1d(p, b, c, atoms, float(table.get("margin", cert.MARGIN)), seed=sc.seed)
    except cert.IndefiniteForm as exc:
        res.update({"refused": str(exc), "valid": False})
        return res, form.min_rayleigh, {"negative_direction": exc.witness}, "refused"
    res.update(cf.summary())
    return res, cf.min_slack, {"f": cf.f, "slack": cf.slack}, form.converged


def _an_riccatind(sc, grid, table, fl):
    P = fl["P"] if fl["P"] is not None else MatrixField.identity(grid)
    sigma = _or_zero(fl["sigma"], grid, "scalar")
    pos = varforms.schrodinger_positivity(P, sigma, tol=sc.tol, max_matvecs=sc.max_matvecs, seed=sc.seed)
    res = {"form_min": pos.min_rayleigh, "form_verdict": pos.verdict}
    try:
        cn = cert.riccati_construct_nd(P, sigma, float(table.get("margin", cert.MARGIN)), seed=sc.seed)
    except cert.IndefiniteForm as exc:
        res.update({"refused": str(exc), "valid": False})
        return res, pos.min_rayleigh, {"negative_direction": exc.witness}, "refused"
    res.update(cn.summary())
    return res, cn.min_slack, {"g": cn.g, "slack": cn.slack}, pos.converged


def _an_check(sc, grid, table, fl):
    if fl["f"] is not None:
        p, b, c = _one_d_inputs(grid, fl)
        ck = cert.riccati_check_1d(p, b, c, fl["f"], _atoms(table))
        form = cert.form_nonneg_1d(p, b, c, _atoms(table), seed=sc.seed)
    elif fl["g"] is not None:
        P = fl["P"] if fl["P"] is not None else MatrixField.identity(grid)
        sigma = _or_zero(fl["sigma"], grid, "scalar")
        ck = cert.riccati_check_nd(P, sigma, fl["g"])
        form = varforms.schrodinger_positivity(P, sigma, tol=sc.tol, max_matvecs=sc.max_matvecs, seed=sc.seed)
    else:
        raise ScenarioError("check-certificate needs a certificate field f (1D) or g")
    res = {**ck.summary(), "form_min": form.min_rayleigh, "form_verdict": form.verdict}
    return res, ck.min_slack, {"slack": ck.slack}, form.converged


ANALYSES: dict[str, Callable] = {
    "decompose": _an_decompose,
    "norms": _an_norms,
    "formbound": _an_formbound,
    "accretivity": _an_accretivity,
    "commutator": _an_commutator,
    "subordination": _an_subordination,
    "magnetic": _an_magnetic,
    "riccati1d": _an_riccati1d,
    "riccatind": _an_riccatind,
    "check-certificate": _an_check,
}


def _grid_summary(g: Grid) -> dict:
    return {"dim": g.dim, "points_per_axis": g.points_per_axis, "side_length": list(g.side_length),
            "inner_support_fraction": g.inner_support_fraction}


def run_analysis(sc: Scenario, name: str) -> AnalysisOutcome:
    """Run one analysis at every refinement level; the report is for the finest level."""
    table = sc.analyses.get(name, {})
    trace: list[tuple[int, float]] = []
    status = "ok"
    result: dict = {}
    witnesses: dict = {}
    grid = sc.grid()
    for n in sc.all_levels():
        grid = sc.grid(n)
        fl = _fields(sc, grid, name, table)
        result, head, witnesses, conv = ANALYSES[name](sc, grid, table, fl)
        trace.append((n, float(head)))
        if conv == "refused":
            status = "refused" if status == "ok" else status
        elif not conv:
            status = "solver_cap"
    inputs = {r: table[r] for r in ROLES[name] if r in table}
    inputs = {r: (sc.fields[v] if isinstance(v, str) else v) for r, v in inputs.items()}
    inputs.update({k: v for k, v in table.items() if k in OPTIONS})
    report = {
        "schema_version": SCHEMA_VERSION,
        "analysis": name,
        "grid": _grid_summary(grid),
        "status": status,
        "inputs": inputs,
        "result": result,
        "refinement_trace": [list(t) for t in trace],
        "seed": sc.seed,
        "tol": sc.tol,
    }
    return AnalysisOutcome(name, status, report, trace, {k: v for k, v in witnesses.items() if v is not None})


def emit(outcome: AnalysisOutcome, out: Path, fmt: str = "json") -> list[Path]:
    """Write the report, its witness fields and the refinement trace."""
    out.mkdir(parents=True, exist_ok=True)
    stem = outcome.name.replace("-", "_")
    paths = []
    wit = {}
    for key, f in sorted(outcome.witnesses.items()):
        p = write_field(out / f"{stem}_{key}.fld", f)
        wit[key] = p.name
        paths.append(p)
    report = dict(outcome.report, witnesses=wit)
    if fmt == "json":
        paths.append(write_json(out / f"{stem}.json", report))
    elif fmt == "csv":
        paths.append(write_result_csv(out / f"{stem}.csv", report))
    else:
        raise ScenarioError(f"unknown format {fmt!r}")
    paths.append(write_trace_csv(out / f"{stem}_trace.csv", outcome.trace))
    return paths


def run_scenario(sc: Scenario, only: list[str] | None = None, out: str | Path | None = None, fmt: str | None = None) -> int:
    """Exit code: 0 all analyses completed, 2 invalid scenario (nothing written), 3 solver cap hit."""
    try:
        validate(sc, only)
    except ScenarioError as exc:
        log.error("%s", exc)
        return 2
    out = Path(out or sc.out)
    code = 0
    for name in only if only is not None else list(sc.analyses):
        outcome = run_analysis(sc, name)
        emit(outcome, out, fmt or sc.fmt)
        log.info("%s: %s, trace %s", name, outcome.status, outcome.trace)
        if outcome.status == "solver_cap":
            code = 3
    return code


def with_overrides(sc: Scenario, grid: str | None = None, levels: str | None = None, seed: int | None = None,
                   tol: float | None = None) -> Scenario:
    """Apply ``--grid DIMxPOINTS``, ``--levels a,b,c``, ``--seed`` and ``--tol``."""
    kw: dict[str, Any] = {}
    if grid:
        try:
            d, n = grid.lower().split("x")
            kw.update(dim=int(d), points=int(n))
        except ValueError as exc:
            raise ScenarioError(f"--grid expects DIMxPOINTS, got {grid!r}") from exc
    if levels:
        try:
            kw["levels"] = [int(x) for x in levels.split(",") if x.strip()]
        except ValueError as exc:
            raise ScenarioError(f"--levels expects comma separated integers, got {levels!r}") from exc
    if seed is not None:
        kw["seed"] = seed
    if tol is not None:
        kw["tol"] = tol
    return replace(sc, **kw)
