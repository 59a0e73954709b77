"""Running configured simulations, reference solutions and convergence studies."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import GlobalDivergence, LamfemError
from ..fem import load_path, run_load_steps
from ..geometry import CUT, PHASE1, PHASE2
from ..laminate import LaminateConfig, LaminateState, respond
from .benchmarks import build_problem, planar_solution
from .norms import NodalField, energy_error, interpolate, l2_error, total_energy
from .output import LOAD_CURVE_COLUMNS, load_curve_rows, write_csv, write_json, write_vtk

log = logging.getLogger(__name__)

SUMMARY_VERSION = 1
STUDY_COLUMNS = ["method", "nx", "h", "ndof", "error_L2_displacement", "error_energy", "wall_time", "converged"]


@dataclass
class Reference:
    """Displacement reference (callable or nodal field) and its stored energy."""

    kind: str
    field: object
    energy: float


@dataclass
class RunResult:
    config: object
    problem: object = None
    trajectory: list = field(default_factory=list)
    converged: bool = False
    message: str = ""
    wall_time: float = 0.0
    errors: dict | None = None

    @property
    def final(self):
        return self.trajectory[-1] if self.trajectory else None


def solve(cfg):
    """Build and solve the configured problem; never raises on divergence."""
    t0 = time.perf_counter()
    problem = build_problem(cfg)
    res = RunResult(cfg, problem)
    try:
        res.trajectory = run_load_steps(problem, cfg["load"]["n_steps"], cfg["load"]["path"])
        res.converged = True
    except GlobalDivergence as exc:
        res.message = str(exc)
        log.error("%s", exc)
    res.wall_time = time.perf_counter() - t0
    return res


def _final_load_is_full(cfg):
    return cfg["load"]["path"][-1] == 1.0


def reference_for(cfg, finest=None):
    """Reference solution declared in ``cfg`` (``None`` if there is none).

    Analytic for planar configurations; otherwise an overkill LET run on a
    mesh refined ``factor`` times beyond ``finest`` (default: the configured
    mesh).
    """
    spec = cfg.get("reference")
    if spec is None:
        return None
    if spec["type"] == "analytic":
        sol = planar_solution(cfg)
        return Reference("analytic", sol, sol.energy(cfg.box))
    nx = finest or cfg["mesh"]["nx"]
    ny = finest or cfg["mesh"]["ny"]
    n = spec.get("resolution")
    fine = (n, n) if n else (spec.get("factor", 4) * nx, spec.get("factor", 4) * ny)
    log.info("overkill reference on a %dx%d mesh", *fine)
    ref = solve(cfg.override(method="LET", mesh=fine))
    if not ref.converged:
        raise GlobalDivergence(f"reference solution failed: {ref.message}")
    st = ref.final
    return Reference("overkill", NodalField(ref.problem.mesh, st.u), total_energy(ref.problem, st.W))


def compute_errors(res, reference):
    """Relative L2 displacement and stored-energy errors of a converged run.

    An analytic reference is compared through its nodal interpolant, which
    is the best any Q1 field can do; the error against the analytic field
    itself is reported as ``l2_displacement_continuum``.
    """
    st = res.final
    mesh = res.problem.mesh
    uh = NodalField(mesh, st.u)
    out = {"energy": energy_error(total_energy(res.problem, st.W), reference.energy)}
    if reference.kind == "analytic":
        out["l2_displacement"] = l2_error(uh, interpolate(mesh, reference.field))
        out["l2_displacement_continuum"] = l2_error(uh, reference.field)
    else:
        out["l2_displacement"] = l2_error(uh, reference.field)
    return out


def summary(res):
    st = res.final
    cfg = res.config
    steps = [
        {"load": s.load, "iterations": s.iterations, "substeps": s.substeps,
         "residual": s.residuals[-1] if s.residuals else 0.0}
        for s in res.trajectory
    ]
    kind = res.problem.points.element_kind()
    return {
        "version": SUMMARY_VERSION,
        "name": cfg["name"],
        "method": cfg["method"],
        "mesh": [cfg["mesh"]["nx"], cfg["mesh"]["ny"]],
        "n_dofs": res.problem.mesh.n_dofs,
        "elements": {"phase1": int(np.sum(kind == PHASE1)), "phase2": int(np.sum(kind == PHASE2)),
                     "laminate": int(np.sum(kind == CUT)), "mixed": int(np.sum(kind == CUT + 1))},
        "converged": res.converged,
        "message": res.message,
        "steps": steps,
        "total_iterations": sum(s["iterations"] for s in steps),
        "max_iterations_per_step": max((s["iterations"] for s in steps), default=0),
        "max_gamma": float(np.max(st.gamma)) if st is not None and st.gamma.size else 0.0,
        "errors": res.errors,
        "wall_time": res.wall_time,
    }


def simulate(cfg, out=None):
    """Run ``cfg`` and write ``summary.json``, ``load_curve.csv`` and ``fields.vtk``."""
    out = Path(out or cfg["output"])
    out.mkdir(parents=True, exist_ok=True)
    res = solve(cfg)
    if res.converged and cfg.get("reference") is not None and _final_load_is_full(cfg):
        res.errors = compute_errors(res, reference_for(cfg))
    write_csv(out / "load_curve.csv", LOAD_CURVE_COLUMNS, load_curve_rows(res.problem, res.trajectory))
    if res.final is not None:
        write_vtk(out / "fields.vtk", res.problem, res.final, title=cfg["name"])
    write_json(out / "summary.json", summary(res))
    return res


def convergence_study(cfg, resolutions=None, methods=None, out=None):
    """Error table over mesh resolutions and methods, written to ``study.csv``.

    One reference is shared by all rows.  A failing row is recorded with
    NaN errors and the study moves on.
    """
    study = cfg.get("study") or {}
    resolutions = sorted(resolutions or study.get("resolutions") or [cfg["mesh"]["nx"]])
    methods = methods or study.get("methods") or ["ELA", "GPLA", "LET"]
    reference = reference_for(cfg, finest=resolutions[-1])
    if reference is None:
        raise LamfemError("a convergence study needs a 'reference' entry")
    rows = []
    for method in methods:
        for n in resolutions:
            run_cfg = cfg.override(method=method, mesh=n)
            res = solve(run_cfg)
            errs = compute_errors(res, reference) if res.converged else {"l2_displacement": math.nan,
                                                                          "energy": math.nan}
            mesh = res.problem.mesh
            rows.append({
                "method": method, "nx": n, "h": max(mesh.dx, mesh.dy), "ndof": mesh.n_dofs,
                "error_L2_displacement": errs["l2_displacement"], "error_energy": errs["energy"],
                "wall_time": res.wall_time, "converged": res.converged,
            })
            log.info("%s %d: L2 %.3e energy %.3e", method, n, errs["l2_displacement"], errs["energy"])
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        # h decreases down each method block
        write_csv(out / "study.csv", STUDY_COLUMNS,
                  [[r[c] if c != "converged" else str(r[c]).lower() for c in STUDY_COLUMNS] for r in rows])
    return rows


LAMINATE_PATH_COLUMNS = (
    ["t"] + [f"F{i}{j}" for i in (1, 2, 3) for j in (1, 2, 3)]
    + [f"P{i}{j}" for i in (1, 2, 3) for j in (1, 2, 3)]
    + ["c1", "c2", "c3", "gamma1", "gamma2", "iterations"]
)


def laminate_path(cfg, out=None):
    """Drive one laminate point along ``F̄(t) = I + t H`` and write ``laminate_path.csv``."""
    m1, m2 = cfg.materials()
    lam = cfg["laminate"]
    N = np.zeros(3)
    N[: len(lam["normal"])] = lam["normal"]
    N /= np.linalg.norm(N)
    lcfg = LaminateConfig(np.array([lam["eta"]]), N[None], m1, m2)
    H = cfg.macro_gradient()
    state = LaminateState.virgin(1, lcfg)
    rows = []
    for t in load_path(cfg["load"]["n_steps"], cfg["load"]["path"]):
        r = respond((np.eye(3) + t * H)[None], lcfg, state)
        state = r.state
        g1 = state.h1[0, -1] if state.h1.shape[1] else 0.0
        g2 = state.h2[0, -1] if state.h2.shape[1] else 0.0
        rows.append([t, *(np.eye(3) + t * H).ravel(), *r.P[0].ravel(), *state.c[0], g1, g2,
                     int(r.iterations[0])])
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        write_csv(out / "laminate_path.csv", LAMINATE_PATH_COLUMNS, rows)
    return rows
