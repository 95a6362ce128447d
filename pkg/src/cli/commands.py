"""Subcommand implementations producing RunReports"""

import json
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import structlog

from src.cli.reports import RunReport, write_csv
from src.config.models import RunConfig, Settings, Subcommand
from src.elements.bubbles import modified_bubble_checks, modify_bubble
from src.errors import AlfeldError, DimensionRule
from src.linalg.dense import matrix_rank
from src.linalg.matrix_market import write_operators
from src.mesh.builtin import builtin_mesh, random_simplex, red_refine, reference_simplex
from src.mesh.entities import enumerate_entities
from src.mesh.io import read_mesh, read_points, write_mesh
from src.mesh.simplex_mesh import BarycenterSplit, ExplicitSplit, MacroMesh, RefinedMesh, refine, shape_report
from src.poly.split import boundary_trace, continuity_residual, l2_norm, lambda_system
from src.solvers.local_div import random_pressure, solve_local_div
from src.spaces.assembly import assemble, divergence_image_check, mean_functional
from src.spaces.catalog import build_pair
from src.spaces.local_elements import (
    build_local_element,
    check_unisolvence,
    div_conforming_p2_report,
    vr_local_dimension,
)
from src.stability.lab import (
    bootstrap_check,
    equivalence_check,
    infsup_constant,
    refinement_sweep,
    surjectivity_solve,
)
from src.stokes.manufactured import manufactured_case
from src.stokes.problem import convergence_study, sample_solution, solve_stokes
from src.utils.logging import run_context
from src.utils.rng import make_rng, spawn_rngs

logger = structlog.get_logger()

CERTIFIED_BETA = 1e-6
ROBUSTNESS_RATIO = 0.5


# Meshes


def load_mesh(config: RunConfig, level: int = 0) -> MacroMesh:
    """Builtin or file mesh at a uniform refinement level (file meshes refine only in 2D)"""
    if config.mesh_path is not None:
        mesh = read_mesh(config.mesh_path)
        for _ in range(level):
            if mesh.dim != 2:
                raise DimensionRule("file meshes are uniformly refined only in 2D")
            mesh = red_refine(mesh)
        return mesh
    name = config.mesh or ("square2" if config.d == 2 else "cube6")
    return builtin_mesh(name, level, config.d)


def split_mesh(config: RunConfig, mesh: MacroMesh, settings: Settings) -> RefinedMesh:
    if config.split_rule == "explicit":
        return refine(mesh, ExplicitSplit(read_points(config.split_points_path, mesh.dim)), settings)
    return refine(mesh, BarycenterSplit(), settings)


def _trial_cell(config: RunConfig, trial: int, rng: np.random.Generator, settings: Settings) -> RefinedMesh:
    """Reference simplex for trial 0 unless random geometry is requested"""
    if config.random_geometry or trial > 0:
        mesh = random_simplex(rng, config.d, settings)
    else:
        mesh = reference_simplex(config.d)
    return refine(mesh, settings=settings, warn=False)


def _map(function: Callable, jobs: Sequence, n_jobs: int) -> List:
    """Order-preserving map, in worker processes when n_jobs > 1"""
    if n_jobs <= 1 or len(jobs) <= 1:
        return [function(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(function, jobs))


# Workers (module level so they can be sent to worker processes)


def _local_div_trial(job: Tuple[RunConfig, Settings, int, np.random.Generator]) -> Dict[str, Any]:
    config, settings, trial, rng = job
    ls = lambda_system(_trial_cell(config, trial, rng, settings), 0, settings=settings)
    p = random_pressure(ls, config.k - 1, rng)
    result = solve_local_div(p, config.k, ls, settings)
    p_norm = l2_norm(p, ls)
    return {
        "trial": trial,
        "d": config.d,
        "k": config.k,
        "p_norm": p_norm,
        "relative_residual": result.residual_norm / p_norm if p_norm > 0.0 else result.residual_norm,
        "trace": boundary_trace(result.v, ls, rng),
        "continuity": continuity_residual(result.v, ls),
        "first_child_residual": result.first_child_residual,
        "stability_ratio": result.stability_ratio,
        "layer_ratio": result.layer_ratio,
    }


def _bubble_trial(job: Tuple[RunConfig, Settings, int, np.random.Generator]) -> List[Dict[str, Any]]:
    config, settings, trial, rng = job
    ls = lambda_system(_trial_cell(config, trial, rng, settings), 0, exact=False, settings=settings)
    rows = []
    for i in range(config.d + 1):
        bubble = modify_bubble(ls, i, settings)
        rows.append({"trial": trial, **bubble.to_dict(), **modified_bubble_checks(bubble, ls, rng)})
    return rows


def _unisolvence_trial(job: Tuple[RunConfig, Settings, int, np.random.Generator]) -> Dict[str, Any]:
    config, settings, trial, rng = job
    ls = lambda_system(_trial_cell(config, trial, rng, settings), 0, exact=False, settings=settings)
    try:
        return {"trial": trial, **check_unisolvence(config.space, ls, settings).to_dict(), "error": ""}
    except AlfeldError as e:
        return {"trial": trial, "kind": config.space, "d": config.d, "min_singular": 0.0, "error": str(e)}


def _infsup_level(job: Tuple[RunConfig, Settings, int]) -> Dict[str, Any]:
    config, settings, level = job
    refined = split_mesh(config, load_mesh(config, level), settings)
    pair = build_pair(config.pair, refined, config.k, settings=settings)
    row = infsup_constant(pair, level, settings).to_dict()
    row["h"] = refined.macro.mesh_size
    row["certified"] = pair.certified
    return row


def _equivalence_level(job: Tuple[RunConfig, Settings, int]) -> Dict[str, Any]:
    config, settings, level = job
    refined = split_mesh(config, load_mesh(config, level), settings)
    return {"level": level, **equivalence_check(refined, config.k, settings=settings).to_dict()}


# Subcommands


def cmd_refine(config: RunConfig, settings: Settings, report: RunReport) -> None:
    mesh = load_mesh(config, config.levels - 1)
    refined = split_mesh(config, mesh, settings)
    path = config.output_dir / "refined.mesh"
    config.output_dir.mkdir(parents=True, exist_ok=True)
    write_mesh(path, refined)
    tables = enumerate_entities(mesh)
    report.summary.update(
        {
            "path": str(path),
            "d": mesh.dim,
            "macro_cells": mesh.n_cells,
            "children": mesh.n_cells * (mesh.dim + 1),
            "interior_facets": tables.n_interior_facets,
            "shape": shape_report(refined, settings).to_dict(),
        }
    )


def cmd_local_div(config: RunConfig, settings: Settings, report: RunReport) -> None:
    rngs = spawn_rngs(config.seed, config.trials)
    jobs = [(config, settings, t, rngs[t]) for t in range(config.trials)]
    report.rows.extend(_map(_local_div_trial, jobs, config.jobs))
    exactness = config.tolerance("exactness_tol", settings)
    sampling = config.tolerance("sampling_tol", settings)
    for row in report.rows:
        scale = max(1.0, row["p_norm"])
        report.require(row["relative_residual"] <= exactness, "local_div_exactness", f"trial {row['trial']}")
        report.require(row["trace"] <= sampling * scale, "local_div_trace", f"trial {row['trial']}")
        report.require(row["continuity"] <= sampling * scale, "local_div_continuity", f"trial {row['trial']}")
        report.require(
            row["first_child_residual"] <= exactness * scale, "final_correction_child0", f"trial {row['trial']}"
        )
    report.summary["max_relative_residual"] = max(r["relative_residual"] for r in report.rows)
    report.summary["max_stability_ratio"] = max(r["stability_ratio"] for r in report.rows)


def cmd_bubbles(config: RunConfig, settings: Settings, report: RunReport) -> None:
    rngs = spawn_rngs(config.seed, config.trials)
    jobs = [(config, settings, t, rngs[t]) for t in range(config.trials)]
    for rows in _map(_bubble_trial, jobs, config.jobs):
        report.rows.extend(rows)
    sampling = config.tolerance("sampling_tol", settings)
    for row in report.rows:
        where = f"trial {row['trial']} face {row['face']}"
        report.require(row["div_deviation"] <= sampling * max(1.0, abs(row["div_value"])), "bubble_div", where)
        report.require(row["trace"] <= sampling, "bubble_trace", where)
        report.require(row["continuity"] <= sampling, "bubble_continuity", where)
    if config.dump:
        ls = lambda_system(refine(reference_simplex(config.d), warn=False), 0, exact=False, settings=settings)
        dump = {
            str(i): [piece.coeffs.astype(float).tolist() for piece in modify_bubble(ls, i, settings).field.pieces]
            for i in range(config.d + 1)
        }
        path = config.output_dir / "bubbles_dump.json"
        config.output_dir.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(dump, indent=2) + "\n")
        report.summary["dump"] = str(path)


def cmd_unisolvence(config: RunConfig, settings: Settings, report: RunReport) -> None:
    rngs = spawn_rngs(config.seed, config.trials)
    jobs = [(config, settings, t, rngs[t]) for t in range(config.trials)]
    report.rows.extend(_map(_unisolvence_trial, jobs, config.jobs))
    for row in report.rows:
        report.require(
            not row["error"] and row["min_singular"] >= 1e-10,
            "unisolvence",
            f"trial {row['trial']}: {row['error'] or row['min_singular']}",
        )
    report.summary["min_singular"] = min(r["min_singular"] for r in report.rows)


def cmd_dimensions(config: RunConfig, settings: Settings, report: RunReport) -> None:
    ls = lambda_system(refine(reference_simplex(config.d), warn=False), 0, exact=False, settings=settings)
    element = build_local_element("VR", ls, settings=settings)
    counts: Dict[str, int] = {}
    for dof in element.dofs:
        counts[dof[0]] = counts.get(dof[0], 0) + 1
    vr_rank = matrix_rank(element.matrix)
    p2 = div_conforming_p2_report(ls, settings)
    report.rows.extend(
        [
            {"quantity": "dim V_R(K)", "value": vr_rank, "expected": vr_local_dimension(config.d)},
            {"quantity": "DOFs V_R(K)", "value": len(element.dofs), "expected": vr_local_dimension(config.d)},
            {"quantity": "dim P2 with continuous div", "value": p2.dimension, "expected": p2.expected},
            {"quantity": "rank P2(K) + psi", "value": p2.span_rank, "expected": p2.expected},
        ]
    )
    report.summary["dof_counts"] = counts
    report.summary["span_residual"] = p2.span_residual
    for row in report.rows:
        report.require(row["value"] == row["expected"], "dimension", row["quantity"], **row)
    report.require(p2.span_residual <= 1e-10, "span_inclusion", f"residual {p2.span_residual:.3e}")


def cmd_infsup(config: RunConfig, settings: Settings, report: RunReport) -> None:
    jobs = [(config, settings, level) for level in range(config.levels)]
    report.rows.extend(_map(_infsup_level, jobs, config.jobs))
    ratio = refinement_sweep([row["beta_h"] for row in report.rows])
    report.summary["min_max_ratio"] = ratio
    for row in report.rows:
        if row["certified"]:
            report.require(row["beta_h"] >= CERTIFIED_BETA, "infsup_positive", f"level {row['level']}", **row)
    if report.rows and report.rows[0]["certified"] and config.levels >= 2:
        report.require(ratio >= ROBUSTNESS_RATIO, "infsup_robust", f"min/max ratio {ratio:.3f}")


def cmd_equivalence(config: RunConfig, settings: Settings, report: RunReport) -> None:
    jobs = [(config, settings, level) for level in range(config.levels)]
    report.rows.extend(_map(_equivalence_level, jobs, config.jobs))
    for row in report.rows:
        report.require(row["consistent"], "equivalence", f"level {row['level']}", **row)


def cmd_bootstrap(config: RunConfig, settings: Settings, report: RunReport) -> None:
    refined = split_mesh(config, load_mesh(config, config.levels - 1), settings)
    pair = build_pair(config.pair, refined, config.k, settings=settings)
    result = bootstrap_check(pair.velocity, config.k, settings=settings)
    report.rows.append(result.to_dict())
    report.require(result.consistent, "bootstrap", pair.velocity.label, **result.to_dict())


def cmd_solve(config: RunConfig, settings: Settings, report: RunReport) -> None:
    refined = split_mesh(config, load_mesh(config, config.levels - 1), settings)
    pair = build_pair(config.pair, refined, config.k, settings=settings)
    case = manufactured_case(config.case, refined.dim, config.pressure_shift)
    operators = assemble(pair.velocity, pair.pressure, settings)
    solution = solve_stokes(pair, case, settings, operators)
    report.rows.append({"h": refined.macro.mesh_size, **solution.to_dict()})
    if pair.spec.divergence_free:
        image = divergence_image_check(operators, settings)
        report.summary["divergence_image_residual"] = image
        report.require(image <= 1e-10, "divergence_image", f"{pair.name}: {image:.3e}")
        report.require(
            solution.divergence_free, "discrete_divergence", f"{pair.name}: {solution.divergence_l2:.3e}"
        )
    report.require(solution.energy_residual <= 1e-9, "energy_identity", f"{solution.energy_residual:.3e}")
    if config.export_ops is not None:
        written = write_operators(operators.as_dict(), config.export_ops)
        report.summary["operators"] = {name: str(path) for name, path in written.items()}
    if config.sample_lattice > 0:
        samples = sample_solution(pair, solution, config.sample_lattice)
        d = refined.dim
        names = ["cell"] + [f"x{j}" for j in range(d)] + [f"u{j}" for j in range(d)] + ["p"]
        path = config.output_dir / "solution_samples.csv"
        write_csv(path, [dict(zip(names, row.tolist())) for row in samples])
        report.summary["samples"] = str(path)


def cmd_convergence(config: RunConfig, settings: Settings, report: RunReport) -> None:
    meshes = [load_mesh(config, level) for level in range(config.levels)]
    case = manufactured_case(config.case, meshes[0].dim, config.pressure_shift)
    rows = convergence_study(config.pair, case, meshes, config.k, settings)
    report.rows.extend(row.to_dict() for row in rows)
    report.summary["final_rates"] = dict(rows[-1].rates)
    report.summary["note"] = "rates are diagnostics, not assertions"


def cmd_surjectivity(config: RunConfig, settings: Settings, report: RunReport) -> None:
    refined = split_mesh(config, load_mesh(config, config.levels - 1), settings)
    pair = build_pair(config.pair or "thm4.4", refined, config.k, settings=settings)
    rng = make_rng(config.seed)
    mean_row = mean_functional(pair.pressure, settings)
    ones = np.ones(pair.pressure.n_dofs)
    for trial in range(config.trials):
        raw = rng.standard_normal(pair.pressure.n_dofs)
        pressure = raw - (mean_row @ raw) / (mean_row @ ones) * ones
        result = surjectivity_solve(pair, pressure, settings)
        report.rows.append({"trial": trial, "pair": pair.name, **result.to_dict()})
        report.require(
            result.l2_residual <= config.tolerance("exactness_tol", settings), "surjectivity", f"trial {trial}"
        )
        report.require(
            result.vertex_residual <= 1e-10 * max(1.0, float(np.max(np.abs(pressure)))),
            "surjectivity_vertices",
            f"trial {trial}",
        )


COMMANDS: Dict[Subcommand, Callable[[RunConfig, Settings, RunReport], None]] = {
    Subcommand.REFINE: cmd_refine,
    Subcommand.LOCAL_DIV: cmd_local_div,
    Subcommand.BUBBLES: cmd_bubbles,
    Subcommand.UNISOLVENCE: cmd_unisolvence,
    Subcommand.DIMENSIONS: cmd_dimensions,
    Subcommand.INFSUP: cmd_infsup,
    Subcommand.EQUIVALENCE: cmd_equivalence,
    Subcommand.BOOTSTRAP: cmd_bootstrap,
    Subcommand.SOLVE: cmd_solve,
    Subcommand.CONVERGENCE: cmd_convergence,
    Subcommand.SURJECTIVITY: cmd_surjectivity,
}


class CommandRunner:
    """Runs one validated configuration and collects its report"""

    def __init__(self, settings: Settings):
        self.settings = settings
        self._logger = logger.bind(component="cli")

    def run(self, config: RunConfig, report: Optional[RunReport] = None) -> RunReport:
        report = report or RunReport(subcommand=config.subcommand.value, config=config.model_dump(mode="json"))
        with run_context(subcommand=config.subcommand.value, seed=config.seed):
            self._logger.info("command_started")
            try:
                COMMANDS[config.subcommand](config, self.settings, report)
            except AlfeldError as e:
                report.fail(type(e).__name__, str(e))
            self._logger.info("command_finished", rows=len(report.rows), failures=len(report.failures))
        return report
