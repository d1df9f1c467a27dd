import sys
import time
from collections.abc import Callable
from pathlib import Path

import numpy as np
import pandas as pd
from loguru import logger

from ..exact.hamiltonian import ExternalPair, HamiltonianSpec, Interaction
from ..exact.observables import (
    continuity_current,
    discretization_defect,
    energy_decomposition,
    field_expectation,
    internal_pair,
    maxwell_residual,
    physical_current,
    truncation_tail,
)
from ..exact.solver import SolverOptions, solve_exact
from ..field.core import Grid1D, ModeSet, TransverseCurrent
from ..gauge.displacement import verify_equivalence
from ..hk.verify import check_recovery, gauge_fix, scan_injectivity
from ..output.artifacts import (
    RunManifest,
    write_distances_csv,
    write_history_csv,
    write_json,
    write_observables_csv,
    write_table_csv,
)
from ..scf.kohn_sham import ks_current_density, make_xc
from ..scf.loop import SCFConfig, scf_loop
from ..shared.config import LogConfig, RunConfig
from ..shared.constants import EXIT_FAILED, EXIT_OK, EXIT_USAGE
from ..shared.exceptions import (
    ConfigurationError,
    ModelError,
    QEDLabError,
    ScanAbortedError,
    SolverConvergenceError,
)
from ..shared.utils import format_duration_hms, get_memory_usage, maybe_log_dump

__all__ = (
    "COMMANDS",
    "build_spec",
    "run_command",
    "scf_config",
    "setup_logging",
    "solver_options",
)


def _current_from_entries(modes: ModeSet, entries: list[tuple[int, float, float]], key: str):
    try:
        return TransverseCurrent.from_entries(modes, [(n, complex(re, im)) for n, re, im in entries])
    except ModelError as e:
        raise ConfigurationError(f"{key}: {e}") from e


def _potential(cfg: RunConfig, grid: Grid1D) -> np.ndarray:
    pot = cfg.external.potential
    if pot.samples is not None:
        if len(pot.samples) != grid.points:
            raise ConfigurationError(
                f"external.potential.samples: expected {grid.points} values, got {len(pot.samples)}"
            )
        return gauge_fix(np.asarray(pot.samples, dtype=float))
    v = np.zeros(grid.points)
    phase = 2.0 * np.pi * grid.positions / grid.length
    for m, c, s in pot.terms:
        v += c * np.cos(m * phase) + s * np.sin(m * phase)
    return gauge_fix(v)


def build_spec(cfg: RunConfig, *, fock_cutoff: int | None = None) -> HamiltonianSpec:
    model = cfg.model
    try:
        grid = Grid1D(model.length, model.points)
        modes = ModeSet.symmetric(model.modes, model.length, model.coupling)
        j = _current_from_entries(modes, cfg.external.current, "external.current")
        b = _current_from_entries(modes, cfg.external.vector_potential, "external.vector_potential")
        return HamiltonianSpec(
            grid=grid,
            modes=modes,
            electrons=model.electrons,
            external=ExternalPair(_potential(cfg, grid), j),
            interaction=Interaction(model.interaction.strength, model.interaction.softening),
            fock_cutoff=fock_cutoff if fock_cutoff is not None else model.fock_cutoff,
            dipole=model.dipole,
            b=b if np.any(b.coefficients) else None,
        )
    except ModelError as e:
        raise ConfigurationError(f"model: {e}") from e


def solver_options(cfg: RunConfig) -> SolverOptions:
    eigen = cfg.solver.eigen
    return SolverOptions(
        tol=eigen.tol,
        max_iterations=eigen.max_iterations,
        ncv=eigen.ncv,
        degeneracy_tol=eigen.degeneracy_tol,
        max_dimension=eigen.max_dimension,
    )


def scf_config(cfg: RunConfig) -> SCFConfig:
    s = cfg.solver.scf
    return SCFConfig(
        mixing=s.mixing,
        anderson_depth=s.anderson_depth,
        max_iterations=s.max_iterations,
        density_tol=s.density_tol,
        field_tol=s.field_tol,
        initial_field=s.initial_field,
        xc=make_xc(s.xc),
    )


def setup_logging(log: LogConfig) -> list[int]:
    logger.remove()
    handlers = [logger.add(sys.stderr, level=log.level)]
    if log.path:
        Path(log.path).parent.mkdir(parents=True, exist_ok=True)
        handlers.append(
            logger.add(
                log.path,
                level=log.level,
                rotation="10 MB",
                compression="zip",
                enqueue=True,
            )
        )
    return handlers


def _max_abs(x: np.ndarray) -> float:
    return float(np.max(np.abs(x))) if np.size(x) else 0.0


def _cmd_exact(cfg: RunConfig, out_dir: Path, manifest: RunManifest) -> int:
    spec = build_spec(cfg)
    solution = solve_exact(spec, solver_options(cfg))
    state, ground = solution.state, solution.ground
    pair = internal_pair(state, spec)
    current = physical_current(state, spec)
    residual = maxwell_residual(state, spec)
    flux = continuity_current(state, spec)
    defect = discretization_defect(state, spec)
    manifest.add_artifact(
        write_observables_csv(
            out_dir / "observables.csv",
            spec.grid.positions,
            pair.density,
            current,
            pair.field_values(spec.grid, dipole=spec.dipole),
        )
    )
    recovery = check_recovery(solution)
    manifest.results.update(
        ground=ground.summary(),
        energy_decomposition=energy_decomposition(state, spec, terms=solution.terms).to_dict(),
        maxwell_residual=_max_abs(residual),
        continuity_current=float(np.mean(flux)) if flux.size else 0.0,
        continuity_spread=float(np.ptp(flux)) if flux.size else 0.0,
        current_spread=float(np.ptp(current)),
        corrected_current_spread=float(np.ptp(current - defect)),
        discretization_defect=_max_abs(defect),
        mode_tails=truncation_tail(state, spec).tolist(),
        field=[[float(a.real), float(a.imag)] for a in pair.field.amplitudes],
        recovery={"error": recovery.error, "status": recovery.status},
        spec=spec.to_dict(),
    )
    logger.info(f"E0={ground.energy:.12f} gap={ground.gap:.3e} max|r_n|={_max_abs(residual):.2e}")
    return EXIT_OK


def _cmd_scf(cfg: RunConfig, out_dir: Path, manifest: RunManifest) -> int:
    spec = build_spec(cfg)
    result = scf_loop(spec, scf_config(cfg))
    state = result.state
    a = state.field.coupled_values(spec.grid, dipole=spec.dipole) + spec.b_values()
    manifest.add_artifact(
        write_observables_csv(
            out_dir / "observables.csv",
            spec.grid.positions,
            state.density,
            ks_current_density(state.orbitals, a, spec.grid),
            state.field.grid_values(spec.grid, dipole=spec.dipole),
        )
    )
    manifest.add_artifact(
        write_history_csv(out_dir / "scf_history.csv", [h.to_dict() for h in result.history])
    )
    manifest.results.update(scf=result.summary(), spec=spec.to_dict())
    if not result.converged:
        manifest.fail("not_converged", f"SCF did not converge in {result.iterations} iterations")
        return EXIT_FAILED
    return EXIT_OK


def _cmd_displace_check(cfg: RunConfig, out_dir: Path, manifest: RunManifest) -> int:
    spec = build_spec(cfg)
    if spec.b is None:
        logger.warning("No external vector potential configured; the check is trivial")
    report = verify_equivalence(
        spec,
        solver_options(cfg),
        tolerance=cfg.run.displacement.tolerance,
        workers=cfg.run.workers,
    )
    manifest.add_artifact(write_json(out_dir / "displacement.json", report.to_dict()))
    manifest.results.update(displacement=report.to_dict())
    if not report.passed:
        manifest.fail(report.status, "displacement equivalence check did not pass")
        return EXIT_FAILED
    return EXIT_OK


def _cmd_hk_scan(cfg: RunConfig, out_dir: Path, manifest: RunManifest) -> int:
    spec = build_spec(cfg)
    scan = cfg.run.scan
    report = scan_injectivity(
        spec,
        scan.strategy,
        scan.count,
        cfg.run.seed,
        opts=solver_options(cfg),
        eps_ext=scan.eps_ext,
        eps_int=scan.eps_int,
        cross_margin=scan.cross_margin,
        recovery_tol=scan.recovery_tol,
        workers=cfg.run.workers,
    )
    manifest.add_artifact(
        write_distances_csv(
            out_dir / "distances.csv", report.external_distances, report.internal_distances
        )
    )
    manifest.results.update(scan=report.to_dict())
    if report.violations:
        manifest.fail("violation", f"{len(report.violations)} injectivity violations")
        return EXIT_FAILED
    if not report.passed:
        manifest.fail(
            "failed",
            f"cross checks failed for pairs {list(report.failed_cross_checks)}, "
            f"recovery failed for samples {list(report.failed_recoveries)}",
        )
        return EXIT_FAILED
    return EXIT_OK


def _cmd_maxwell_residual(cfg: RunConfig, out_dir: Path, manifest: RunManifest) -> int:
    cutoffs = cfg.run.cutoffs or [cfg.model.fock_cutoff]
    opts = solver_options(cfg)
    rows = []
    for cutoff in cutoffs:
        spec = build_spec(cfg, fock_cutoff=cutoff)
        solution = solve_exact(spec, opts)
        residual = maxwell_residual(solution.state, spec)
        field = field_expectation(solution.state, spec)
        rows.append(
            {
                "fock_cutoff": cutoff,
                "max_residual": _max_abs(residual),
                "truncation_tail": solution.ground.truncation_tail,
                "solver_residual": solution.ground.residual,
                "energy": solution.ground.energy,
                "field_norm": float(np.linalg.norm(field.amplitudes)),
            }
        )
        logger.info(f"n_max={cutoff}: max|r_n|={rows[-1]['max_residual']:.3e}")
    frame = pd.DataFrame(rows)
    manifest.add_artifact(write_table_csv(out_dir / "maxwell_residual.csv", frame))
    last = rows[-1]
    bound = max(1e-8, 10.0 * last["solver_residual"] + last["truncation_tail"])
    manifest.results.update(sweep=rows, bound=bound)
    if last["max_residual"] > bound:
        manifest.fail("failed", f"Maxwell residual {last['max_residual']:.2e} above {bound:.2e}")
        return EXIT_FAILED
    return EXIT_OK


Runner = Callable[[RunConfig, Path, RunManifest], int]

COMMANDS: dict[str, Runner] = {
    "exact": _cmd_exact,
    "scf": _cmd_scf,
    "displace-check": _cmd_displace_check,
    "hk-scan": _cmd_hk_scan,
    "maxwell-residual": _cmd_maxwell_residual,
}


def run_command(name: str, cfg: RunConfig, out_dir: Path) -> int:
    """Run one command; the manifest is written whatever the outcome."""
    manifest = RunManifest(command=name, seed=cfg.run.seed, config=cfg.resolved())
    maybe_log_dump(cfg.log.dump, kind="resolved config", payload=manifest.config)
    out_dir.mkdir(parents=True, exist_ok=True)
    logger.info(f"Running {name} -> {out_dir}")
    try:
        code = COMMANDS[name](cfg, out_dir, manifest)
    except ConfigurationError as e:
        logger.error(f"Configuration error: {e}")
        manifest.fail("config_error", str(e))
        code = EXIT_USAGE
    except (SolverConvergenceError, ScanAbortedError) as e:
        logger.error(f"{name} failed: {e}")
        manifest.fail("not_converged", str(e))
        code = EXIT_FAILED
    except ModelError as e:
        logger.error(f"Invalid model: {e}")
        manifest.fail("config_error", str(e))
        code = EXIT_USAGE
    except QEDLabError as e:
        logger.error(f"{name} failed: {e}")
        manifest.fail("failed", str(e))
        code = EXIT_FAILED
    manifest.write(out_dir)
    elapsed = time.perf_counter() - manifest.started
    logger.info(f"{name} finished with status={manifest.status} in {format_duration_hms(elapsed)}")
    logger.debug(f"Memory usage: {get_memory_usage()}")
    return code
