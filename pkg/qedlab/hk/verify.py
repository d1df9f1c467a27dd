"""Numerical checks of the ground-state map (v, j) -> (n, A).

The injectivity scan is a falsification test: it samples external pairs,
solves each exactly and looks for two distinct external pairs whose internal
pairs coincide within tolerance.
"""

from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any, Literal

import numpy as np
from loguru import logger
from numpy.typing import NDArray

from ..exact.hamiltonian import ExternalPair, HamiltonianSpec
from ..exact.observables import InternalPair, internal_pair, physical_current
from ..exact.solver import ExactSolution, GroundStateResult, SolverOptions, solve_exact
from ..field.core import Grid1D, TransverseCurrent, spectral_second_derivative, to_mode_coefficients
from ..shared.constants import (
    CROSS_CHECK_MARGIN,
    RECOVERY_TOL,
    SCAN_AMPLITUDE_RANGE,
    SCAN_COUNT,
    SCAN_EPS_EXT,
    SCAN_EPS_INT,
    SCAN_POTENTIAL_HARMONICS,
)
from ..shared.exceptions import ModelError, ScanAbortedError, SolverConvergenceError
from ..shared.utils import run_parallel

__all__ = (
    "CrossCheck",
    "RecoveryCheck",
    "SampleStrategy",
    "ScanReport",
    "check_recovery",
    "external_distance",
    "gauge_fix",
    "internal_distance",
    "recover_external",
    "sample_external",
    "scan_externals",
    "scan_injectivity",
    "variational_cross_check",
)

SampleStrategy = Literal["smooth", "potential", "current"]
STRATEGIES: tuple[SampleStrategy, ...] = ("smooth", "potential", "current")


def gauge_fix(v: NDArray) -> NDArray[np.float64]:
    v = np.asarray(v, dtype=float)
    return v - np.mean(v)


def recover_external(
    internal: InternalPair, ground: GroundStateResult, spec: HamiltonianSpec
) -> TransverseCurrent:
    """j = -A'' - gamma J, with J the transversal physical current of the state."""
    grid, modes = spec.grid, spec.modes
    if ground.degenerate:
        logger.warning("Recovering j from a degenerate ground state; result is inconclusive")
    current = physical_current(ground.state, spec)
    matter = to_mode_coefficients(current, grid, modes, dipole=spec.dipole).scaled(modes.coupling)
    if spec.dipole or modes.count == 0:
        field_part = TransverseCurrent(modes, internal.field.amplitudes)
    else:
        a = internal.field.grid_values(grid)
        field_part = to_mode_coefficients(-spectral_second_derivative(a, grid), grid, modes)
    return field_part - matter


@dataclass(frozen=True, slots=True)
class RecoveryCheck:
    error: float
    tolerance: float
    status: Literal["passed", "failed", "inconclusive"]


def check_recovery(
    solution: ExactSolution, *, tolerance: float = RECOVERY_TOL
) -> RecoveryCheck:
    spec, ground = solution.spec, solution.ground
    recovered = recover_external(internal_pair(ground.state, spec), ground, spec)
    diff = recovered.coefficients - spec.j.coefficients
    error = float(np.max(np.abs(diff))) if diff.size else 0.0
    allowed = max(tolerance, 10.0 * ground.truncation_tail)
    if ground.degenerate:
        status = "inconclusive"
    else:
        status = "passed" if error <= allowed else "failed"
    return RecoveryCheck(error=error, tolerance=allowed, status=status)


def _grid_norm(grid: Grid1D, values: NDArray) -> float:
    return float(np.sqrt(grid.integrate(np.abs(values) ** 2)))


def external_distance(a: ExternalPair, b: ExternalPair, grid: Grid1D) -> float:
    return _grid_norm(grid, a.v - b.v) + float(
        np.linalg.norm(a.j.coefficients - b.j.coefficients)
    )


def internal_distance(
    a: InternalPair, b: InternalPair, grid: Grid1D, *, dipole: bool = False
) -> float:
    da = a.field_values(grid, dipole=dipole) - b.field_values(grid, dipole=dipole)
    return _grid_norm(grid, a.density - b.density) + _grid_norm(grid, da)


@dataclass(frozen=True, slots=True)
class CrossCheck:
    margin_ab: float
    margin_ba: float
    assembled_ab: float
    assembled_ba: float
    internal_distance: float
    holds: bool

    def swapped(self) -> "CrossCheck":
        return CrossCheck(
            margin_ab=self.margin_ba,
            margin_ba=self.margin_ab,
            assembled_ab=self.assembled_ba,
            assembled_ba=self.assembled_ab,
            internal_distance=self.internal_distance,
            holds=self.holds,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "margin_ab": self.margin_ab,
            "margin_ba": self.margin_ba,
            "assembled_ab": self.assembled_ab,
            "assembled_ba": self.assembled_ba,
            "internal_distance": self.internal_distance,
            "holds": self.holds,
        }


def sample_external(
    base: HamiltonianSpec, strategy: SampleStrategy, rng: np.random.Generator
) -> ExternalPair:
    """Random smooth external pair drawn around the base problem.

    Potentials are sums of low harmonics and currents have |j_n| drawn
    from SCAN_AMPLITUDE_RANGE, both absolute. The component a strategy
    leaves alone is taken from the base spec.
    """
    if strategy not in STRATEGIES:
        raise ModelError(f"unknown sampling strategy {strategy!r}")
    low, high = SCAN_AMPLITUDE_RANGE
    grid, modes = base.grid, base.modes
    v = base.v
    if strategy in ("smooth", "potential"):
        x = grid.positions
        v = np.zeros(grid.points)
        for m in range(1, SCAN_POTENTIAL_HARMONICS + 1):
            amplitude = rng.uniform(low, high)
            phase = rng.uniform(0.0, 2.0 * np.pi)
            v = v + amplitude * np.cos(2.0 * np.pi * m * x / grid.length + phase)
    j = base.j
    if strategy in ("smooth", "current") and modes.count:
        entries = []
        for n in sorted(k for k in modes.numbers if k > 0):
            magnitude = rng.uniform(low, high)
            phase = rng.uniform(0.0, 2.0 * np.pi)
            entries.append((n, magnitude * np.exp(1j * phase)))
        j = TransverseCurrent.from_entries(modes, entries)
    return ExternalPair(gauge_fix(v), j)


@dataclass(frozen=True, slots=True, eq=False)
class ScanReport:
    strategy: str
    seed: int
    externals: tuple[ExternalPair, ...]
    internals: tuple[InternalPair, ...]
    external_distances: NDArray[np.float64]
    internal_distances: NDArray[np.float64]
    degenerate: tuple[bool, ...]
    recoveries: tuple[RecoveryCheck, ...]
    eps_ext: float
    eps_int: float
    violations: tuple[tuple[int, int], ...] = field(default=())
    cross_checks: dict[tuple[int, int], CrossCheck] = field(default_factory=dict)

    @property
    def recovery_errors(self) -> tuple[float, ...]:
        return tuple(r.error for r in self.recoveries)

    @property
    def failed_recoveries(self) -> tuple[int, ...]:
        return tuple(i for i, r in enumerate(self.recoveries) if r.status == "failed")

    @property
    def failed_cross_checks(self) -> tuple[tuple[int, int], ...]:
        return tuple(pair for pair, check in self.cross_checks.items() if not check.holds)

    @property
    def passed(self) -> bool:
        return not (self.violations or self.failed_cross_checks or self.failed_recoveries)

    @property
    def status(self) -> Literal["passed", "violation", "failed"]:
        if self.violations:
            return "violation"
        return "passed" if self.passed else "failed"

    @property
    def count(self) -> int:
        return len(self.externals)

    @property
    def excluded(self) -> int:
        return sum(self.degenerate)

    def min_ratio(self) -> float:
        ratios = [
            self.internal_distances[i, j] / self.external_distances[i, j]
            for i, j in self._pairs()
            if self.external_distances[i, j] > 0
        ]
        return float(min(ratios)) if ratios else float("nan")

    def min_margins(self) -> tuple[float, float]:
        """Smallest direct and assembled cross-check margins over all pairs."""
        if not self.cross_checks:
            return float("nan"), float("nan")
        checks = self.cross_checks.values()
        direct = min(min(c.margin_ab, c.margin_ba) for c in checks)
        assembled = min(min(c.assembled_ab, c.assembled_ba) for c in checks)
        return float(direct), float(assembled)

    def _pairs(self):
        for i in range(self.count):
            for j in range(i + 1, self.count):
                if not (self.degenerate[i] or self.degenerate[j]):
                    yield i, j

    def to_dict(self) -> dict[str, Any]:
        direct, assembled = self.min_margins()
        return {
            "strategy": self.strategy,
            "seed": self.seed,
            "count": self.count,
            "excluded_degenerate": self.excluded,
            "eps_ext": self.eps_ext,
            "eps_int": self.eps_int,
            "min_ratio": self.min_ratio(),
            "min_margin": direct,
            "min_assembled_margin": assembled,
            "max_recovery_error": max(self.recovery_errors, default=0.0),
            "recovery_status": [r.status for r in self.recoveries],
            "failed_recoveries": list(self.failed_recoveries),
            "failed_cross_checks": [list(p) for p in self.failed_cross_checks],
            "violations": [list(v) for v in self.violations],
            "status": self.status,
            "passed": self.passed,
        }


def _solve_sample(index: int, spec: HamiltonianSpec, opts: SolverOptions) -> ExactSolution:
    try:
        return solve_exact(spec, opts)
    except SolverConvergenceError as e:
        raise ScanAbortedError(
            f"sample {index} did not converge: {e}", sample_index=index, spec=spec.to_dict()
        ) from e


def scan_externals(
    base: HamiltonianSpec,
    samples: Sequence[tuple[NDArray, TransverseCurrent]],
    *,
    strategy: str = "custom",
    seed: int = 0,
    opts: SolverOptions | None = None,
    eps_ext: float = SCAN_EPS_EXT,
    eps_int: float = SCAN_EPS_INT,
    cross_margin: float = CROSS_CHECK_MARGIN,
    recovery_tol: float = RECOVERY_TOL,
    workers: int = 1,
) -> ScanReport:
    """Solve every (v, j) sample on top of `base` and compare them pairwise.

    Potentials are gauge-fixed first. Every non-degenerate pair is also
    cross-checked variationally and every sample must reproduce its own j.
    """
    count = len(samples)
    if count < 1:
        raise ModelError("scan needs at least one sample")
    opts = opts or SolverOptions()
    externals = [ExternalPair.gauge_fixed(v, j) for v, j in samples]
    specs = [base.with_external(e) for e in externals]
    solutions = run_parallel(
        [lambda i=i, s=s: _solve_sample(i, s, opts) for i, s in enumerate(specs)],
        workers=workers,
    )

    grid = base.grid
    internals = [internal_pair(sol.state, sol.spec) for sol in solutions]
    degenerate = tuple(sol.ground.degenerate for sol in solutions)
    recoveries = tuple(check_recovery(sol, tolerance=recovery_tol) for sol in solutions)
    d_ext = np.zeros((count, count))
    d_int = np.zeros((count, count))
    cross: dict[tuple[int, int], CrossCheck] = {}
    for i in range(count):
        for j in range(i + 1, count):
            d_ext[i, j] = d_ext[j, i] = external_distance(externals[i], externals[j], grid)
            d_int[i, j] = d_int[j, i] = internal_distance(
                internals[i], internals[j], grid, dipole=base.dipole
            )
            if not (degenerate[i] or degenerate[j]):
                cross[(i, j)] = variational_cross_check(
                    solutions[i], solutions[j], margin=cross_margin, eps_int=eps_int
                )

    violations = tuple(
        (i, j) for (i, j) in cross if d_ext[i, j] > eps_ext and d_int[i, j] < eps_int
    )
    report = ScanReport(
        strategy=strategy,
        seed=seed,
        externals=tuple(externals),
        internals=tuple(internals),
        external_distances=d_ext,
        internal_distances=d_int,
        degenerate=degenerate,
        recoveries=recoveries,
        eps_ext=eps_ext,
        eps_int=eps_int,
        violations=violations,
        cross_checks=cross,
    )
    if report.excluded:
        logger.warning(f"{report.excluded} degenerate samples excluded from the scan")
    if report.failed_cross_checks:
        logger.error(f"Variational cross check failed for pairs {list(report.failed_cross_checks)}")
    if report.failed_recoveries:
        logger.error(f"External current not recovered for samples {list(report.failed_recoveries)}")
    direct, _ = report.min_margins()
    logger.info(
        f"Injectivity scan ({strategy}, seed={seed}): {count} samples, "
        f"{len(violations)} violations, min d_int/d_ext={report.min_ratio():.3e}, "
        f"min margin={direct:.3e}"
    )
    return report


def scan_injectivity(
    base: HamiltonianSpec,
    strategy: SampleStrategy = "smooth",
    count: int = SCAN_COUNT,
    seed: int = 0,
    *,
    opts: SolverOptions | None = None,
    eps_ext: float = SCAN_EPS_EXT,
    eps_int: float = SCAN_EPS_INT,
    cross_margin: float = CROSS_CHECK_MARGIN,
    recovery_tol: float = RECOVERY_TOL,
    workers: int = 1,
) -> ScanReport:
    if count < 1:
        raise ModelError("scan needs at least one sample")
    rng = np.random.default_rng(seed)
    externals = [sample_external(base, strategy, rng) for _ in range(count)]
    return scan_externals(
        base,
        [(e.v, e.j) for e in externals],
        strategy=strategy,
        seed=seed,
        opts=opts,
        eps_ext=eps_ext,
        eps_int=eps_int,
        cross_margin=cross_margin,
        recovery_tol=recovery_tol,
        workers=workers,
    )


def _assembled_margin(a: ExactSolution, b: ExactSolution, pair_b: InternalPair) -> float:
    """E_b + int n_b (v_a - v_b) - sum omega a~_b (j_a - j_b)^* - E_a."""
    grid, modes = a.spec.grid, a.spec.modes
    value = b.ground.energy + grid.integrate(pair_b.density * (a.spec.v - b.spec.v))
    if modes.count:
        dj = a.spec.j.coefficients - b.spec.j.coefficients
        value -= float(np.real(np.sum(modes.frequencies * pair_b.field.tilde() * np.conj(dj))))
    return value - a.ground.energy


def _check_comparable(a: HamiltonianSpec, b: HamiltonianSpec) -> None:
    same = (
        a.grid == b.grid
        and a.modes == b.modes
        and a.electrons == b.electrons
        and a.interaction == b.interaction
        and a.fock_cutoff == b.fock_cutoff
        and a.dipole == b.dipole
        and np.array_equal(a.vector_potential.coefficients, b.vector_potential.coefficients)
    )
    if not same:
        raise ModelError("cross check needs two problems that differ only in (v, j)")


def variational_cross_check(
    a: ExactSolution,
    b: ExactSolution,
    *,
    margin: float = CROSS_CHECK_MARGIN,
    eps_int: float = SCAN_EPS_INT,
) -> CrossCheck:
    _check_comparable(a.spec, b.spec)
    pair_a = internal_pair(a.state, a.spec)
    pair_b = internal_pair(b.state, b.spec)
    margin_ab = b.state.expectation(a.terms.total).real - a.ground.energy
    margin_ba = a.state.expectation(b.terms.total).real - b.ground.energy
    distance = internal_distance(pair_a, pair_b, a.spec.grid, dipole=a.spec.dipole)
    holds = distance < eps_int or (margin_ab > margin and margin_ba > margin)
    return CrossCheck(
        margin_ab=float(margin_ab),
        margin_ba=float(margin_ba),
        assembled_ab=_assembled_margin(a, b, pair_b),
        assembled_ba=_assembled_margin(b, a, pair_a),
        internal_distance=distance,
        holds=holds,
    )
