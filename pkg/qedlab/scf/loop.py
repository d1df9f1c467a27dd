from dataclasses import dataclass, field
from typing import Any, Literal

import numpy as np
from loguru import logger
from numpy.typing import NDArray

from ..exact.hamiltonian import HamiltonianSpec
from ..field.core import ClassicalField, ModeSet
from ..shared.constants import (
    SCF_ANDERSON_DEPTH,
    SCF_DENSITY_TOL,
    SCF_FIELD_TOL,
    SCF_MAX_ITERATIONS,
    SCF_MIXING,
    SCF_OSCILLATION_WINDOW,
)
from ..shared.exceptions import ModelError
from .kohn_sham import (
    KSState,
    MeanFieldXC,
    XCFunctional,
    ks_hamiltonian,
    ks_physical_current,
    make_ks_state,
    mean_field_energy,
    orbital_density,
    solve_orbitals,
    update_field,
)
from .mixing import make_mixer

__all__ = (
    "IterationRecord",
    "KSStep",
    "SCFConfig",
    "SCFResult",
    "detect_oscillation",
    "ks_step",
    "scf_loop",
)

InitialField = Literal["zero", "external"]


@dataclass(frozen=True, slots=True)
class SCFConfig:
    mixing: float = SCF_MIXING
    anderson_depth: int = 0
    max_iterations: int = SCF_MAX_ITERATIONS
    density_tol: float = SCF_DENSITY_TOL
    field_tol: float = SCF_FIELD_TOL
    initial_field: InitialField = "zero"
    xc: XCFunctional = field(default_factory=MeanFieldXC)

    def __post_init__(self) -> None:
        if not 0.0 < self.mixing <= 1.0:
            raise ModelError("mixing parameter must lie in (0, 1]")
        if self.anderson_depth < 0:
            raise ModelError("anderson depth must be >= 0")
        if self.max_iterations < 1:
            raise ModelError("max iterations must be >= 1")
        if self.density_tol <= 0 or self.field_tol <= 0:
            raise ModelError("scf tolerances must be > 0")
        if self.initial_field not in ("zero", "external"):
            raise ModelError("initial field must be 'zero' or 'external'")

    @classmethod
    def anderson(cls, **kwargs: Any) -> "SCFConfig":
        kwargs.setdefault("anderson_depth", SCF_ANDERSON_DEPTH)
        return cls(**kwargs)


@dataclass(frozen=True, slots=True)
class IterationRecord:
    iteration: int
    density_residual: float
    field_residual: float
    energy: float
    double_counting_defect: float

    def to_dict(self) -> dict[str, float | int]:
        return {
            "iteration": self.iteration,
            "density_residual": self.density_residual,
            "field_residual": self.field_residual,
            "energy": self.energy,
            "double_counting_defect": self.double_counting_defect,
        }


@dataclass(frozen=True, slots=True, eq=False)
class SCFResult:
    converged: bool
    iterations: int
    state: KSState
    energy: float
    history: tuple[IterationRecord, ...]
    maxwell_residual: float
    oscillating: bool = False
    suggested_mixing: float | None = None

    def summary(self) -> dict[str, Any]:
        return {
            "converged": self.converged,
            "iterations": self.iterations,
            "energy": self.energy,
            "maxwell_residual": self.maxwell_residual,
            "oscillating": self.oscillating,
            "suggested_mixing": self.suggested_mixing,
            "energies": self.state.energies.to_dict(),
        }


@dataclass(frozen=True, slots=True, eq=False)
class KSStep:
    orbitals: NDArray[np.complex128]
    eigenvalues: NDArray[np.float64]
    hxc_potential: NDArray[np.float64]
    density: NDArray[np.float64]
    field: ClassicalField


def ks_step(
    spec: HamiltonianSpec,
    density: NDArray[np.float64],
    field_in: ClassicalField,
    xc: XCFunctional | None = None,
) -> KSStep:
    """One Kohn-Sham map: (n, alpha) in, orbitals and the updated (n, alpha) out."""
    xc = xc or MeanFieldXC()
    grid = spec.grid
    b_values = spec.b_values()
    v_hxc = xc.potential(density, field_in, grid, spec.interaction)
    h = ks_hamiltonian(spec.v, v_hxc, field_in, grid, dipole=spec.dipole, b_values=b_values)
    orbitals, eigenvalues = solve_orbitals(h, spec.electrons)
    n_out = orbital_density(orbitals, grid)
    j_s = ks_physical_current(orbitals, field_in, grid, dipole=spec.dipole, b_values=b_values)
    field_out = update_field(spec.j, j_s, xc.current(n_out, field_in, grid))
    return KSStep(orbitals, eigenvalues, v_hxc, n_out, field_out)


def _pack(n: NDArray[np.float64], field: ClassicalField) -> NDArray[np.float64]:
    return np.concatenate([n, field.amplitudes.real, field.amplitudes.imag])


def _unpack(x: NDArray[np.float64], points: int, modes: ModeSet) -> tuple[NDArray, ClassicalField]:
    m = modes.count
    alpha = x[points : points + m] + 1j * x[points + m :]
    return x[:points].copy(), ClassicalField(modes, alpha)


def detect_oscillation(residuals: list[float], window: int = SCF_OSCILLATION_WINDOW) -> bool:
    """Period-2 cycle: alternating residuals that stopped decreasing."""
    if len(residuals) < window:
        return False
    r = np.asarray(residuals[-window:])
    even, odd = r[0::2], r[1::2]

    def _flat(x: NDArray) -> bool:
        return bool(np.all(np.abs(np.diff(x)) <= 1e-3 * np.max(np.abs(x))))

    if not (_flat(even) and _flat(odd)):
        return False
    return bool(abs(even[-1] - odd[-1]) > 0.1 * max(even[-1], odd[-1]))


def _initial_field(spec: HamiltonianSpec, mode: InitialField) -> ClassicalField:
    if mode == "external":
        return ClassicalField(spec.modes, spec.j.coefficients)
    return ClassicalField.zeros(spec.modes)


def scf_loop(spec: HamiltonianSpec, config: SCFConfig | None = None) -> SCFResult:
    config = config or SCFConfig()
    grid = spec.grid
    mixer = make_mixer(config.mixing, config.anderson_depth)
    field_in = _initial_field(spec, config.initial_field)
    zero_n = np.zeros(grid.points)
    # external-potential-only orbitals seed the density
    seed = ks_step(spec, zero_n, field_in, _NoHxc(config.xc))
    n_in = seed.density

    history: list[IterationRecord] = []
    oscillating = False
    converged = False
    step = seed
    for iteration in range(1, config.max_iterations + 1):
        step = ks_step(spec, n_in, field_in, config.xc)
        dn = grid.integrate(np.abs(step.density - n_in))
        dalpha = field_in.distance(step.field)
        state = make_ks_state(
            step.orbitals, step.eigenvalues, field_in, step.hxc_potential, spec, iteration=iteration
        )
        record = IterationRecord(
            iteration=iteration,
            density_residual=dn,
            field_residual=dalpha,
            energy=mean_field_energy(state, spec),
            double_counting_defect=abs(state.energies.double_counting),
        )
        history.append(record)
        logger.debug(
            f"SCF iteration {iteration}: dn={dn:.3e} dalpha={dalpha:.3e} E={record.energy:.12f}"
        )
        if dn <= config.density_tol and dalpha <= config.field_tol:
            converged = True
            break
        if not oscillating and detect_oscillation([h.density_residual for h in history]):
            oscillating = True
            logger.warning(
                f"SCF residuals oscillate with period 2; try mixing={config.mixing / 2:g}"
            )
        x_next = mixer.mix(_pack(n_in, field_in), _pack(step.density, step.field))
        n_in, field_in = _unpack(x_next, grid.points, spec.modes)

    final = history[-1]
    omega = spec.modes.frequencies
    maxwell = (
        float(np.max(omega * np.abs(step.field.amplitudes - state.field.amplitudes)))
        if spec.modes.count
        else 0.0
    )
    if converged:
        logger.info(f"SCF converged in {final.iteration} iterations: E_MF={final.energy:.12f}")
    else:
        logger.warning(
            f"SCF not converged after {final.iteration} iterations: "
            f"dn={final.density_residual:.2e} dalpha={final.field_residual:.2e}"
        )
    return SCFResult(
        converged=converged,
        iterations=final.iteration,
        state=state,
        energy=final.energy,
        history=tuple(history),
        maxwell_residual=maxwell,
        oscillating=oscillating,
        suggested_mixing=config.mixing / 2 if oscillating else None,
    )


class _NoHxc:
    """Wraps an xc choice with the Hartree-xc potential switched off."""

    def __init__(self, inner: XCFunctional):
        self.inner = inner
        self.name = f"{inner.name}:off"

    def potential(self, n, field, grid, interaction):
        return np.zeros(grid.points)

    def current(self, n, field, grid):
        return self.inner.current(n, field, grid)
