"""Single-particle Maxwell-Kohn-Sham operators, currents and energies.

Orbitals are lattice-normalized columns (sum |phi|^2 = 1); densities follow the
charge convention n = -sum_k |phi_k|^2 / dx. The classical field enters the
orbital operator as gamma * A(alpha) + b, the same coupling convention as the
exact Hamiltonian.
"""

from collections.abc import Callable
from dataclasses import dataclass
from typing import Any, Protocol

import numpy as np
import scipy.linalg as sla
from numpy.typing import NDArray

from ..exact.hamiltonian import HamiltonianSpec, Interaction, lattice_kinetic, lattice_momentum
from ..field.core import (
    ClassicalField,
    Grid1D,
    ModeSet,
    TransverseCurrent,
    mode_bilinear,
    solve_static_maxwell,
    to_mode_coefficients,
)
from ..shared.constants import SOLVER_TOL
from ..shared.exceptions import ModelError, SolverConvergenceError

__all__ = (
    "EnergyBreakdown",
    "KSState",
    "MeanFieldXC",
    "XCFunctional",
    "coupling_bookkeeping",
    "eigenvalue_energy",
    "energy_breakdown",
    "exchange_energy",
    "hartree_energy",
    "hartree_potential",
    "ks_current_density",
    "ks_hamiltonian",
    "ks_kinetic_operator",
    "ks_physical_current",
    "make_ks_state",
    "make_xc",
    "mean_field_energy",
    "orbital_density",
    "solve_orbitals",
    "update_field",
)


def hartree_potential(
    n: NDArray[np.float64], grid: Grid1D, interaction: Interaction
) -> NDArray[np.float64]:
    """Zero-mean Hartree potential of the electron number density |n|."""
    if interaction.strength == 0.0:
        return np.zeros(grid.points)
    v = grid.spacing * (interaction.pair_matrix(grid) @ np.abs(n))
    return v - np.mean(v)


def hartree_energy(n: NDArray[np.float64], grid: Grid1D, interaction: Interaction) -> float:
    rho = np.abs(n)
    return float(0.5 * grid.spacing**2 * rho @ interaction.pair_matrix(grid) @ rho)


def exchange_energy(
    orbitals: NDArray[np.complex128], grid: Grid1D, interaction: Interaction
) -> float:
    """Fock exchange of the determinant; E_H + E_x is its exact pair energy."""
    d = orbitals @ orbitals.conj().T
    return float(-0.5 * np.sum(interaction.pair_matrix(grid) * np.abs(d) ** 2))


class XCFunctional(Protocol):
    name: str

    def potential(
        self, n: NDArray[np.float64], field: ClassicalField, grid: Grid1D, interaction: Interaction
    ) -> NDArray[np.float64]: ...

    def current(
        self, n: NDArray[np.float64], field: ClassicalField, grid: Grid1D
    ) -> TransverseCurrent: ...


class MeanFieldXC:
    """Hartree potential only, no exchange-correlation current."""

    name = "mean-field"

    def potential(
        self, n: NDArray[np.float64], field: ClassicalField, grid: Grid1D, interaction: Interaction
    ) -> NDArray[np.float64]:
        return hartree_potential(n, grid, interaction)

    def current(
        self, n: NDArray[np.float64], field: ClassicalField, grid: Grid1D
    ) -> TransverseCurrent:
        return TransverseCurrent.zeros(field.modes)


XC_FUNCTIONALS: dict[str, Callable[[], XCFunctional]] = {MeanFieldXC.name: MeanFieldXC}


def make_xc(name: str) -> XCFunctional:
    try:
        return XC_FUNCTIONALS[name]()
    except KeyError:
        raise ModelError(
            f"unknown xc functional {name!r}; choose from {sorted(XC_FUNCTIONALS)}"
        ) from None


def ks_kinetic_operator(a: NDArray[np.float64], grid: Grid1D) -> NDArray[np.complex128]:
    """(1/2)(p + A)^2 with symmetrized p A ordering, A the coupled grid field."""
    p = lattice_momentum(grid).toarray()
    a = np.asarray(a, dtype=float)
    return (
        lattice_kinetic(grid).toarray()
        + 0.5 * (p * a[None, :] + a[:, None] * p)
        + np.diag(0.5 * a**2)
    )


def _coupled_field(
    field: ClassicalField, grid: Grid1D, dipole: bool, b_values: NDArray | None
) -> NDArray[np.float64]:
    a = field.coupled_values(grid, dipole=dipole)
    return a if b_values is None else a + b_values


def ks_hamiltonian(
    v: NDArray[np.float64],
    v_hxc: NDArray[np.float64],
    field: ClassicalField,
    grid: Grid1D,
    *,
    dipole: bool = False,
    b_values: NDArray[np.float64] | None = None,
) -> NDArray[np.complex128]:
    h = ks_kinetic_operator(_coupled_field(field, grid, dipole, b_values), grid)
    return h + np.diag(np.asarray(v_hxc, dtype=float) - np.asarray(v, dtype=float))


def solve_orbitals(
    h: NDArray[np.complex128], electrons: int, *, tol: float = SOLVER_TOL
) -> tuple[NDArray[np.complex128], NDArray[np.float64]]:
    if electrons < 1 or electrons > h.shape[0]:
        raise ModelError("cannot occupy that many orbitals")
    values, vectors = sla.eigh(h, subset_by_index=[0, electrons - 1])
    # fix the gauge of each orbital: largest component real and positive
    idx = np.argmax(np.abs(vectors), axis=0)
    phases = vectors[idx, np.arange(electrons)]
    vectors = vectors * (np.abs(phases) / phases)[None, :]
    residual = float(np.max(np.linalg.norm(h @ vectors - vectors * values[None, :], axis=0)))
    if residual > tol * max(1.0, float(np.linalg.norm(h, 2))):
        raise SolverConvergenceError(
            f"orbital residual {residual:.2e} above tolerance", best_residual=residual
        )
    return vectors, values


def orbital_density(orbitals: NDArray[np.complex128], grid: Grid1D) -> NDArray[np.float64]:
    return -np.sum(np.abs(orbitals) ** 2, axis=1) / grid.spacing


def ks_current_density(
    orbitals: NDArray[np.complex128], a: NDArray[np.float64], grid: Grid1D
) -> NDArray[np.float64]:
    """Grid current of the orbitals in the coupled field a(x)."""
    p = lattice_momentum(grid).toarray()
    paramagnetic = np.sum(np.real(np.conj(orbitals) * (p @ orbitals)), axis=1)
    occupation = np.sum(np.abs(orbitals) ** 2, axis=1)
    return -(paramagnetic + a * occupation) / grid.spacing


def ks_physical_current(
    orbitals: NDArray[np.complex128],
    field: ClassicalField,
    grid: Grid1D,
    *,
    dipole: bool = False,
    b_values: NDArray[np.float64] | None = None,
) -> TransverseCurrent:
    """Transversal matter source gamma * J_s projected onto the modes."""
    current = ks_current_density(orbitals, _coupled_field(field, grid, dipole, b_values), grid)
    return to_mode_coefficients(current, grid, field.modes, dipole=dipole).scaled(
        field.modes.coupling
    )


def update_field(
    j: TransverseCurrent, j_s: TransverseCurrent, j_xc: TransverseCurrent
) -> ClassicalField:
    return solve_static_maxwell(j + j_s + j_xc, j.modes)


@dataclass(frozen=True, slots=True)
class EnergyBreakdown:
    kinetic_coupling: float
    vacuum: float
    external: float
    hartree: float
    photon: float
    source: float
    double_counting: float

    @property
    def total(self) -> float:
        return (
            self.kinetic_coupling
            + self.vacuum
            + self.external
            + self.hartree
            + self.photon
            + self.source
        )

    def to_dict(self) -> dict[str, float]:
        return {
            "kinetic_coupling": self.kinetic_coupling,
            "vacuum": self.vacuum,
            "external": self.external,
            "hartree": self.hartree,
            "photon": self.photon,
            "source": self.source,
            "double_counting": self.double_counting,
            "total": self.total,
        }


@dataclass(frozen=True, slots=True, eq=False)
class KSState:
    orbitals: NDArray[np.complex128]
    eigenvalues: NDArray[np.float64]
    density: NDArray[np.float64]
    field: ClassicalField
    hxc_potential: NDArray[np.float64]
    energies: EnergyBreakdown
    iteration: int = 0

    @property
    def electrons(self) -> int:
        return self.orbitals.shape[1]

    def summary(self) -> dict[str, Any]:
        return {
            "iteration": self.iteration,
            "eigenvalues": [float(e) for e in self.eigenvalues],
            "energies": self.energies.to_dict(),
        }


def _vacuum_energy(modes: ModeSet, electrons: int) -> float:
    return 0.5 * electrons * float(np.sum(modes.prefactors**2))


def coupling_bookkeeping(
    orbitals: NDArray[np.complex128], field: ClassicalField, spec: HamiltonianSpec
) -> tuple[float, float]:
    """Coupling energy in grid form gamma int A J_s and mode form sum omega a~ J~*."""
    grid, modes = spec.grid, spec.modes
    current = ks_current_density(
        orbitals, _coupled_field(field, grid, spec.dipole, spec.b_values()), grid
    )
    grid_form = modes.coupling * grid.integrate(field.grid_values(grid, dipole=spec.dipole) * current)
    projected = ks_physical_current(
        orbitals, field, grid, dipole=spec.dipole, b_values=spec.b_values()
    )
    return float(grid_form), mode_bilinear(field, projected)


def energy_breakdown(
    orbitals: NDArray[np.complex128], field: ClassicalField, spec: HamiltonianSpec
) -> EnergyBreakdown:
    grid, modes = spec.grid, spec.modes
    a = _coupled_field(field, grid, spec.dipole, spec.b_values())
    kinetic = float(np.real(np.sum(np.conj(orbitals) * (ks_kinetic_operator(a, grid) @ orbitals))))
    n = orbital_density(orbitals, grid)
    if modes.count:
        omega = modes.frequencies
        photon = float(np.sum(omega * np.abs(field.amplitudes) ** 2))
        source = -float(np.real(np.sum(omega * field.tilde() * np.conj(spec.j.coefficients))))
    else:
        photon = source = 0.0
    grid_form, mode_form = coupling_bookkeeping(orbitals, field, spec)
    return EnergyBreakdown(
        kinetic_coupling=kinetic,
        vacuum=_vacuum_energy(modes, orbitals.shape[1]),
        external=grid.integrate(n * spec.v),
        hartree=hartree_energy(n, grid, spec.interaction),
        photon=photon,
        source=source,
        double_counting=grid_form - mode_form,
    )


def make_ks_state(
    orbitals: NDArray[np.complex128],
    eigenvalues: NDArray[np.float64],
    field: ClassicalField,
    hxc_potential: NDArray[np.float64],
    spec: HamiltonianSpec,
    *,
    iteration: int = 0,
) -> KSState:
    return KSState(
        orbitals=orbitals,
        eigenvalues=eigenvalues,
        density=orbital_density(orbitals, spec.grid),
        field=field,
        hxc_potential=np.asarray(hxc_potential, dtype=float),
        energies=energy_breakdown(orbitals, field, spec),
        iteration=iteration,
    )


def mean_field_energy(ks: KSState, spec: HamiltonianSpec) -> float:
    """Expectation of H in the orbital determinant times the coherent photon state.

    The pair interaction is taken at the Hartree level.
    """
    return ks.energies.total


def eigenvalue_energy(ks: KSState, spec: HamiltonianSpec) -> float:
    """The same energy assembled from KS eigenvalues and the Maxwell source.

    Agrees with mean_field_energy once alpha equals j + J_s + j_xc.
    """
    grid, modes = spec.grid, spec.modes
    rho = np.abs(ks.density)
    total = float(np.sum(ks.eigenvalues)) - grid.integrate(rho * ks.hxc_potential)
    total += ks.energies.hartree + ks.energies.vacuum
    if modes.count:
        j_s = ks_physical_current(
            ks.orbitals, ks.field, grid, dipole=spec.dipole, b_values=spec.b_values()
        )
        s = spec.j + j_s
        total -= float(np.sum(modes.frequencies * np.abs(s.coefficients) ** 2))
        total += mode_bilinear(ks.field, j_s)
    return total
