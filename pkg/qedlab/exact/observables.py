"""Ground-state observables of the coupled electron-photon problem.

All one-body quantities are reduced from the composite amplitude matrix
psi[e, p] (electron configuration e, photon occupation p). Mixed
electron-photon correlators <c_a^+ c_b (x) F> come from
ElectronBasis.one_body_matrix applied to the photon-traced weights.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from numpy.typing import NDArray

from ..field.core import ClassicalField, Grid1D
from ..shared.constants import MAX_DIMENSION
from ..shared.exceptions import ModelError
from .basis import ElectronBasis, FockSpace
from .hamiltonian import (
    FieldTerm,
    HamiltonianSpec,
    HamiltonianTerms,
    assemble_terms,
    field_terms,
    lattice_kinetic,
    lattice_momentum,
)
from .solver import CompositeState

__all__ = (
    "EnergyDecomposition",
    "InternalPair",
    "continuity_current",
    "density",
    "discretization_defect",
    "energy_decomposition",
    "field_expectation",
    "internal_pair",
    "matter_density_matrix",
    "maxwell_residual",
    "physical_current",
    "truncation_tail",
)


@dataclass(frozen=True, slots=True, eq=False)
class InternalPair:
    density: NDArray[np.float64]
    field: ClassicalField

    def charge(self, grid: Grid1D) -> float:
        return grid.integrate(self.density)

    def field_values(self, grid: Grid1D, *, dipole: bool = False) -> NDArray[np.float64]:
        return self.field.grid_values(grid, dipole=dipole)


@dataclass(frozen=True, slots=True)
class EnergyDecomposition:
    bare: float
    potential: float
    source: float

    @property
    def total(self) -> float:
        return self.bare + self.potential + self.source

    def to_dict(self) -> dict[str, float]:
        return {
            "bare": self.bare,
            "potential": self.potential,
            "source": self.source,
            "total": self.total,
        }


@dataclass(frozen=True, slots=True)
class _Layout:
    basis: ElectronBasis
    fock: FockSpace
    terms: tuple[FieldTerm, ...]


def _layout(spec: HamiltonianSpec) -> _Layout:
    basis = ElectronBasis(spec.grid.points, spec.electrons)
    fock = FockSpace(spec.modes.count, spec.fock_cutoff)
    return _Layout(basis, fock, tuple(field_terms(spec, fock)))


def _photon_weights(psi: NDArray, photon: sp.spmatrix | None) -> NDArray[np.complex128]:
    """W[e, e'] = sum_pq conj(psi[e, p]) F[p, q] psi[e', q]."""
    if photon is None:
        return np.conj(psi) @ psi.T
    return np.conj(psi) @ np.asarray(photon @ psi.T)


def _occupations(state: CompositeState, basis: ElectronBasis) -> NDArray[np.float64]:
    probs = np.sum(np.abs(state.matrix()) ** 2, axis=1)
    return probs @ basis.occupations()


def density(state: CompositeState, spec: HamiltonianSpec) -> NDArray[np.float64]:
    basis = ElectronBasis(spec.grid.points, spec.electrons)
    return -_occupations(state, basis) / spec.grid.spacing


def matter_density_matrix(state: CompositeState, spec: HamiltonianSpec) -> NDArray[np.complex128]:
    """rho[a, b] = <c_a^+ c_b>, photons traced out."""
    basis = ElectronBasis(spec.grid.points, spec.electrons)
    return basis.one_body_matrix(_photon_weights(state.matrix(), None))


def field_expectation(state: CompositeState, spec: HamiltonianSpec) -> ClassicalField:
    fock = FockSpace(spec.modes.count, spec.fock_cutoff)
    psi = state.matrix()
    alpha = np.empty(spec.modes.count, dtype=complex)
    for m in range(spec.modes.count):
        shifted = np.asarray(fock.annihilation(m) @ psi.T).T
        alpha[m] = np.vdot(psi, shifted)
    return ClassicalField(spec.modes, alpha)


def internal_pair(state: CompositeState, spec: HamiltonianSpec) -> InternalPair:
    return InternalPair(density(state, spec), field_expectation(state, spec))


def truncation_tail(state: CompositeState, spec: HamiltonianSpec) -> NDArray[np.float64]:
    """Per-mode probability of the top retained Fock level."""
    if state.photon_shape != FockSpace(spec.modes.count, spec.fock_cutoff).shape:
        raise ModelError("state does not match the photon space of the spec")
    return state.mode_tails()


def _correlators(
    state: CompositeState, layout: _Layout
) -> tuple[NDArray[np.complex128], list[NDArray[np.complex128]]]:
    psi = state.matrix()
    plain = layout.basis.one_body_matrix(_photon_weights(psi, None))
    mixed = [
        layout.basis.one_body_matrix(_photon_weights(psi, term.photon)) for term in layout.terms
    ]
    return plain, mixed


def physical_current(state: CompositeState, spec: HamiltonianSpec) -> NDArray[np.float64]:
    """Site current -<1/2 {p + A + b, delta(x - x_i)}> of unit negative charges."""
    layout = _layout(spec)
    rho, mixed = _correlators(state, layout)
    p = lattice_momentum(spec.grid).toarray()
    weighted = p * rho
    paramagnetic = 0.5 * (weighted.sum(axis=0) + weighted.sum(axis=1))
    diamagnetic = np.zeros(spec.grid.points, dtype=complex)
    for term, r in zip(layout.terms, mixed, strict=True):
        diamagnetic += term.profile * np.diag(r)
    return -np.real(paramagnetic + diamagnetic) / spec.grid.spacing


def _bond_flux(hop: NDArray[np.complex128]) -> NDArray[np.float64]:
    """Charge flux -2 Im hop[i + 1, i] through the cut between sites i and i + 1."""
    n = hop.shape[0]
    sites = np.arange(n)
    return -2.0 * np.imag(hop[(sites + 1) % n, sites])


def _field_hop(
    layout: _Layout, mixed: list[NDArray[np.complex128]], p: NDArray
) -> NDArray[np.complex128]:
    hop = np.zeros_like(p, dtype=complex)
    for term, r in zip(layout.terms, mixed, strict=True):
        f = term.profile
        hop = hop + 0.5 * p * (f[:, None] + f[None, :]) * r
    return hop


def continuity_current(state: CompositeState, spec: HamiltonianSpec) -> NDArray[np.float64]:
    """Charge flux through the cut between sites i and i + 1 (periodic).

    Derived from i<[H, n_i]>, so it is exactly uniform on any eigenstate of
    the truncated Hamiltonian.
    """
    layout = _layout(spec)
    rho, mixed = _correlators(state, layout)
    p = lattice_momentum(spec.grid).toarray()
    hop = lattice_kinetic(spec.grid).toarray() * rho + _field_hop(layout, mixed, p)
    return _bond_flux(hop)


def discretization_defect(state: CompositeState, spec: HamiltonianSpec) -> NDArray[np.float64]:
    """Site current minus the average of the two adjacent bond fluxes.

    physical_current(x_i) = (c_{i-1} + c_i) / 2 + defect_i holds for any state,
    with c the continuity_current. The defect collects the field part of J:
    the diamagnetic density minus the bond-averaged field flux, which differ
    at O(dx^2) for a varying field profile and cancel when A + b = 0.
    """
    layout = _layout(spec)
    _, mixed = _correlators(state, layout)
    p = lattice_momentum(spec.grid).toarray()
    field_flux = _bond_flux(_field_hop(layout, mixed, p))
    diamagnetic = np.zeros(spec.grid.points, dtype=complex)
    for term, r in zip(layout.terms, mixed, strict=True):
        diamagnetic += term.profile * np.diag(r)
    return -np.real(diamagnetic) / spec.grid.spacing - 0.5 * (field_flux + np.roll(field_flux, 1))


def maxwell_residual(state: CompositeState, spec: HamiltonianSpec) -> NDArray[np.complex128]:
    """r_n = <[H, a_n]> = omega_n (j_n - alpha_n) + g_n dx sum_x conj(u_n) J."""
    modes = spec.modes
    if modes.count == 0:
        return np.zeros(0, dtype=complex)
    alpha = field_expectation(state, spec).amplitudes
    current = physical_current(state, spec)
    u = modes.mode_functions(spec.grid, dipole=spec.dipole)
    projected = spec.grid.spacing * (np.conj(u) @ current)
    omega = modes.frequencies
    return omega * (spec.j.coefficients - alpha) + modes.prefactors * projected


def energy_decomposition(
    state: CompositeState,
    spec: HamiltonianSpec,
    *,
    terms: HamiltonianTerms | None = None,
    max_dimension: int = MAX_DIMENSION,
) -> EnergyDecomposition:
    terms = terms or assemble_terms(spec, max_dimension=max_dimension)
    bare = state.expectation(terms.bare).real
    potential = spec.grid.integrate(density(state, spec) * spec.v)
    if spec.modes.count:
        tilde = field_expectation(state, spec).tilde()
        omega = spec.modes.frequencies
        source = -float(np.real(np.sum(omega * tilde * np.conj(spec.j.coefficients))))
    else:
        source = 0.0
    return EnergyDecomposition(bare=float(bare), potential=float(potential), source=source)
