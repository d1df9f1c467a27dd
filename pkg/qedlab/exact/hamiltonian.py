import dataclasses
from dataclasses import dataclass
from typing import Any

import numpy as np
import scipy.sparse as sp
from loguru import logger
from numpy.typing import NDArray

from ..field.core import ClassicalField, Grid1D, ModeSet, TransverseCurrent
from ..shared.constants import MAX_DIMENSION
from ..shared.exceptions import DimensionBudgetError, ModelError
from .basis import ElectronBasis, FockSpace

__all__ = (
    "ExternalPair",
    "FieldTerm",
    "HamiltonianSpec",
    "HamiltonianTerms",
    "Interaction",
    "assemble_terms",
    "build_hamiltonian",
    "field_terms",
    "lattice_kinetic",
    "lattice_momentum",
)


@dataclass(frozen=True, slots=True)
class Interaction:
    strength: float = 0.0
    softening: float = 1.0

    def __post_init__(self) -> None:
        if not np.isfinite(self.strength) or self.strength < 0:
            raise ModelError("interaction strength w0 must be >= 0")
        if not np.isfinite(self.softening) or self.softening <= 0:
            raise ModelError("interaction softening a must be > 0")

    def pair_matrix(self, grid: Grid1D) -> NDArray[np.float64]:
        x = grid.positions
        d = np.abs(x[:, None] - x[None, :])
        d = np.minimum(d, grid.length - d)
        return self.strength / np.sqrt(d**2 + self.softening**2)


@dataclass(frozen=True, slots=True, eq=False)
class ExternalPair:
    v: NDArray[np.float64]
    j: TransverseCurrent

    def __post_init__(self) -> None:
        v = np.array(self.v, dtype=float, copy=True)
        if v.ndim != 1 or not np.all(np.isfinite(v)):
            raise ModelError("external potential must be a finite 1D array")
        scale = max(1.0, float(np.max(np.abs(v)))) if v.size else 1.0
        if abs(float(np.mean(v))) > 1e-12 * scale:
            raise ModelError("external potential must have zero spatial mean")
        if not self.j.is_conjugate_symmetric():
            raise ModelError("external current breaks conjugation symmetry")
        v.setflags(write=False)
        object.__setattr__(self, "v", v)

    @classmethod
    def gauge_fixed(cls, v_raw: NDArray, j: TransverseCurrent) -> "ExternalPair":
        v = np.asarray(v_raw, dtype=float)
        return cls(v - np.mean(v), j)


@dataclass(frozen=True, slots=True, eq=False)
class HamiltonianSpec:
    grid: Grid1D
    modes: ModeSet
    electrons: int
    external: ExternalPair
    interaction: Interaction = Interaction()
    fock_cutoff: int = 4
    dipole: bool = False
    b: TransverseCurrent | None = None

    def __post_init__(self) -> None:
        self.modes.check_resolved(self.grid)
        if self.electrons not in (1, 2):
            raise ModelError("number of electrons must be 1 or 2")
        if self.fock_cutoff < 1:
            raise ModelError("fock cutoff n_max must be >= 1")
        if self.external.v.shape != (self.grid.points,):
            raise ModelError("external potential does not match the grid")
        if self.external.j.modes != self.modes:
            raise ModelError("external current lives on a different mode set")
        if self.b is not None:
            if self.b.modes != self.modes:
                raise ModelError("external vector potential lives on a different mode set")
            if not self.b.is_conjugate_symmetric():
                raise ModelError("external vector potential breaks conjugation symmetry")

    @property
    def v(self) -> NDArray[np.float64]:
        return self.external.v

    @property
    def j(self) -> TransverseCurrent:
        return self.external.j

    @property
    def vector_potential(self) -> TransverseCurrent:
        return self.b if self.b is not None else TransverseCurrent.zeros(self.modes)

    def b_values(self) -> NDArray[np.float64]:
        """Coupled grid values gamma * b(x) entering the kinetic term."""
        if self.b is None:
            return np.zeros(self.grid.points)
        return ClassicalField(self.modes, self.b.coefficients).coupled_values(
            self.grid, dipole=self.dipole
        )

    def replace(self, **changes: Any) -> "HamiltonianSpec":
        return dataclasses.replace(self, **changes)

    def with_external(self, external: ExternalPair) -> "HamiltonianSpec":
        return dataclasses.replace(self, external=external)

    def dimension(self) -> int:
        basis = ElectronBasis(self.grid.points, self.electrons)
        return FockSpace(self.modes.count, self.fock_cutoff).size_of(basis.dimension)

    def to_dict(self) -> dict[str, Any]:
        return {
            "grid": {"length": self.grid.length, "points": self.grid.points},
            "modes": list(self.modes.numbers),
            "coupling": self.modes.coupling,
            "electrons": self.electrons,
            "fock_cutoff": self.fock_cutoff,
            "dipole": self.dipole,
            "interaction": {
                "strength": self.interaction.strength,
                "softening": self.interaction.softening,
            },
            "external": {
                "v": [float(x) for x in self.v],
                "j": [list(e) for e in self.j.entries()],
                "b": [list(e) for e in self.vector_potential.entries()],
            },
        }


def lattice_momentum(grid: Grid1D) -> sp.csr_matrix:
    """Central-difference momentum -i d/dx on the periodic grid."""
    n = grid.points
    shift = sp.diags([np.ones(n - 1), np.ones(1)], [1, -(n - 1)], format="csr")
    d = (shift - shift.T) / (2.0 * grid.spacing)
    return (-1j * d).tocsr()


def lattice_kinetic(grid: Grid1D) -> sp.csr_matrix:
    """(1/2) p^2 with the three-point second difference."""
    n = grid.points
    shift = sp.diags([np.ones(n - 1), np.ones(1)], [1, -(n - 1)], format="csr")
    lap = shift + shift.T - 2.0 * sp.identity(n, format="csr")
    return (-0.5 / grid.spacing**2 * lap).astype(complex).tocsr()


@dataclass(frozen=True, slots=True, eq=False)
class FieldTerm:
    """One piece F (x) f(x) of the operator-valued field A(x) + b(x)."""

    photon: sp.csr_matrix
    profile: NDArray[np.complex128]


@dataclass(frozen=True, slots=True, eq=False)
class HamiltonianTerms:
    spec: HamiltonianSpec
    basis: ElectronBasis
    fock: FockSpace
    field_terms: tuple[FieldTerm, ...]
    kinetic_coupling: sp.csr_matrix
    potential: sp.csr_matrix
    interaction: sp.csr_matrix
    photon: sp.csr_matrix
    source: sp.csr_matrix

    @property
    def dimension(self) -> int:
        return self.basis.dimension * self.fock.dimension

    @property
    def bare(self) -> sp.csr_matrix:
        """H_0: kinetic with fields, pair interaction and free photons."""
        return (self.kinetic_coupling + self.interaction + self.photon).tocsr()

    @property
    def total(self) -> sp.csr_matrix:
        return (self.bare + self.potential + self.source).tocsr()


def field_terms(spec: HamiltonianSpec, fock: FockSpace) -> list[FieldTerm]:
    modes = spec.modes
    u = modes.mode_functions(spec.grid, dipole=spec.dipole)
    g = modes.prefactors
    terms: list[FieldTerm] = []
    for m in range(modes.count):
        a = fock.annihilation(m)
        terms.append(FieldTerm(a, g[m] * u[m]))
        terms.append(FieldTerm(a.conj().T.tocsr(), g[m] * np.conj(u[m])))
    b = spec.b_values()
    if np.any(b != 0.0):
        terms.append(FieldTerm(fock.identity(), b.astype(complex)))
    return terms


def _photon_operator(spec: HamiltonianSpec, fock: FockSpace) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    free = sp.csr_matrix((fock.dimension, fock.dimension), dtype=complex)
    source = sp.csr_matrix((fock.dimension, fock.dimension), dtype=complex)
    omega = spec.modes.frequencies
    j = spec.j.coefficients
    for m in range(spec.modes.count):
        a = fock.annihilation(m)
        ad = a.conj().T
        free = free + omega[m] * (ad @ a)
        source = source - omega[m] * (np.conj(j[m]) * a + j[m] * ad)
    return free.tocsr(), source.tocsr()


def _sum_sparse(pieces: list, dimension: int) -> sp.csr_matrix:
    coo = [p.tocoo() for p in pieces]
    rows = np.concatenate([c.row for c in coo])
    cols = np.concatenate([c.col for c in coo])
    data = np.concatenate([c.data.astype(complex) for c in coo])
    out = sp.coo_matrix((data, (rows, cols)), shape=(dimension, dimension)).tocsr()
    out.sum_duplicates()
    out.eliminate_zeros()
    return out


def assemble_terms(
    spec: HamiltonianSpec, *, max_dimension: int = MAX_DIMENSION
) -> HamiltonianTerms:
    basis = ElectronBasis(spec.grid.points, spec.electrons)
    fock = FockSpace(spec.modes.count, spec.fock_cutoff)
    dimension = basis.dimension * fock.dimension
    if dimension > max_dimension:
        raise DimensionBudgetError(dimension, max_dimension)

    id_e = sp.identity(basis.dimension, format="csr", dtype=complex)
    id_ph = fock.identity()
    momentum = lattice_momentum(spec.grid)
    terms = field_terms(spec, fock)

    pieces = [sp.kron(basis.lift(lattice_kinetic(spec.grid)), id_ph, format="csr")]
    for t in terms:
        prof = sp.diags(t.profile)
        cross = 0.5 * (momentum @ prof + prof @ momentum)
        pieces.append(sp.kron(basis.lift(cross), t.photon, format="csr"))
    for i, t in enumerate(terms):
        for s in terms[i:]:
            photon = t.photon @ s.photon
            if s is not t:
                photon = photon + s.photon @ t.photon
            diag = sp.diags(basis.lift_diagonal(t.profile * s.profile))
            pieces.append(0.5 * sp.kron(diag, photon, format="csr"))
    kinetic_coupling = _sum_sparse(pieces, dimension)

    potential = sp.kron(
        sp.diags(-basis.lift_diagonal(spec.v).astype(complex)), id_ph, format="csr"
    )
    pair = basis.pair_diagonal(spec.interaction.pair_matrix(spec.grid))
    interaction = sp.kron(sp.diags(pair.astype(complex)), id_ph, format="csr")
    free, source = _photon_operator(spec, fock)
    photon = sp.kron(id_e, free, format="csr")
    source_op = sp.kron(id_e, source, format="csr")

    logger.debug(
        f"Assembled Hamiltonian: dim={dimension} electrons={basis.dimension} "
        f"photons={fock.dimension} nnz={kinetic_coupling.nnz}"
    )
    return HamiltonianTerms(
        spec=spec,
        basis=basis,
        fock=fock,
        field_terms=tuple(terms),
        kinetic_coupling=kinetic_coupling,
        potential=potential,
        interaction=interaction,
        photon=photon,
        source=source_op,
    )


def build_hamiltonian(
    spec: HamiltonianSpec, *, max_dimension: int = MAX_DIMENSION
) -> sp.csr_matrix:
    return assemble_terms(spec, max_dimension=max_dimension).total
