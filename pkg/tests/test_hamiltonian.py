import numpy as np
import pytest
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from qedlab.exact.hamiltonian import (
    ExternalPair,
    Interaction,
    assemble_terms,
    build_hamiltonian,
    lattice_momentum,
)
from qedlab.exact.observables import energy_decomposition, field_expectation
from qedlab.exact.solver import solve_exact
from qedlab.field.core import Grid1D, ModeSet, TransverseCurrent
from qedlab.shared.exceptions import DimensionBudgetError, ModelError


def test_hamiltonian_is_hermitian(make_spec):
    spec = make_spec(electrons=2, fock_cutoff=3, j=[(1, 0.1 - 0.05j)], b=[(1, 0.05j)], strength=0.5)
    h = build_hamiltonian(spec)
    assert spla.norm(h - h.conj().T) < 1e-12


def test_dimension_matches_assembled_operator(make_spec):
    spec = make_spec(electrons=2, fock_cutoff=2)
    assert spec.dimension() == 28 * 9
    assert build_hamiltonian(spec).shape == (28 * 9, 28 * 9)


def test_dimension_budget_is_enforced(make_spec):
    spec = make_spec(fock_cutoff=3)
    with pytest.raises(DimensionBudgetError) as info:
        assemble_terms(spec, max_dimension=100)
    assert info.value.dimension == 128
    assert info.value.budget == 100


def test_lattice_momentum_is_hermitian_and_kills_constants():
    grid = Grid1D(10.0, 8)
    p = lattice_momentum(grid).toarray()
    np.testing.assert_allclose(p, p.conj().T)
    np.testing.assert_allclose(p @ np.ones(8), 0.0, atol=1e-14)


def test_external_potential_must_be_gauge_fixed(make_spec):
    spec = make_spec()
    with pytest.raises(ModelError, match="zero spatial mean"):
        ExternalPair(spec.v + 1.0, spec.j)
    fixed = ExternalPair.gauge_fixed(spec.v + 1.0, spec.j)
    np.testing.assert_allclose(fixed.v, spec.v, atol=1e-14)


def test_spec_rejects_mismatched_current(make_spec):
    spec = make_spec()
    other = ModeSet.symmetric([1], 10.0, 0.1)
    with pytest.raises(ModelError):
        spec.with_external(ExternalPair(spec.v, TransverseCurrent.zeros(other)))


def test_soft_coulomb_pair_matrix_uses_minimum_image():
    grid = Grid1D(10.0, 8)
    pair = Interaction(0.5, 1.0).pair_matrix(grid)
    assert pair[0, 0] == pytest.approx(0.5)
    assert pair[0, 7] == pytest.approx(pair[0, 1])
    np.testing.assert_allclose(pair, pair.T)


def test_decoupled_photons_are_displaced_by_the_source(make_spec):
    j = 0.2 + 0.1j
    free = solve_exact(make_spec(coupling=0.0, fock_cutoff=8))
    driven = solve_exact(make_spec(coupling=0.0, fock_cutoff=8, j=[(1, j)]))
    omega = 2.0 * np.pi / 10.0
    expected_shift = -2.0 * omega * abs(j) ** 2
    assert driven.ground.energy - free.ground.energy == pytest.approx(expected_shift, abs=1e-8)
    alpha = field_expectation(driven.state, driven.spec).amplitudes
    np.testing.assert_allclose(alpha, driven.spec.j.coefficients, atol=1e-8)


def test_energy_decomposition_adds_up(make_spec):
    spec = make_spec(electrons=2, fock_cutoff=4, j=[(1, 0.1 + 0.1j)], strength=0.5)
    solution = solve_exact(spec)
    parts = energy_decomposition(solution.state, spec, terms=solution.terms)
    assert parts.total == pytest.approx(solution.ground.energy, abs=1e-9)
    rebuilt = energy_decomposition(solution.state, spec)
    assert rebuilt.total == pytest.approx(parts.total, abs=1e-12)
    with pytest.raises(DimensionBudgetError):
        energy_decomposition(solution.state, spec, max_dimension=100)


def test_oracle_dense_diagonalization(make_spec):
    spec = make_spec(points=6, min_points=6, coupling=0.5, fock_cutoff=3, j=[(1, 0.1)])
    solution = solve_exact(spec)
    dense = sla.eigvalsh(build_hamiltonian(spec).toarray())
    assert solution.ground.energy == pytest.approx(dense[0], abs=1e-10)
    assert solution.ground.first_excited == pytest.approx(dense[1], abs=1e-10)
