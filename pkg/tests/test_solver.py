import numpy as np
import pytest
import scipy.linalg as sla
import scipy.sparse as sp

from qedlab.exact.hamiltonian import build_hamiltonian
from qedlab.exact.solver import CompositeState, SolverOptions, ground_state, solve_exact
from qedlab.shared.exceptions import ModelError, SolverConvergenceError


def _random_hermitian(dim: int, seed: int = 0, density: float = 0.05) -> sp.csr_matrix:
    rng = np.random.default_rng(seed)
    m = sp.random(dim, dim, density=density, random_state=rng, format="csr", dtype=float)
    m = m + 1j * sp.random(dim, dim, density=density, random_state=rng, format="csr")
    return ((m + m.conj().T) / 2 + sp.diags(rng.normal(size=dim))).tocsr()


def test_lanczos_matches_dense_eigh():
    h = _random_hermitian(200)
    result = ground_state(h)
    dense = sla.eigvalsh(h.toarray())
    assert result.energy == pytest.approx(dense[0], abs=1e-10)
    assert result.gap == pytest.approx(dense[1] - dense[0], abs=1e-9)
    assert result.residual <= 1e-10
    assert result.iterations > 0


@pytest.mark.parametrize("ncv", [None, 12, 40])
def test_krylov_size_does_not_change_the_result(ncv):
    h = _random_hermitian(200)
    reference = ground_state(h)
    result = ground_state(h, SolverOptions(ncv=ncv))
    assert result.energy == pytest.approx(reference.energy, abs=1e-11)
    assert abs(result.state.overlap(reference.state)) == pytest.approx(1.0, abs=1e-9)


def test_coupled_ground_state_is_independent_of_the_krylov_size(make_spec):
    spec = make_spec(coupling=0.5, fock_cutoff=6, j=[(1, 0.1 + 0.2j)])
    energies = [solve_exact(spec, SolverOptions(ncv=ncv)).ground.energy for ncv in (None, 20, 60)]
    assert max(energies) - min(energies) <= 1e-11


def test_lowest_levels_match_dense_eigh():
    h = _random_hermitian(150, seed=3)
    result = ground_state(h, SolverOptions(levels=3))
    dense = sla.eigvalsh(h.toarray())
    np.testing.assert_allclose(result.levels, dense[:3], rtol=0, atol=1e-10)
    assert result.summary()["levels"] == list(result.levels)


def test_random_trial_states_lie_above_the_ground_energy(make_spec):
    spec = make_spec(electrons=2, coupling=0.5, fock_cutoff=4, j=[(1, 0.2 - 0.1j)], strength=0.5)
    h = build_hamiltonian(spec)
    e0 = ground_state(h).energy
    rng = np.random.default_rng(8)
    for _ in range(50):
        psi = rng.standard_normal(h.shape[0]) + 1j * rng.standard_normal(h.shape[0])
        psi /= np.linalg.norm(psi)
        assert np.vdot(psi, h @ psi).real >= e0 - 1e-10


def test_small_problems_use_dense_fallback():
    h = sp.diags([3.0, 1.0, 2.0, 5.0]).astype(complex)
    result = ground_state(h)
    assert result.energy == 1.0
    assert result.gap == 1.0
    assert abs(result.state.amplitudes[1]) == pytest.approx(1.0)


def test_degenerate_ground_state_is_flagged():
    h = sp.diags([1.0, 1.0, 2.0]).astype(complex)
    result = ground_state(h)
    assert result.degenerate
    assert result.gap == 0.0


def test_unreachable_tolerance_raises_with_best_residual():
    h = _random_hermitian(12, seed=4, density=0.5)
    with pytest.raises(SolverConvergenceError) as info:
        ground_state(h, SolverOptions(tol=1e-300))
    assert info.value.best_residual >= 0.0


def test_state_reports_mode_tails():
    amps = np.zeros((2, 3, 3), dtype=complex)
    amps[0, 2, 0] = 0.6
    amps[1, 0, 1] = 0.8
    state = CompositeState(amps.reshape(-1), 2, (3, 3))
    np.testing.assert_allclose(state.mode_tails(), [0.36, 0.0])
    assert state.photon_dim == 9
    assert state.matrix().shape == (2, 9)


def test_state_must_be_normalized():
    with pytest.raises(ModelError):
        CompositeState(np.ones(4), 2, (2,))
    state = CompositeState.normalized(np.ones(4), 2, (2,))
    assert np.linalg.norm(state.amplitudes) == pytest.approx(1.0)


def test_options_are_validated():
    with pytest.raises(ModelError):
        SolverOptions(tol=0.0)
    with pytest.raises(ModelError):
        SolverOptions(max_iterations=0)
    with pytest.raises(ModelError):
        SolverOptions(levels=0)
