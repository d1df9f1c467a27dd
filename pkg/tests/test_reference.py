import numpy as np
import pytest

from qedlab.exact.observables import (
    continuity_current,
    density,
    discretization_defect,
    maxwell_residual,
    physical_current,
)
from qedlab.exact.solver import solve_exact
from qedlab.hk.verify import check_recovery, scan_injectivity
from qedlab.scf.loop import SCFConfig, scf_loop

pytestmark = pytest.mark.slow

COUPLINGS = (0.02, 0.04, 0.08)


def _reference_spec(make_spec, coupling: float = 0.05):
    return make_spec(
        points=16, electrons=2, modes=(1, 2), coupling=coupling, fock_cutoff=6, strength=0.5
    )


@pytest.fixture
def reference(make_spec):
    spec = _reference_spec(make_spec)
    return spec, solve_exact(spec)


def _loglog_slope(x, y) -> float:
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def test_reference_ground_state_is_consistent(reference):
    spec, solution = reference
    assert solution.terms.dimension == 120 * 7**4
    assert solution.ground.truncation_tail < 1e-10
    assert np.max(np.abs(maxwell_residual(solution.state, spec))) < 1e-6
    flux = continuity_current(solution.state, spec)
    assert np.ptp(flux) < 1e-8
    current = physical_current(solution.state, spec)
    assert np.ptp(current - discretization_defect(solution.state, spec)) < 1e-8
    assert check_recovery(solution).status == "passed"


def test_reference_mean_field_lies_above_the_exact_energy(reference):
    spec, solution = reference
    result = scf_loop(spec, SCFConfig.anderson())
    assert result.converged
    assert result.energy >= solution.ground.energy - 1e-10


@pytest.mark.parametrize("initial_field", ["zero", "external"])
def test_linear_mixing_converges_on_the_reference_spec(make_spec, initial_field):
    spec = _reference_spec(make_spec)
    result = scf_loop(spec, SCFConfig(mixing=0.3, initial_field=initial_field))
    assert result.converged
    assert result.iterations <= 200
    last = result.history[-1]
    assert last.density_residual <= 1e-8
    assert last.field_residual <= 1e-8


def test_linear_mixing_is_independent_of_the_initial_field(make_spec):
    spec = _reference_spec(make_spec)
    zero, external = (
        scf_loop(spec, SCFConfig(mixing=0.3, initial_field=start)) for start in ("zero", "external")
    )
    assert zero.converged and external.converged
    np.testing.assert_allclose(zero.state.density, external.state.density, rtol=0, atol=1e-7)
    np.testing.assert_allclose(
        zero.state.field.amplitudes, external.state.field.amplitudes, rtol=0, atol=1e-7
    )
    assert zero.energy == pytest.approx(external.energy, abs=1e-7)


def test_mean_field_error_scales_with_the_square_of_the_coupling(make_spec):
    config = SCFConfig.anderson(density_tol=1e-11, field_tol=1e-11, max_iterations=400)

    def gaps(coupling: float):
        spec = _reference_spec(make_spec, coupling)
        exact = solve_exact(spec)
        mean_field = scf_loop(spec, config)
        assert mean_field.converged
        assert mean_field.energy >= exact.ground.energy - 1e-10
        n_exact = density(exact.state, spec)
        return mean_field.energy - exact.ground.energy, mean_field.state.density - n_exact, spec

    energy_0, shift_0, _ = gaps(0.0)
    energy_gaps, density_gaps = [], []
    for coupling in COUPLINGS:
        energy, shift, spec = gaps(coupling)
        energy_gaps.append(energy - energy_0)
        density_gaps.append(spec.grid.integrate(np.abs(shift - shift_0)))
    assert min(energy_gaps) > 0.0
    assert _loglog_slope(COUPLINGS, energy_gaps) == pytest.approx(2.0, abs=0.3)
    assert _loglog_slope(COUPLINGS, density_gaps) == pytest.approx(2.0, abs=0.3)


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_injectivity_scan_passes_on_the_reference_spec(make_spec, seed):
    spec = _reference_spec(make_spec)
    report = scan_injectivity(spec, "smooth", count=10, seed=seed, workers=2)
    assert report.violations == ()
    assert report.failed_cross_checks == ()
    assert report.failed_recoveries == ()
    assert report.passed
    direct, _ = report.min_margins()
    assert direct > 0.0
