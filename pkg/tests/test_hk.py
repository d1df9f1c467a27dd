import numpy as np
import pytest

from qedlab.exact.observables import internal_pair
from qedlab.exact.solver import solve_exact
from qedlab.field.core import TransverseCurrent
from qedlab.hk import verify
from qedlab.hk.verify import (
    check_recovery,
    external_distance,
    gauge_fix,
    internal_distance,
    recover_external,
    sample_external,
    scan_externals,
    scan_injectivity,
    variational_cross_check,
)
from qedlab.shared.exceptions import ModelError


@pytest.fixture
def base(make_spec):
    return make_spec(coupling=0.5, fock_cutoff=10, j=[(1, 0.05 - 0.05j)])


def test_gauge_fix_removes_the_mean():
    assert np.mean(gauge_fix(np.array([1.0, 2.0, 6.0]))) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("dipole", [False, True])
def test_recover_external_reproduces_the_source(make_spec, dipole):
    spec = make_spec(coupling=0.5, fock_cutoff=8, j=[(1, 0.15 + 0.05j)], dipole=dipole)
    solution = solve_exact(spec)
    pair = internal_pair(solution.state, spec)
    recovered = recover_external(pair, solution.ground, spec)
    np.testing.assert_allclose(recovered.coefficients, spec.j.coefficients, atol=1e-7)
    check = check_recovery(solution)
    assert check.status == "passed"


def test_recovery_error_shrinks_as_the_fock_cutoff_grows(make_spec):
    errors = []
    for cutoff in (2, 4, 6, 8):
        spec = make_spec(coupling=0.3, fock_cutoff=cutoff, j=[(1, 0.8)])
        errors.append(check_recovery(solve_exact(spec)).error)
    assert np.all(np.diff(errors) < 0.0)


def test_recover_external_without_photons(make_spec):
    spec = make_spec(modes=())
    solution = solve_exact(spec)
    recovered = recover_external(internal_pair(solution.state, spec), solution.ground, spec)
    assert recovered.coefficients.shape == (0,)


def test_sampling_is_seeded_and_respects_the_strategy(base):
    a = sample_external(base, "smooth", np.random.default_rng(3))
    b = sample_external(base, "smooth", np.random.default_rng(3))
    np.testing.assert_array_equal(a.v, b.v)
    np.testing.assert_array_equal(a.j.coefficients, b.j.coefficients)

    potential_only = sample_external(base, "potential", np.random.default_rng(1))
    np.testing.assert_array_equal(potential_only.j.coefficients, base.j.coefficients)
    current_only = sample_external(base, "current", np.random.default_rng(1))
    np.testing.assert_allclose(current_only.v, base.v, rtol=0, atol=1e-14)
    assert current_only.j.is_conjugate_symmetric()
    with pytest.raises(ModelError):
        sample_external(base, "bogus", np.random.default_rng(1))  # type: ignore[arg-type]


def test_distances_are_symmetric_and_vanish_on_the_diagonal(base):
    rng = np.random.default_rng(0)
    x, y = sample_external(base, "smooth", rng), sample_external(base, "smooth", rng)
    assert external_distance(x, x, base.grid) == 0.0
    assert external_distance(x, y, base.grid) == pytest.approx(external_distance(y, x, base.grid))
    assert external_distance(x, y, base.grid) > 0.0


def test_internal_distance_of_identical_pairs_is_zero(base):
    pair = internal_pair(solve_exact(base).state, base)
    assert internal_distance(pair, pair, base.grid) == 0.0


def test_scan_finds_no_violations(base):
    report = scan_injectivity(base, "smooth", count=4, seed=1)
    assert report.passed
    assert report.count == 4
    assert report.excluded == 0
    assert report.min_ratio() > 0.0
    assert max(report.recovery_errors) < 1e-7
    assert all(r.status == "passed" for r in report.recoveries)
    assert len(report.cross_checks) == 6
    assert all(check.holds for check in report.cross_checks.values())
    direct, assembled = report.min_margins()
    assert direct > 0.0
    assert assembled == pytest.approx(direct, abs=1e-8)
    assert report.status == "passed"
    np.testing.assert_allclose(report.external_distances, report.external_distances.T)
    assert report.to_dict()["violations"] == []


def test_scan_with_huge_internal_tolerance_reports_violations(base):
    report = scan_injectivity(base, "current", count=3, seed=2, eps_int=1e3)
    assert not report.passed
    assert report.violations == ((0, 1), (0, 2), (1, 2))


def test_scan_is_deterministic_across_worker_counts(base):
    serial = scan_injectivity(base, "potential", count=3, seed=5, workers=1)
    threaded = scan_injectivity(base, "potential", count=3, seed=5, workers=3)
    np.testing.assert_allclose(
        serial.internal_distances, threaded.internal_distances, rtol=0, atol=1e-12
    )


def test_variational_cross_check_holds_for_distinct_externals(base):
    rng = np.random.default_rng(4)
    a = solve_exact(base.with_external(sample_external(base, "smooth", rng)))
    b = solve_exact(base.with_external(sample_external(base, "smooth", rng)))
    check = variational_cross_check(a, b)
    assert check.holds
    assert check.margin_ab > 0.0 and check.margin_ba > 0.0
    assert check.assembled_ab == pytest.approx(check.margin_ab, abs=1e-9)
    assert check.assembled_ba == pytest.approx(check.margin_ba, abs=1e-9)
    assert check.swapped().margin_ab == check.margin_ba


def test_cross_check_requires_comparable_problems(base):
    a = solve_exact(base)
    b = solve_exact(base.replace(fock_cutoff=4))
    with pytest.raises(ModelError):
        variational_cross_check(a, b)


def test_sampled_currents_have_absolute_amplitudes(base):
    rng = np.random.default_rng(7)
    for _ in range(5):
        sample = sample_external(base, "current", rng)
        assert 0.05 <= abs(sample.j.coefficients[base.modes.index(1)]) <= 0.5


def test_scan_fails_when_cross_checks_cannot_hold(base):
    report = scan_injectivity(base, "smooth", count=3, seed=1, cross_margin=1e3)
    assert report.violations == ()
    assert report.failed_cross_checks == ((0, 1), (0, 2), (1, 2))
    assert not report.passed
    assert report.status == "failed"
    assert report.to_dict()["failed_cross_checks"] == [[0, 1], [0, 2], [1, 2]]


def test_scan_fails_when_a_sample_does_not_reproduce_its_current(base, monkeypatch):
    exact_recovery = verify.recover_external

    def skewed(internal, ground, spec):
        offset = TransverseCurrent.from_entries(spec.modes, [(1, 1e-3)])
        return exact_recovery(internal, ground, spec) + offset

    monkeypatch.setattr(verify, "recover_external", skewed)
    report = scan_injectivity(base, "smooth", count=2, seed=1)
    assert report.violations == ()
    assert report.failed_recoveries == (0, 1)
    assert min(report.recovery_errors) == pytest.approx(1e-3, rel=1e-3)
    assert not report.passed
    assert report.status == "failed"


def test_scan_ignores_constants_added_to_potentials(base):
    rng = np.random.default_rng(11)
    samples = [sample_external(base, "smooth", rng) for _ in range(3)]
    plain = scan_externals(base, [(s.v, s.j) for s in samples])
    shifted = scan_externals(base, [(s.v + 7.5 * (i + 1), s.j) for i, s in enumerate(samples)])
    for a, b in zip(plain.externals, shifted.externals, strict=True):
        np.testing.assert_allclose(a.v, b.v, rtol=0, atol=1e-12)
    np.testing.assert_allclose(
        plain.internal_distances, shifted.internal_distances, rtol=0, atol=1e-9
    )
    np.testing.assert_allclose(
        plain.external_distances, shifted.external_distances, rtol=0, atol=1e-11
    )
    assert plain.passed and shifted.passed
