from collections.abc import Callable, Iterable

import numpy as np
import pytest

from qedlab.exact.hamiltonian import ExternalPair, HamiltonianSpec, Interaction
from qedlab.field.core import Grid1D, ModeSet, TransverseCurrent

LENGTH = 10.0


def asymmetric_potential(grid: Grid1D) -> np.ndarray:
    """cos(2 pi x / L) plus a second harmonic that lifts parity degeneracies."""
    phase = 2.0 * np.pi * grid.positions / grid.length
    return np.cos(phase) + 0.3 * np.sin(2.0 * phase)


def _make_spec(
    *,
    points: int = 8,
    electrons: int = 1,
    modes: Iterable[int] = (1,),
    coupling: float = 0.3,
    fock_cutoff: int = 6,
    j: Iterable[tuple[int, complex]] = (),
    b: Iterable[tuple[int, complex]] = (),
    strength: float = 0.0,
    dipole: bool = False,
    min_points: int | None = None,
) -> HamiltonianSpec:
    grid = (
        Grid1D(LENGTH, points)
        if min_points is None
        else Grid1D(LENGTH, points, min_points=min_points)
    )
    mode_set = ModeSet.symmetric(modes, LENGTH, coupling)
    current = TransverseCurrent.from_entries(mode_set, j)
    vector_potential = TransverseCurrent.from_entries(mode_set, b)
    return HamiltonianSpec(
        grid=grid,
        modes=mode_set,
        electrons=electrons,
        external=ExternalPair.gauge_fixed(asymmetric_potential(grid), current),
        interaction=Interaction(strength, 1.0),
        fock_cutoff=fock_cutoff,
        dipole=dipole,
        b=vector_potential if np.any(vector_potential.coefficients) else None,
    )


@pytest.fixture
def make_spec() -> Callable[..., HamiltonianSpec]:
    return _make_spec


@pytest.fixture
def grid16() -> Grid1D:
    return Grid1D(LENGTH, 16)


@pytest.fixture
def modes123() -> ModeSet:
    return ModeSet.symmetric([1, 2, 3], LENGTH, 0.05)


@pytest.fixture
def small_config_text() -> str:
    return """
model:
  length: 10.0
  points: 8
  electrons: 1
  modes: [1]
  coupling: 0.0
  fock_cutoff: 8
external:
  potential:
    terms: [[1, 1.0, 0.0], [2, 0.0, 0.3]]
  current: [[1, 0.2, 0.1]]
run:
  scan:
    count: 3
log:
  path: ""
  level: WARNING
"""
