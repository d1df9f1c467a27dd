"""Periodic 1D matter grid, photon mode set and mode-space field transforms.

Units are natural (hbar = c = m = |e| = eps0 = mu0 = 1). Mode coefficients are
the primary representation of currents and vector potentials; grid arrays are
derived views. With the prefactors used here the static Maxwell equation
-A'' = j is the identity in coefficient space.
"""

import math
from collections.abc import Iterable
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import NDArray

from ..shared.constants import CONJUGATION_TOL, MIN_GRID_POINTS
from ..shared.exceptions import ModelError

__all__ = (
    "ClassicalField",
    "Grid1D",
    "ModeSet",
    "TransverseCurrent",
    "b_to_current",
    "from_mode_coefficients",
    "grid_inner",
    "mode_bilinear",
    "solve_static_maxwell",
    "spectral_second_derivative",
    "to_mode_coefficients",
)

RealArray = NDArray[np.float64]
ComplexArray = NDArray[np.complex128]


def _frozen(values: Any, dtype: Any) -> Any:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, slots=True)
class Grid1D:
    length: float
    points: int
    min_points: int = field(default=MIN_GRID_POINTS, compare=False, repr=False)

    def __post_init__(self) -> None:
        if not math.isfinite(self.length) or self.length <= 0:
            raise ModelError("grid length must be > 0")
        if int(self.points) != self.points or self.points < self.min_points:
            raise ModelError(f"grid points must be an integer >= {self.min_points}")

    @property
    def spacing(self) -> float:
        return self.length / self.points

    @property
    def positions(self) -> RealArray:
        return np.arange(self.points, dtype=float) * self.spacing

    def integrate(self, values: RealArray) -> float:
        return float(self.spacing * np.sum(values))

    def resolves(self, n: int) -> bool:
        return 2 * abs(n) < self.points


@dataclass(frozen=True, slots=True)
class ModeSet:
    numbers: tuple[int, ...]
    length: float
    coupling: float = 1.0

    def __post_init__(self) -> None:
        numbers = tuple(int(n) for n in self.numbers)
        object.__setattr__(self, "numbers", numbers)
        if not math.isfinite(self.length) or self.length <= 0:
            raise ModelError("mode box length must be > 0")
        if not math.isfinite(self.coupling) or self.coupling < 0:
            raise ModelError("coupling scale must be >= 0")
        if 0 in numbers:
            raise ModelError("zero mode is not allowed")
        if len(set(numbers)) != len(numbers):
            raise ModelError(f"duplicate modes in {list(numbers)}")
        missing = sorted({-n for n in numbers} - set(numbers))
        if missing:
            raise ModelError(f"mode set is not closed under negation, missing {missing}")

    @classmethod
    def symmetric(cls, positive: Iterable[int], length: float, coupling: float = 1.0):
        numbers: list[int] = []
        for n in positive:
            numbers.extend((int(n), -int(n)))
        return cls(tuple(numbers), length, coupling)

    @property
    def count(self) -> int:
        return len(self.numbers)

    @property
    def wavenumbers(self) -> RealArray:
        return 2.0 * np.pi * np.asarray(self.numbers, dtype=float) / self.length

    @property
    def frequencies(self) -> RealArray:
        return np.abs(self.wavenumbers)

    @property
    def unit_prefactors(self) -> RealArray:
        return (2.0 * self.frequencies * self.length) ** -0.5

    @property
    def prefactors(self) -> RealArray:
        return self.coupling * self.unit_prefactors

    @property
    def partners(self) -> NDArray[np.intp]:
        lookup = {n: i for i, n in enumerate(self.numbers)}
        return np.array([lookup[-n] for n in self.numbers], dtype=np.intp)

    def index(self, n: int) -> int:
        try:
            return self.numbers.index(int(n))
        except ValueError:
            raise ModelError(f"mode {n} is not in the mode set") from None

    def check_resolved(self, grid: Grid1D) -> None:
        if not math.isclose(grid.length, self.length, rel_tol=1e-14):
            raise ModelError(
                f"mode box length {self.length} differs from grid length {grid.length}"
            )
        aliased = [n for n in self.numbers if not grid.resolves(n)]
        if aliased:
            raise ModelError(
                f"modes {aliased} are aliased by a grid of {grid.points} points "
                f"(need |n| < {grid.points / 2:g})"
            )

    def mode_functions(self, grid: Grid1D, *, dipole: bool = False) -> ComplexArray:
        """Rows u_n(x) = exp(i k_n x), or ones in the dipole approximation."""
        if dipole:
            return np.ones((self.count, grid.points), dtype=complex)
        return np.exp(1j * np.outer(self.wavenumbers, grid.positions))


@dataclass(frozen=True, slots=True, eq=False)
class TransverseCurrent:
    modes: ModeSet
    coefficients: ComplexArray

    def __post_init__(self) -> None:
        coeffs = _frozen(self.coefficients, complex)
        if coeffs.shape != (self.modes.count,):
            raise ModelError(
                f"expected {self.modes.count} mode coefficients, got {coeffs.shape}"
            )
        if not np.all(np.isfinite(coeffs)):
            raise ModelError("mode coefficients must be finite")
        object.__setattr__(self, "coefficients", coeffs)

    @classmethod
    def zeros(cls, modes: ModeSet) -> "TransverseCurrent":
        return cls(modes, np.zeros(modes.count, dtype=complex))

    @classmethod
    def from_entries(
        cls, modes: ModeSet, entries: Iterable[tuple[int, complex]]
    ) -> "TransverseCurrent":
        given: dict[int, complex] = {}
        for n, value in entries:
            modes.index(n)
            if int(n) in given:
                raise ModelError(f"mode {n} given twice")
            given[int(n)] = complex(value)
        coeffs = np.zeros(modes.count, dtype=complex)
        for i, n in enumerate(modes.numbers):
            if n in given:
                coeffs[i] = given[n]
                partner = given.get(-n)
                if partner is not None and abs(partner - np.conj(given[n])) > 1e-14 * (
                    1.0 + abs(partner)
                ):
                    raise ModelError(
                        f"coefficients of modes {n} and {-n} are not complex conjugates"
                    )
            elif -n in given:
                coeffs[i] = np.conj(given[-n])
        return cls(modes, coeffs)

    def entries(self) -> list[tuple[int, float, float]]:
        return [
            (n, float(c.real), float(c.imag))
            for n, c in zip(self.modes.numbers, self.coefficients, strict=True)
        ]

    def is_conjugate_symmetric(self, tol: float = CONJUGATION_TOL) -> bool:
        if self.modes.count == 0:
            return True
        defect = np.max(np.abs(self.coefficients - np.conj(self.coefficients[self.modes.partners])))
        return bool(defect <= tol * max(1.0, float(np.max(np.abs(self.coefficients)))))

    def norm(self) -> float:
        return float(np.linalg.norm(self.coefficients))

    def grid_values(self, grid: Grid1D) -> RealArray:
        return from_mode_coefficients(self, grid)

    def scaled(self, factor: float) -> "TransverseCurrent":
        return TransverseCurrent(self.modes, factor * self.coefficients)

    def _check_same(self, other: "TransverseCurrent") -> None:
        if other.modes != self.modes:
            raise ModelError("currents live on different mode sets")

    def __add__(self, other: "TransverseCurrent") -> "TransverseCurrent":
        self._check_same(other)
        return TransverseCurrent(self.modes, self.coefficients + other.coefficients)

    def __sub__(self, other: "TransverseCurrent") -> "TransverseCurrent":
        self._check_same(other)
        return TransverseCurrent(self.modes, self.coefficients - other.coefficients)

    def __neg__(self) -> "TransverseCurrent":
        return TransverseCurrent(self.modes, -self.coefficients)


@dataclass(frozen=True, slots=True, eq=False)
class ClassicalField:
    modes: ModeSet
    amplitudes: ComplexArray

    def __post_init__(self) -> None:
        amps = _frozen(self.amplitudes, complex)
        if amps.shape != (self.modes.count,):
            raise ModelError(
                f"expected {self.modes.count} field amplitudes, got {amps.shape}"
            )
        if not np.all(np.isfinite(amps)):
            raise ModelError("field amplitudes must be finite")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def zeros(cls, modes: ModeSet) -> "ClassicalField":
        return cls(modes, np.zeros(modes.count, dtype=complex))

    def tilde(self) -> ComplexArray:
        """alpha_n + conj(alpha_{-n})."""
        if self.modes.count == 0:
            return np.zeros(0, dtype=complex)
        return self.amplitudes + np.conj(self.amplitudes[self.modes.partners])

    def grid_values(self, grid: Grid1D, *, dipole: bool = False) -> RealArray:
        if self.modes.count == 0:
            return np.zeros(grid.points)
        if not dipole:
            self.modes.check_resolved(grid)
        u = self.modes.mode_functions(grid, dipole=dipole)
        weights = self.modes.unit_prefactors * self.amplitudes
        return 2.0 * np.real(weights @ u)

    def coupled_values(self, grid: Grid1D, *, dipole: bool = False) -> RealArray:
        """Field felt by the electrons: the coupling scale times grid_values."""
        return self.modes.coupling * self.grid_values(grid, dipole=dipole)

    def as_current(self) -> TransverseCurrent:
        return TransverseCurrent(self.modes, self.amplitudes)

    def distance(self, other: "ClassicalField") -> float:
        return float(np.linalg.norm(self.amplitudes - other.amplitudes))


def to_mode_coefficients(
    field: RealArray, grid: Grid1D, modes: ModeSet, *, dipole: bool = False
) -> TransverseCurrent:
    values = np.asarray(field, dtype=float)
    if values.shape != (grid.points,):
        raise ModelError(f"field must have {grid.points} grid values, got {values.shape}")
    if not np.all(np.isfinite(values)):
        raise ModelError("field values must be finite")
    if modes.count == 0:
        return TransverseCurrent.zeros(modes)
    norm = (2.0 * modes.frequencies**3 * modes.length) ** -0.5
    if dipole:
        return TransverseCurrent(modes, norm * grid.integrate(values) + 0j)
    modes.check_resolved(grid)
    spectrum = np.fft.rfft(values)
    coeffs = np.empty(modes.count, dtype=complex)
    for i, n in enumerate(modes.numbers):
        c = spectrum[abs(n)]
        coeffs[i] = c if n > 0 else np.conj(c)
    return TransverseCurrent(modes, norm * grid.spacing * coeffs)


def from_mode_coefficients(coeffs: TransverseCurrent, grid: Grid1D) -> RealArray:
    if not coeffs.is_conjugate_symmetric():
        raise ModelError("current coefficients break conjugation symmetry")
    modes = coeffs.modes
    if modes.count == 0:
        return np.zeros(grid.points)
    modes.check_resolved(grid)
    weights = modes.frequencies**2 * modes.unit_prefactors * coeffs.coefficients
    return 2.0 * np.real(weights @ modes.mode_functions(grid))


def spectral_second_derivative(values: RealArray, grid: Grid1D) -> RealArray:
    spectrum = np.fft.rfft(np.asarray(values, dtype=float))
    k = 2.0 * np.pi * np.fft.rfftfreq(grid.points, d=grid.spacing)
    if grid.points % 2 == 0:
        spectrum[-1] = 0.0
    return np.fft.irfft(-(k**2) * spectrum, n=grid.points)


def solve_static_maxwell(source: TransverseCurrent, modes: ModeSet) -> ClassicalField:
    """Static -A'' = source; per-mode division by k_n^2 absorbed in the prefactors."""
    if source.modes != modes:
        raise ModelError("source current lives on a different mode set")
    return ClassicalField(modes, source.coefficients)


def b_to_current(b: TransverseCurrent) -> TransverseCurrent:
    return TransverseCurrent(b.modes, b.coefficients)


def mode_bilinear(field: ClassicalField, current: TransverseCurrent) -> float:
    """sum_n omega_n (alpha_n j_n^* + alpha_n^* j_n)."""
    w = field.modes.frequencies
    alpha = field.amplitudes
    j = current.coefficients
    return float(np.sum(w * 2.0 * np.real(alpha * np.conj(j))))


def grid_inner(grid: Grid1D, f: RealArray, g: RealArray) -> float:
    return grid.integrate(np.asarray(f) * np.asarray(g))
