import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from loguru import logger
from numpy.typing import NDArray

from ..shared.constants import (
    DEGENERACY_TOL,
    DENSE_FALLBACK_DIM,
    LANCZOS_MAX_ITERATIONS,
    LANCZOS_SEED,
    MAX_DIMENSION,
    NORM_TOL,
    SOLVER_TOL,
)
from ..shared.exceptions import ModelError, SolverConvergenceError
from .hamiltonian import HamiltonianSpec, HamiltonianTerms, assemble_terms

__all__ = (
    "CompositeState",
    "ExactSolution",
    "GroundStateResult",
    "SolverOptions",
    "ground_state",
    "solve_exact",
)


@dataclass(frozen=True, slots=True)
class SolverOptions:
    tol: float = SOLVER_TOL
    max_iterations: int = LANCZOS_MAX_ITERATIONS
    ncv: int | None = None
    degeneracy_tol: float = DEGENERACY_TOL
    seed: int = LANCZOS_SEED
    max_dimension: int = MAX_DIMENSION
    levels: int = 2

    def __post_init__(self) -> None:
        if self.levels < 1:
            raise ModelError("solver must return at least one level")
        if self.tol <= 0:
            raise ModelError("solver tolerance must be > 0")
        if self.max_iterations <= 0:
            raise ModelError("solver max iterations must be > 0")
        if self.degeneracy_tol < 0:
            raise ModelError("degeneracy tolerance must be >= 0")


@dataclass(frozen=True, slots=True, eq=False)
class CompositeState:
    amplitudes: NDArray[np.complex128]
    electron_dim: int
    photon_shape: tuple[int, ...]

    def __post_init__(self) -> None:
        amps = np.array(self.amplitudes, dtype=complex, copy=True).reshape(-1)
        if amps.size != self.electron_dim * math.prod(self.photon_shape):
            raise ModelError("state length does not match the composite basis")
        if abs(np.linalg.norm(amps) - 1.0) > NORM_TOL:
            raise ModelError("composite state must be normalized")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def normalized(
        cls, vector: NDArray, electron_dim: int, photon_shape: tuple[int, ...]
    ) -> "CompositeState":
        vec = np.asarray(vector, dtype=complex).reshape(-1)
        return cls(vec / np.linalg.norm(vec), electron_dim, photon_shape)

    @classmethod
    def for_terms(cls, vector: NDArray, terms: HamiltonianTerms) -> "CompositeState":
        return cls.normalized(vector, terms.basis.dimension, terms.fock.shape)

    @property
    def photon_dim(self) -> int:
        return math.prod(self.photon_shape)

    def matrix(self) -> NDArray[np.complex128]:
        return self.amplitudes.reshape(self.electron_dim, self.photon_dim)

    def expectation(self, op: sp.spmatrix) -> complex:
        return complex(np.vdot(self.amplitudes, op @ self.amplitudes))

    def overlap(self, other: "CompositeState") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def mode_tails(self) -> NDArray[np.float64]:
        """Occupation probability of the top Fock level for each mode."""
        if not self.photon_shape:
            return np.zeros(0)
        probs = np.abs(self.amplitudes.reshape((self.electron_dim, *self.photon_shape))) ** 2
        tails = []
        for m in range(len(self.photon_shape)):
            axes = tuple(a for a in range(probs.ndim) if a != m + 1)
            tails.append(probs.sum(axis=axes)[-1])
        return np.asarray(tails)


@dataclass(frozen=True, slots=True, eq=False)
class GroundStateResult:
    energy: float
    state: CompositeState
    first_excited: float
    gap: float
    iterations: int
    residual: float
    truncation_tail: float
    degenerate: bool
    levels: tuple[float, ...] = ()

    def summary(self) -> dict[str, float | int | bool]:
        return {
            "energy": self.energy,
            "first_excited": self.first_excited,
            "gap": self.gap,
            "iterations": self.iterations,
            "residual": self.residual,
            "truncation_tail": self.truncation_tail,
            "degenerate": self.degenerate,
            "levels": list(self.levels),
        }


def _start_vector(dim: int, seed: int) -> NDArray[np.complex128]:
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v0 / np.linalg.norm(v0)


def _lowest_pair(
    h: sp.spmatrix, opts: SolverOptions
) -> tuple[NDArray[np.float64], NDArray[np.complex128], int]:
    dim = h.shape[0]
    if dim <= DENSE_FALLBACK_DIM:
        dense = h.toarray() if sp.issparse(h) else np.asarray(h)
        values, vectors = sla.eigh(dense)
        return values[: opts.levels], vectors[:, : opts.levels].astype(complex), 1
    calls = 0

    def matvec(x: NDArray) -> NDArray:
        nonlocal calls
        calls += 1
        return h @ x

    op = spla.LinearOperator(h.shape, matvec=matvec, dtype=complex)
    try:
        values, vectors = spla.eigsh(
            op,
            k=min(opts.levels, dim - 1),
            which="SA",
            v0=_start_vector(dim, opts.seed),
            ncv=opts.ncv,
            maxiter=opts.max_iterations,
            tol=0,
        )
    except spla.ArpackNoConvergence as e:
        best = math.inf
        for value, vec in zip(e.eigenvalues, e.eigenvectors.T, strict=False):
            best = min(best, float(np.linalg.norm(h @ vec - value * vec)))
        raise SolverConvergenceError(
            "Lanczos eigensolver did not converge", best_residual=best, iterations=calls
        ) from e
    order = np.argsort(values)
    return values[order], vectors[:, order], calls


def ground_state(
    h: sp.spmatrix,
    opts: SolverOptions | None = None,
    *,
    electron_dim: int | None = None,
    photon_shape: tuple[int, ...] = (),
) -> GroundStateResult:
    opts = opts or SolverOptions()
    dim = h.shape[0]
    values, vectors, iterations = _lowest_pair(h, opts)
    vec = vectors[:, 0] / np.linalg.norm(vectors[:, 0])
    energy = float(values[0])
    residual = float(np.linalg.norm(h @ vec - energy * vec))
    if residual > opts.tol:
        raise SolverConvergenceError(
            f"ground-state residual above tolerance {opts.tol:.1e}",
            best_residual=residual,
            iterations=iterations,
        )
    first = float(values[1]) if len(values) > 1 else math.inf
    gap = max(0.0, first - energy)
    state = CompositeState.normalized(
        vec, electron_dim if electron_dim is not None else dim, photon_shape
    )
    tails = state.mode_tails()
    tail = float(tails.max()) if tails.size else 0.0
    degenerate = gap < opts.degeneracy_tol
    if degenerate:
        logger.warning(f"Degenerate ground state: gap={gap:.3e}")
    logger.debug(
        f"Ground state: E0={energy:.12f} gap={gap:.3e} residual={residual:.2e} "
        f"tail={tail:.2e} matvecs={iterations}"
    )
    return GroundStateResult(
        energy=energy,
        state=state,
        first_excited=first,
        gap=gap,
        iterations=iterations,
        residual=residual,
        truncation_tail=tail,
        degenerate=degenerate,
        levels=tuple(float(v) for v in values),
    )


@dataclass(frozen=True, slots=True, eq=False)
class ExactSolution:
    terms: HamiltonianTerms
    ground: GroundStateResult

    @property
    def spec(self) -> HamiltonianSpec:
        return self.terms.spec

    @property
    def state(self) -> CompositeState:
        return self.ground.state


def solve_exact(spec: HamiltonianSpec, opts: SolverOptions | None = None) -> ExactSolution:
    opts = opts or SolverOptions()
    terms = assemble_terms(spec, max_dimension=opts.max_dimension)
    ground = ground_state(
        terms.total, opts, electron_dim=terms.basis.dimension, photon_shape=terms.fock.shape
    )
    return ExactSolution(terms=terms, ground=ground)
