from dataclasses import dataclass, field
from itertools import combinations, product
from math import prod

import numpy as np
import scipy.sparse as sp
from numpy.typing import NDArray

from ..shared.exceptions import ModelError

__all__ = ("ElectronBasis", "FockSpace")


@dataclass(frozen=True, slots=True)
class ElectronBasis:
    """Spinless fermion configurations on lattice sites, ordered tuples i < j."""

    sites: int
    electrons: int
    configs: tuple[tuple[int, ...], ...] = field(init=False, repr=False)
    _index: dict[tuple[int, ...], int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.electrons not in (1, 2):
            raise ModelError("number of electrons must be 1 or 2")
        if self.sites < self.electrons:
            raise ModelError("more electrons than lattice sites")
        configs = tuple(combinations(range(self.sites), self.electrons))
        object.__setattr__(self, "configs", configs)
        object.__setattr__(self, "_index", {c: i for i, c in enumerate(configs)})

    @property
    def dimension(self) -> int:
        return len(self.configs)

    def occupations(self) -> NDArray[np.float64]:
        occ = np.zeros((self.dimension, self.sites))
        for i, config in enumerate(self.configs):
            occ[i, list(config)] = 1.0
        return occ

    def _moves(self, config: tuple[int, ...], slot: int, target: int):
        """Replace the particle in `slot` by one at `target`; (index, sign) or None."""
        rest = config[:slot] + config[slot + 1 :]
        if target in rest:
            return None
        # moving past the other particle flips the sign
        crossings = sum(1 for r in rest if (r < target) != (r < config[slot]))
        new = tuple(sorted(rest + (target,)))
        return self._index[new], -1.0 if crossings % 2 else 1.0

    def lift(self, op: sp.spmatrix | NDArray) -> sp.csr_matrix:
        """Second-quantized one-body operator sum_ab op[a, b] c_a^+ c_b."""
        single = sp.csc_matrix(op)
        if single.shape != (self.sites, self.sites):
            raise ModelError("one-body operator shape does not match the lattice")
        if self.electrons == 1:
            return single.tocsr()
        rows: list[int] = []
        cols: list[int] = []
        vals: list[complex] = []
        for col, config in enumerate(self.configs):
            for slot, site in enumerate(config):
                start, stop = single.indptr[site], single.indptr[site + 1]
                for target, value in zip(
                    single.indices[start:stop], single.data[start:stop], strict=True
                ):
                    move = self._moves(config, slot, int(target))
                    if move is None:
                        continue
                    row, sign = move
                    rows.append(row)
                    cols.append(col)
                    vals.append(sign * value)
        return sp.csr_matrix(
            (np.asarray(vals, dtype=complex), (rows, cols)),
            shape=(self.dimension, self.dimension),
        )

    def lift_diagonal(self, values: NDArray) -> NDArray:
        """Diagonal of the lift of diag(values)."""
        return self.occupations() @ np.asarray(values)

    def pair_diagonal(self, pair: NDArray) -> NDArray[np.float64]:
        """Diagonal of sum_{k<l} pair[x_k, x_l] in this basis."""
        out = np.zeros(self.dimension)
        if self.electrons == 2:
            for i, (a, b) in enumerate(self.configs):
                out[i] = pair[a, b]
        return out

    def one_body_matrix(self, weights: NDArray) -> NDArray[np.complex128]:
        """rho[a, b] = sum_{e,e'} lift(|a><b|)[e, e'] * weights[e, e']."""
        rho = np.zeros((self.sites, self.sites), dtype=complex)
        for col, config in enumerate(self.configs):
            for slot, site in enumerate(config):
                for target in range(self.sites):
                    move = self._moves(config, slot, target)
                    if move is None:
                        continue
                    row, sign = move
                    rho[target, site] += sign * weights[row, col]
        return rho


@dataclass(frozen=True, slots=True)
class FockSpace:
    """Product of per-mode truncated oscillator spaces, last mode fastest."""

    modes: int
    cutoff: int

    def __post_init__(self) -> None:
        if self.cutoff < 1:
            raise ModelError("fock cutoff n_max must be >= 1")

    @property
    def levels(self) -> int:
        return self.cutoff + 1

    @property
    def dimension(self) -> int:
        return self.levels**self.modes

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.levels,) * self.modes

    def single_annihilation(self) -> sp.csr_matrix:
        return sp.diags(np.sqrt(np.arange(1, self.levels)), 1, format="csr", dtype=complex)

    def annihilation(self, mode: int) -> sp.csr_matrix:
        factors = [sp.identity(self.levels, format="csr", dtype=complex)] * self.modes
        factors[mode] = self.single_annihilation()
        out = sp.identity(1, format="csr", dtype=complex)
        for f in factors:
            out = sp.kron(out, f, format="csr")
        return out

    def identity(self) -> sp.csr_matrix:
        return sp.identity(self.dimension, format="csr", dtype=complex)

    def number_diagonal(self, mode: int) -> NDArray[np.float64]:
        levels = np.arange(self.levels, dtype=float)
        shape = [1] * self.modes
        shape[mode] = self.levels
        return np.broadcast_to(levels.reshape(shape), self.shape).reshape(-1).copy()

    def occupation_states(self):
        return product(range(self.levels), repeat=self.modes)

    def size_of(self, electron_dim: int) -> int:
        return electron_dim * prod(self.shape)
