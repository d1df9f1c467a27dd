from collections import deque
from typing import Protocol

import numpy as np
import scipy.linalg as sla
from loguru import logger
from numpy.typing import NDArray

from ..shared.constants import SCF_ANDERSON_DEPTH, SCF_MIXING
from ..shared.exceptions import ModelError

__all__ = ("AndersonMixer", "LinearMixer", "Mixer", "make_mixer")


class Mixer(Protocol):
    beta: float

    def mix(self, x_in: NDArray[np.float64], x_out: NDArray[np.float64]) -> NDArray[np.float64]: ...

    def reset(self) -> None: ...


def _check_beta(beta: float) -> None:
    if not 0.0 < beta <= 1.0:
        raise ModelError("mixing parameter must lie in (0, 1]")


class LinearMixer:
    def __init__(self, beta: float = SCF_MIXING):
        _check_beta(beta)
        self.beta = beta

    def mix(self, x_in: NDArray[np.float64], x_out: NDArray[np.float64]) -> NDArray[np.float64]:
        return (1.0 - self.beta) * x_in + self.beta * x_out

    def reset(self) -> None:
        pass


class AndersonMixer:
    """Pulay/Anderson extrapolation over the last `depth` input/residual pairs."""

    def __init__(self, beta: float = SCF_MIXING, depth: int = SCF_ANDERSON_DEPTH):
        _check_beta(beta)
        if depth < 1:
            raise ModelError("anderson depth must be >= 1")
        self.beta = beta
        self.depth = depth
        self._inputs: deque[NDArray[np.float64]] = deque(maxlen=depth)
        self._residuals: deque[NDArray[np.float64]] = deque(maxlen=depth)

    def reset(self) -> None:
        self._inputs.clear()
        self._residuals.clear()

    def _coefficients(self) -> NDArray[np.float64] | None:
        size = len(self._residuals)
        b = -np.ones((size + 1, size + 1))
        b[size, size] = 0.0
        for i, ri in enumerate(self._residuals):
            for j, rj in enumerate(self._residuals):
                b[i, j] = float(ri @ rj)
        rhs = np.zeros(size + 1)
        rhs[size] = -1.0
        try:
            c = sla.solve(b, rhs)
        except (sla.LinAlgError, ValueError):
            return None
        if not np.all(np.isfinite(c)):
            return None
        return c[:size]

    def mix(self, x_in: NDArray[np.float64], x_out: NDArray[np.float64]) -> NDArray[np.float64]:
        self._inputs.append(np.array(x_in, dtype=float))
        self._residuals.append(np.asarray(x_out, dtype=float) - x_in)
        if len(self._residuals) == 1:
            return (1.0 - self.beta) * x_in + self.beta * x_out
        c = self._coefficients()
        if c is None:
            logger.debug("Anderson history singular; restarting from linear mixing")
            self.reset()
            return (1.0 - self.beta) * x_in + self.beta * x_out
        x_opt = sum(ci * xi for ci, xi in zip(c, self._inputs, strict=True))
        r_opt = sum(ci * ri for ci, ri in zip(c, self._residuals, strict=True))
        return np.asarray(x_opt + self.beta * r_opt, dtype=float)


def make_mixer(beta: float = SCF_MIXING, anderson_depth: int = 0) -> Mixer:
    if anderson_depth > 0:
        return AndersonMixer(beta, anderson_depth)
    return LinearMixer(beta)
