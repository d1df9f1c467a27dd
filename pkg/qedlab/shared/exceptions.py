from typing import Any

__all__ = (
    "ConfigurationError",
    "DimensionBudgetError",
    "ModelError",
    "QEDLabError",
    "ScanAbortedError",
    "SolverConvergenceError",
)


class QEDLabError(Exception):
    pass


class ConfigurationError(QEDLabError):
    pass


class ModelError(QEDLabError):
    pass


class DimensionBudgetError(ModelError):
    def __init__(self, dimension: int, budget: int):
        super().__init__(
            f"composite dimension {dimension} exceeds budget {budget}"
        )
        self.dimension = dimension
        self.budget = budget


class SolverConvergenceError(QEDLabError):
    def __init__(self, message: str, *, best_residual: float, iterations: int = 0):
        super().__init__(f"{message} (best residual {best_residual:.3e})")
        self.best_residual = best_residual
        self.iterations = iterations


class ScanAbortedError(QEDLabError):
    def __init__(self, message: str, *, sample_index: int, spec: dict[str, Any]):
        super().__init__(f"scan aborted at sample {sample_index}: {message}")
        self.sample_index = sample_index
        self.spec = spec
