import os
from pathlib import Path
from typing import Any, Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .config_keys import ConfigKeys
from .constants import (
    CROSS_CHECK_MARGIN,
    DEFAULT_OUT_DIR,
    DEGENERACY_TOL,
    EQUIVALENCE_TOL,
    LANCZOS_MAX_ITERATIONS,
    MAX_DIMENSION,
    MIN_GRID_POINTS,
    RECOVERY_TOL,
    SCAN_COUNT,
    SCAN_EPS_EXT,
    SCAN_EPS_INT,
    SCF_DENSITY_TOL,
    SCF_FIELD_TOL,
    SCF_MAX_ITERATIONS,
    SCF_MIXING,
    SOLVER_TOL,
)
from .exceptions import ConfigurationError

__all__ = ("Config", "RunConfig", "parse_config", "parse_override")

_MISSING = object()

ENV_PREFIX = "QEDLAB_"

_ENV_TO_KEY = {
    f"{ENV_PREFIX}{name}": value
    for name, value in vars(ConfigKeys).items()
    if not name.startswith("_") and isinstance(value, str)
}


def _set_dotted(config: dict[str, Any], dotted: str, value: Any) -> None:
    cur: dict[str, Any] = config
    parts = dotted.split(".")
    for key in parts[:-1]:
        nxt = cur.get(key)
        if not isinstance(nxt, dict):
            nxt = {}
            cur[key] = nxt
        cur = nxt
    cur[parts[-1]] = value


def _get_dotted(config: dict[str, Any], dotted: str) -> Any:
    cur: Any = config
    for key in dotted.split("."):
        if not isinstance(cur, dict):
            return None
        cur = cur.get(key)
    return cur


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class InteractionConfig(_Section):
    strength: float = 0.0
    softening: float = 1.0

    @field_validator("strength")
    @classmethod
    def _validate_strength(cls, v: float) -> float:
        if v < 0:
            raise ValueError("interaction strength must be >= 0")
        return v

    @field_validator("softening")
    @classmethod
    def _validate_softening(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("interaction softening must be > 0")
        return v


class ModelConfig(_Section):
    length: float = 10.0
    points: int = 16
    electrons: int = 1
    modes: list[int] = Field(default_factory=lambda: [1])
    coupling: float = 0.05
    fock_cutoff: int = 6
    dipole: bool = False
    interaction: InteractionConfig = InteractionConfig()

    @field_validator("length")
    @classmethod
    def _validate_length(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("length must be > 0")
        return v

    @field_validator("points")
    @classmethod
    def _validate_points(cls, v: int) -> int:
        if v < MIN_GRID_POINTS:
            raise ValueError(f"points must be >= {MIN_GRID_POINTS}")
        return v

    @field_validator("electrons")
    @classmethod
    def _validate_electrons(cls, v: int) -> int:
        if v not in (1, 2):
            raise ValueError("electrons must be 1 or 2")
        return v

    @field_validator("modes")
    @classmethod
    def _validate_modes(cls, v: list[int]) -> list[int]:
        if any(n <= 0 for n in v):
            raise ValueError("list positive mode numbers only; -n is added automatically")
        if len(set(v)) != len(v):
            raise ValueError("mode numbers must be unique")
        return sorted(v)

    @field_validator("coupling")
    @classmethod
    def _validate_coupling(cls, v: float) -> float:
        if v < 0:
            raise ValueError("coupling must be >= 0")
        return v

    @field_validator("fock_cutoff")
    @classmethod
    def _validate_fock_cutoff(cls, v: int) -> int:
        if v < 1:
            raise ValueError("fock cutoff must be >= 1")
        return v


class PotentialConfig(_Section):
    samples: list[float] | None = None
    terms: list[tuple[int, float, float]] = Field(default_factory=list)

    @field_validator("terms")
    @classmethod
    def _validate_terms(cls, v: list[tuple[int, float, float]]) -> list[tuple[int, float, float]]:
        if any(m <= 0 for m, _, _ in v):
            raise ValueError("potential harmonics must be >= 1")
        return v


class ExternalConfig(_Section):
    potential: PotentialConfig = PotentialConfig()
    current: list[tuple[int, float, float]] = Field(default_factory=list)
    vector_potential: list[tuple[int, float, float]] = Field(default_factory=list)


class EigenConfig(_Section):
    tol: float = SOLVER_TOL
    max_iterations: int = LANCZOS_MAX_ITERATIONS
    ncv: int | None = None
    degeneracy_tol: float = DEGENERACY_TOL
    max_dimension: int = MAX_DIMENSION

    @field_validator("tol", "degeneracy_tol")
    @classmethod
    def _validate_tol(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("tolerance must be > 0")
        return v

    @field_validator("max_iterations", "max_dimension")
    @classmethod
    def _validate_positive(cls, v: int) -> int:
        if v <= 0:
            raise ValueError("must be > 0")
        return v


class SCFSection(_Section):
    mixing: float = SCF_MIXING
    anderson_depth: int = 0
    max_iterations: int = SCF_MAX_ITERATIONS
    density_tol: float = SCF_DENSITY_TOL
    field_tol: float = SCF_FIELD_TOL
    initial_field: Literal["zero", "external"] = "zero"
    xc: Literal["mean-field"] = "mean-field"

    @field_validator("mixing")
    @classmethod
    def _validate_mixing(cls, v: float) -> float:
        if not 0.0 < v <= 1.0:
            raise ValueError("mixing must lie in (0, 1]")
        return v

    @field_validator("anderson_depth")
    @classmethod
    def _validate_depth(cls, v: int) -> int:
        if v < 0:
            raise ValueError("anderson depth must be >= 0")
        return v

    @field_validator("density_tol", "field_tol")
    @classmethod
    def _validate_tol(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("tolerance must be > 0")
        return v


class SolverConfig(_Section):
    eigen: EigenConfig = EigenConfig()
    scf: SCFSection = SCFSection()


class ScanConfig(_Section):
    count: int = SCAN_COUNT
    strategy: Literal["smooth", "potential", "current"] = "smooth"
    eps_ext: float = SCAN_EPS_EXT
    eps_int: float = SCAN_EPS_INT
    cross_margin: float = CROSS_CHECK_MARGIN
    recovery_tol: float = RECOVERY_TOL

    @field_validator("count")
    @classmethod
    def _validate_count(cls, v: int) -> int:
        if v < 1:
            raise ValueError("scan count must be >= 1")
        return v

    @field_validator("eps_ext", "eps_int", "recovery_tol")
    @classmethod
    def _validate_tol(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("tolerance must be > 0")
        return v


class DisplacementConfig(_Section):
    tolerance: float = EQUIVALENCE_TOL


class RunSection(_Section):
    seed: int = 0
    out_dir: str = DEFAULT_OUT_DIR
    workers: int = 1
    scan: ScanConfig = ScanConfig()
    cutoffs: list[int] = Field(default_factory=list)
    displacement: DisplacementConfig = DisplacementConfig()

    @field_validator("workers")
    @classmethod
    def _validate_workers(cls, v: int) -> int:
        if v < 1:
            raise ValueError("workers must be >= 1")
        return v

    @field_validator("cutoffs")
    @classmethod
    def _validate_cutoffs(cls, v: list[int]) -> list[int]:
        if any(c < 1 for c in v):
            raise ValueError("fock cutoffs must be >= 1")
        return v


class LogConfig(_Section):
    path: str = "logs/qedlab.log"
    level: str = "INFO"
    dump: bool = False


class RunConfig(_Section):
    model: ModelConfig = ModelConfig()
    external: ExternalConfig = ExternalConfig()
    solver: SolverConfig = SolverConfig()
    run: RunSection = RunSection()
    log: LogConfig = LogConfig()

    def resolved(self) -> dict[str, Any]:
        """Every setting, defaults included, as plain JSON-compatible data."""
        return self.model_dump(mode="json")


def _format_validation_error(e: ValidationError) -> str:
    lines = []
    for err in e.errors():
        loc = ".".join(str(part) for part in err["loc"]) or "<root>"
        lines.append(f"{loc}: {err['msg']}")
    return "invalid configuration: " + "; ".join(lines)


def _validate_model(config: dict[str, Any]) -> RunConfig:
    try:
        return RunConfig.model_validate(config)
    except ValidationError as e:
        raise ConfigurationError(_format_validation_error(e)) from e


def _load_yaml_text(raw: str, source: str = "<string>") -> dict[str, Any]:
    try:
        loaded = yaml.safe_load(raw) or {}
    except yaml.YAMLError as e:
        raise ConfigurationError(f"YAML config parse error in {source}: {e}") from e
    if not isinstance(loaded, dict):
        raise ConfigurationError("config file root node must be a mapping")
    return loaded


def parse_config(text: str) -> RunConfig:
    return _validate_model(_load_yaml_text(text))


def parse_override(item: str) -> tuple[str, Any]:
    key, sep, raw = item.partition("=")
    key = key.strip()
    if not sep or not key:
        raise ConfigurationError(f"override must look like key=value, got {item!r}")
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as e:
        raise ConfigurationError(f"cannot parse override value for {key}: {e}") from e
    return key, value


class Config:
    def __init__(self, config_path: str | None = None):
        self.config_path = config_path or os.environ.get("QEDLAB_CONFIG")
        self._model: RunConfig | None = None
        self.data: dict[str, Any] = {}

    @property
    def model(self) -> RunConfig:
        if self._model is None:
            raise ConfigurationError("config not loaded")
        return self._model

    def load(self, overrides: list[str] | tuple[str, ...] = ()) -> RunConfig:
        merged = self._load_yaml_config(Path(self.config_path)) if self.config_path else {}
        self._apply_env_overrides(merged)
        for item in overrides:
            key, value = parse_override(item)
            _set_dotted(merged, key, value)
        self._model = _validate_model(merged)
        self.data = self._model.model_dump()
        return self._model

    @staticmethod
    def _load_yaml_config(config_path: Path) -> dict[str, Any]:
        if not config_path.exists():
            raise ConfigurationError(f"config file not found: {config_path}")
        if not config_path.is_file():
            raise ConfigurationError(f"config path is not a file: {config_path}")
        try:
            raw = config_path.read_text(encoding="utf-8")
        except UnicodeDecodeError as e:
            raise ConfigurationError(f"Config file decode error: {e}") from e
        except OSError as e:
            raise ConfigurationError(f"Config file read error: {e}") from e
        return _load_yaml_text(raw, str(config_path))

    @staticmethod
    def _apply_env_overrides(config: dict[str, Any]) -> None:
        for env_name, key in _ENV_TO_KEY.items():
            if (env_value := os.environ.get(env_name)) is None:
                continue
            try:
                value = yaml.safe_load(env_value)
            except yaml.YAMLError as e:
                raise ConfigurationError(f"cannot parse {env_name}: {e}") from e
            _set_dotted(config, key, value)

    def set(self, key: str, value: Any) -> None:
        """Apply a late override (CLI flags) and re-validate."""
        data = self.model.model_dump()
        _set_dotted(data, key, value)
        self._model = _validate_model(data)
        self.data = self._model.model_dump()

    def get(self, key: str, default: Any = _MISSING) -> Any:
        if self._model is None:
            if default is not _MISSING:
                return default
            return None
        value = _get_dotted(self.data, key)
        if value is None and default is not _MISSING:
            return default
        return value

    def get_required(self, key: str, desc: str | None = None) -> Any:
        value = self.get(key)
        if value is None:
            raise ConfigurationError(f"missing required config: {desc or key}")
        return value
