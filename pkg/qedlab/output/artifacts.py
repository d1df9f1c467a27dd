import json
import time
from dataclasses import dataclass, field
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
from numpy.typing import NDArray

from ..shared.constants import CSV_FLOAT_FORMAT
from ..shared.utils import file_sha256, get_system_info

__all__ = (
    "OBSERVABLE_COLUMNS",
    "RunManifest",
    "package_version",
    "to_jsonable",
    "write_distances_csv",
    "write_history_csv",
    "write_json",
    "write_observables_csv",
    "write_table_csv",
)

OBSERVABLE_COLUMNS = ("x", "n", "J", "A")


def package_version() -> str:
    try:
        return version("qedlab")
    except PackageNotFoundError:
        return "0+unknown"


def to_jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, list | tuple):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, complex | np.complexfloating):
        return [float(value.real), float(value.imag)]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def write_json(path: Path, payload: dict[str, Any]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(to_jsonable(payload), sort_keys=True, indent=2, ensure_ascii=False)
    path.write_text(text + "\n", encoding="utf-8")
    return path


def write_table_csv(path: Path, frame: pd.DataFrame) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)
    return path


def write_observables_csv(
    path: Path,
    x: NDArray[np.float64],
    n: NDArray[np.float64],
    current: NDArray[np.float64],
    a: NDArray[np.float64],
) -> Path:
    frame = pd.DataFrame(dict(zip(OBSERVABLE_COLUMNS, (x, n, current, a), strict=True)))
    return write_table_csv(path, frame)


def write_history_csv(path: Path, rows: list[dict[str, Any]]) -> Path:
    columns = ["iteration", "density_residual", "field_residual", "energy", "double_counting_defect"]
    return write_table_csv(path, pd.DataFrame(rows, columns=columns))


def write_distances_csv(
    path: Path, external: NDArray[np.float64], internal: NDArray[np.float64]
) -> Path:
    count = external.shape[0]
    rows = [
        {"i": i, "j": j, "d_ext": external[i, j], "d_int": internal[i, j]}
        for i in range(count)
        for j in range(i + 1, count)
    ]
    return write_table_csv(path, pd.DataFrame(rows, columns=["i", "j", "d_ext", "d_int"]))


@dataclass
class RunManifest:
    command: str
    seed: int
    config: dict[str, Any]
    started: float = field(default_factory=time.perf_counter)
    status: str = "ok"
    error: str | None = None
    results: dict[str, Any] = field(default_factory=dict)
    artifacts: dict[str, str] = field(default_factory=dict)

    def add_artifact(self, path: Path) -> None:
        self.artifacts[path.name] = file_sha256(path)

    def fail(self, status: str, error: str) -> None:
        self.status = status
        self.error = error

    def to_dict(self) -> dict[str, Any]:
        return {
            "command": self.command,
            "version": package_version(),
            "seed": self.seed,
            "status": self.status,
            "error": self.error,
            "wall_time_s": time.perf_counter() - self.started,
            "system": get_system_info(),
            "config": self.config,
            "results": self.results,
            "artifacts": dict(sorted(self.artifacts.items())),
        }

    def write(self, out_dir: Path) -> Path:
        return write_json(out_dir / "manifest.json", self.to_dict())
