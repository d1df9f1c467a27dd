import json
import threading

import numpy as np
import pandas as pd
import pytest

from qedlab.output.artifacts import (
    OBSERVABLE_COLUMNS,
    RunManifest,
    to_jsonable,
    write_distances_csv,
    write_json,
    write_observables_csv,
)
from qedlab.shared.utils import file_sha256, format_duration_hms, run_parallel


def test_complex_values_become_pairs():
    payload = {"z": 1.5 - 2j, "arr": np.array([1j, 2.0]), "flag": np.bool_(True), 3: np.int64(7)}
    assert to_jsonable(payload) == {
        "z": [1.5, -2.0],
        "arr": [[0.0, 1.0], [2.0, 0.0]],
        "flag": True,
        "3": 7,
    }


def test_json_is_written_with_sorted_keys(tmp_path):
    path = write_json(tmp_path / "nested" / "out.json", {"b": 1, "a": 2})
    text = path.read_text(encoding="utf-8")
    assert text.index('"a"') < text.index('"b"')
    assert text.endswith("\n")


def test_observables_csv_has_the_fixed_header(tmp_path):
    x = np.linspace(0.0, 1.0, 4)
    path = write_observables_csv(tmp_path / "obs.csv", x, -x, 2 * x, np.zeros(4))
    frame = pd.read_csv(path)
    assert tuple(frame.columns) == OBSERVABLE_COLUMNS
    np.testing.assert_allclose(frame["n"], -x)


def test_distances_csv_lists_upper_triangle_pairs(tmp_path):
    ext = np.array([[0.0, 1.0, 2.0], [1.0, 0.0, 3.0], [2.0, 3.0, 0.0]])
    frame = pd.read_csv(write_distances_csv(tmp_path / "d.csv", ext, ext / 10))
    assert list(zip(frame["i"], frame["j"], strict=True)) == [(0, 1), (0, 2), (1, 2)]
    np.testing.assert_allclose(frame["d_int"], [0.1, 0.2, 0.3])


def test_manifest_records_artifacts_and_failures(tmp_path):
    artifact = write_json(tmp_path / "z.json", {"k": 1})
    other = write_json(tmp_path / "a.json", {"k": 2})
    manifest = RunManifest(command="exact", seed=3, config={"run": {"seed": 3}})
    manifest.add_artifact(artifact)
    manifest.add_artifact(other)
    manifest.fail("config_error", "model: bad")
    payload = json.loads(manifest.write(tmp_path).read_text(encoding="utf-8"))
    assert payload["status"] == "config_error"
    assert payload["error"] == "model: bad"
    assert payload["seed"] == 3
    assert list(payload["artifacts"]) == ["a.json", "z.json"]
    assert payload["artifacts"]["z.json"] == file_sha256(artifact)
    assert {"version", "wall_time_s", "system", "config", "results"} <= set(payload)


def test_run_parallel_keeps_job_order():
    seen: set[int] = set()
    lock = threading.Lock()

    def job(k: int):
        def _run() -> int:
            with lock:
                seen.add(threading.get_ident())
            return k * k

        return _run

    assert run_parallel([job(k) for k in range(6)], workers=2) == [k * k for k in range(6)]
    assert run_parallel([job(k) for k in range(3)], workers=1) == [0, 1, 4]


def test_run_parallel_raises_the_job_exception():
    def boom() -> int:
        raise KeyError("missing")

    with pytest.raises(KeyError):
        run_parallel([lambda: 1, boom], workers=2)


@pytest.mark.parametrize(
    ("seconds", "expected"), [(0, "0:00"), (65.9, "1:05"), (3725, "1:02:05"), (-4, "0:00")]
)
def test_format_duration_hms(seconds, expected):
    assert format_duration_hms(seconds) == expected
