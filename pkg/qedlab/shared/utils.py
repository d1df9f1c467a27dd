import hashlib
import json
import os
import platform
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import Any, TypeVar

import anyio
import anyio.to_thread
import psutil
from loguru import logger

__all__ = (
    "file_sha256",
    "format_duration_hms",
    "get_memory_usage",
    "get_system_info",
    "maybe_log_dump",
    "run_parallel",
)

T = TypeVar("T")


def get_system_info() -> dict[str, Any]:
    return {
        "platform": platform.platform(),
        "python_version": platform.python_version(),
        "cpu_count": psutil.cpu_count(),
        "memory_total_gb": round(psutil.virtual_memory().total / (1024**3), 2),
        "process_id": os.getpid(),
    }


def get_memory_usage() -> dict[str, Any]:
    process = psutil.Process()
    memory_info = process.memory_info()
    mb_factor = 1024 * 1024
    return {
        "rss_mb": round(memory_info.rss / mb_factor, 2),
        "vms_mb": round(memory_info.vms / mb_factor, 2),
        "percent": process.memory_percent(),
    }


def format_duration_hms(seconds: float) -> str:
    total = int(max(0, seconds))
    hours, rem = divmod(total, 3600)
    minutes, seconds = divmod(rem, 60)
    if hours > 0:
        return f"{hours}:{minutes:02d}:{seconds:02d}"
    return f"{minutes}:{seconds:02d}"


def maybe_log_dump(enabled: bool, *, kind: str, payload: Any) -> None:
    if not enabled:
        return
    logger.opt(lazy=True).debug(
        "{} dump: {}",
        lambda: kind,
        lambda: json.dumps(payload, ensure_ascii=False, indent=2, default=str),
    )


def file_sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _first_leaf(group: BaseExceptionGroup) -> BaseException:
    exc: BaseException = group
    while isinstance(exc, BaseExceptionGroup):
        exc = exc.exceptions[0]
    return exc


def run_parallel(jobs: Sequence[Callable[[], T]], *, workers: int = 1) -> list[T]:
    """Run blocking jobs on worker threads; results keep the order of `jobs`."""
    if workers <= 1 or len(jobs) <= 1:
        return [job() for job in jobs]
    results: list[Any] = [None] * len(jobs)

    async def _main() -> None:
        limiter = anyio.CapacityLimiter(workers)

        async def _one(index: int, job: Callable[[], T]) -> None:
            results[index] = await anyio.to_thread.run_sync(job, limiter=limiter)

        async with anyio.create_task_group() as tg:
            for index, job in enumerate(jobs):
                tg.start_soon(_one, index, job)

    try:
        anyio.run(_main)
    except BaseExceptionGroup as eg:
        raise _first_leaf(eg) from None
    return results
