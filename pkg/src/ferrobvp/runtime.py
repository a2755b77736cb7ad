"""Process-level runtime knobs."""

from __future__ import annotations

import os

__all__ = ["worker_count"]


def worker_count(default: int = 4) -> int:
    """Worker cap for concurrent computations; FERROBVP_THREADS overrides."""
    raw = os.environ.get("FERROBVP_THREADS")
    if raw is None:
        return max(1, min(default, os.cpu_count() or 1))
    try:
        value = int(raw)
    except ValueError as exc:
        raise ValueError(f"FERROBVP_THREADS must be an integer, got {raw!r}") from exc
    return max(1, value)
