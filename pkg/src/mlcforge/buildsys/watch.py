"""Event-based rebuilds realized as mtime polling plus re-digesting."""

from __future__ import annotations

import os
import time
from typing import Callable

DEFAULT_INTERVAL = 1.0


def _snapshot(root: str, patterns: tuple[str, ...]) -> dict[str, float]:
    import glob as globmod

    seen: dict[str, float] = {}
    for pattern in patterns + ("mlc.project", "**/*.csv"):
        for path in globmod.glob(os.path.join(root, pattern), recursive=True):
            if os.path.isfile(path):
                try:
                    seen[path] = os.stat(path).st_mtime
                except OSError:
                    continue
    return seen


def watch(
    root: str,
    patterns: tuple[str, ...],
    on_change: Callable[[], None],
    interval: float = DEFAULT_INTERVAL,
    max_iterations: int | None = None,
) -> int:
    """Poll file mtimes; call ``on_change`` when anything differs.

    Returns the number of change events fired. ``max_iterations`` bounds the
    loop for tests; interactive use runs until KeyboardInterrupt.
    """
    previous = _snapshot(root, patterns)
    fired = 0
    iterations = 0
    while max_iterations is None or iterations < max_iterations:
        iterations += 1
        try:
            time.sleep(interval)
        except KeyboardInterrupt:
            break
        current = _snapshot(root, patterns)
        if current != previous:
            previous = current
            fired += 1
            on_change()
    return fired
