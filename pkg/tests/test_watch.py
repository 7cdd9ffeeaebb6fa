from __future__ import annotations

import os
import threading
import time

from mlcforge.buildsys import watch


def test_watch_fires_on_mtime_change(tmp_path):
    target = tmp_path / "model.nal"
    target.write_text("component A { }")
    events = []

    def toucher():
        time.sleep(0.25)
        os.utime(target, (time.time() + 5, time.time() + 5))

    thread = threading.Thread(target=toucher)
    thread.start()
    fired = watch(str(tmp_path), ("*.nal",), lambda: events.append(1), interval=0.1, max_iterations=15)
    thread.join()
    assert fired >= 1
    assert len(events) == fired


def test_watch_quiet_when_nothing_changes(tmp_path):
    (tmp_path / "model.nal").write_text("component A { }")
    fired = watch(str(tmp_path), ("*.nal",), lambda: None, interval=0.05, max_iterations=4)
    assert fired == 0
