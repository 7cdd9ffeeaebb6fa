"""The framed request/response protocol between the toolchain and the
training/prediction runtime.

Frames are line-delimited UTF-8::

    REQ <id> <verb> <payload>
    RES <id> OK <payload>
    RES <id> ERR <message>

Verbs: PREPROCESS, TRAIN, PREDICT, LOAD, SAVE. Payloads use the toolchain's
canonical nested key-value text rendered on a single line. One request is in
flight at a time; the client serializes calls and enforces a timeout.
"""

from __future__ import annotations

import queue
import shlex
import subprocess
import threading
from dataclasses import dataclass

from .frontend.conflang import parse_value_document
from .frontend.printer import print_config_inline
from .model import ConfigTree

VERBS = ("PREPROCESS", "TRAIN", "PREDICT", "LOAD", "SAVE")

DEFAULT_TIMEOUT = 600.0


class BridgeError(Exception):
    """Protocol violation or in-band ERR response."""


class BridgeTimeout(BridgeError):
    def __init__(self, verb: str, timeout: float):
        super().__init__(f"bridge {verb} timed out after {timeout:.0f} s")


@dataclass(frozen=True)
class Frame:
    kind: str  # REQ | RES
    id: int
    verb_or_status: str
    payload: str

    def render(self) -> str:
        return f"{self.kind} {self.id} {self.verb_or_status} {self.payload}"


def encode_request(req_id: int, verb: str, payload: ConfigTree) -> str:
    return f"REQ {req_id} {verb} {print_config_inline(payload)}\n"


def encode_response(req_id: int, ok: bool, payload: ConfigTree | str) -> str:
    if ok:
        text = print_config_inline(payload) if isinstance(payload, ConfigTree) else str(payload)
        return f"RES {req_id} OK {text}\n"
    return f"RES {req_id} ERR {payload}\n"


def decode_frame(line: str) -> Frame | None:
    parts = line.rstrip("\n").split(" ", 3)
    if len(parts) < 3 or parts[0] not in ("REQ", "RES"):
        return None
    try:
        frame_id = int(parts[1])
    except ValueError:
        return None
    payload = parts[3] if len(parts) == 4 else ""
    return Frame(parts[0], frame_id, parts[2], payload)


def parse_payload(payload: str) -> ConfigTree:
    tree, diags = parse_value_document(payload)
    if tree is None:
        raise BridgeError("malformed payload: " + "; ".join(d.message for d in diags))
    return tree


class BridgeClient:
    """Serializes requests to one bridge-server subprocess."""

    def __init__(self, command: list[str], cwd: str | None = None, timeout: float = DEFAULT_TIMEOUT):
        self.command = command
        self.timeout = timeout
        self._next_id = 1
        self._proc = subprocess.Popen(
            command,
            cwd=cwd,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            text=True,
            encoding="utf-8",
            bufsize=1,
        )
        self._lines: queue.Queue[str | None] = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()

    def _pump(self) -> None:
        assert self._proc.stdout is not None
        for line in self._proc.stdout:
            self._lines.put(line)
        self._lines.put(None)

    def call(self, verb: str, payload: ConfigTree, timeout: float | None = None) -> ConfigTree:
        """Send one request and wait for its response; raises on ERR."""
        if verb not in VERBS:
            raise BridgeError(f"unknown verb '{verb}'")
        if self._proc.poll() is not None:
            raise BridgeError(f"bridge process exited with code {self._proc.returncode}")
        req_id = self._next_id
        self._next_id += 1
        assert self._proc.stdin is not None
        self._proc.stdin.write(encode_request(req_id, verb, payload))
        self._proc.stdin.flush()
        deadline = timeout if timeout is not None else self.timeout
        while True:
            try:
                line = self._lines.get(timeout=deadline)
            except queue.Empty:
                self.close(kill=True)
                raise BridgeTimeout(verb, deadline) from None
            if line is None:
                raise BridgeError("bridge closed its output stream " + self._stderr_excerpt())
            frame = decode_frame(line)
            if frame is None or frame.kind != "RES":
                continue  # ignore noise on stdout
            if frame.id != req_id:
                continue
            if frame.verb_or_status == "OK":
                return parse_payload(frame.payload) if frame.payload else ConfigTree()
            raise BridgeError(f"{verb} failed: {frame.payload}")

    def _stderr_excerpt(self, limit: int = 400) -> str:
        if self._proc.stderr is None:
            return ""
        try:
            text = self._proc.stderr.read() or ""
        except (OSError, ValueError):
            return ""
        text = text.strip()
        return f"(stderr: {text[-limit:]})" if text else ""

    def close(self, kill: bool = False) -> None:
        if self._proc.poll() is None:
            try:
                if self._proc.stdin is not None:
                    self._proc.stdin.close()
                if kill:
                    self._proc.kill()
                self._proc.wait(timeout=5)
            except (OSError, subprocess.TimeoutExpired):
                self._proc.kill()

    def __enter__(self) -> BridgeClient:
        return self

    def __exit__(self, *_exc) -> None:
        self.close()


def launcher_from_command(command: str | list[str], cwd: str | None = None, timeout: float = DEFAULT_TIMEOUT):
    """A zero-arg factory yielding fresh BridgeClients (one per trainable unit)."""
    argv = shlex.split(command) if isinstance(command, str) else list(command)

    def launch() -> BridgeClient:
        return BridgeClient(argv, cwd=cwd, timeout=timeout)

    return launch
