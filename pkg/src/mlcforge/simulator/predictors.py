"""Pluggable predictors: the oracle stub (lookup table, zero training) and
trained models served over the bridge, plus a cache so replay runs stay
byte-identical without re-invoking the bridge."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from ..bridge import BridgeClient, BridgeError
from ..model import ConfigTree
from .trace import TensorValue


class PredictorError(Exception):
    pass


class UnboundPredictor(PredictorError):
    def __init__(self, component: str):
        super().__init__(f"no predictor bound for ML component '{component}'")
        self.component = component


class Predictor:
    """Interface: vector in, vector out; train/preprocess hooks are no-ops
    unless the binding says otherwise."""

    def preprocess(self) -> None:
        pass

    def train(self) -> None:
        pass

    def predict(self, value: TensorValue) -> tuple[float, ...]:
        raise NotImplementedError

    def close(self) -> None:
        pass


@dataclass
class OracleStub(Predictor):
    """Deterministic lookup table from opaque input ids to output vectors."""

    component: str
    table: dict[str, tuple[float, ...]]

    def predict(self, value: TensorValue) -> tuple[float, ...]:
        if value.name is None:
            raise PredictorError(
                f"oracle stub for '{self.component}' needs named inputs; got a raw vector"
            )
        if value.name not in self.table:
            raise PredictorError(
                f"oracle stub for '{self.component}' has no entry for input '{value.name}'"
            )
        return tuple(self.table[value.name])


class TrainedModel(Predictor):
    """Serves predictions from a trained weight archive via the bridge.

    ``train`` loads the archive (build time already trained it) and
    ``preprocess`` replays the fit over the bridge; both count as bridge
    interactions but never retrain during a simulation run.
    """

    def __init__(self, component: str, archive_path: str, launcher, preprocess_payload: ConfigTree | None = None):
        self.component = component
        self.archive_path = archive_path
        self._launcher = launcher
        self._preprocess_payload = preprocess_payload
        self._client: BridgeClient | None = None
        self._loaded = False

    def _bridge(self) -> BridgeClient:
        if self._client is None:
            self._client = self._launcher()
        return self._client

    def _ensure_loaded(self) -> None:
        if not self._loaded:
            self._bridge().call("LOAD", ConfigTree((("archive", self.archive_path),)))
            self._loaded = True

    def preprocess(self) -> None:
        if self._preprocess_payload is not None:
            self._bridge().call("PREPROCESS", self._preprocess_payload)

    def train(self) -> None:
        self._ensure_loaded()

    def predict(self, value: TensorValue) -> tuple[float, ...]:
        self._ensure_loaded()
        payload = ConfigTree((("features", tuple(float(v) for v in value.data)),))
        try:
            response = self._bridge().call("PREDICT", payload)
        except BridgeError as exc:
            raise PredictorError(f"bridge prediction failed for '{self.component}': {exc}") from exc
        output = response.get("output")
        if not isinstance(output, tuple):
            raise PredictorError(f"bridge returned no output vector for '{self.component}'")
        return tuple(float(v) for v in output)

    def close(self) -> None:
        if self._client is not None:
            self._client.close()
            self._client = None


@dataclass
class CachingPredictor(Predictor):
    """Memoizes predictions by input digest so replays skip the bridge."""

    inner: Predictor
    cache: dict[str, tuple[float, ...]] = field(default_factory=dict)

    def _key(self, value: TensorValue) -> str:
        if value.name:
            return f"@{value.name}"
        return hashlib.sha256(",".join(f"{v!r}" for v in value.data).encode("ascii")).hexdigest()

    def preprocess(self) -> None:
        if not self.cache:
            self.inner.preprocess()

    def train(self) -> None:
        if not self.cache:
            self.inner.train()

    def predict(self, value: TensorValue) -> tuple[float, ...]:
        key = self._key(value)
        if key not in self.cache:
            self.cache[key] = self.inner.predict(value)
        return self.cache[key]

    def close(self) -> None:
        self.inner.close()
