"""Service configuration: one JSON file, overridable via QOESIGN_CONFIG."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields
from enum import Enum
from pathlib import Path

from qoesign.errors import ConfigError

ENV_VAR = "QOESIGN_CONFIG"
MAX_SEED = 2**64 - 1


class ServiceMode(Enum):
    IN_PROCESS_SIM = "in_process_sim"
    MULTI_PROCESS = "multi_process"


@dataclass(frozen=True)
class ServiceConfig:
    """Deployment shape for the coordinator and its QTSP peers.

    The seed drives deterministic key bootstrap so that every process
    in a deployment derives the same distributed key material; it is a
    demo artifact, not an operational secret-management story.
    """

    n: int = 3
    t: int = 2
    suite_id: str = "schnorr-toy-v1"
    listen_host: str = "127.0.0.1"
    listen_port: int = 8440
    data_dir: str = "qoesign-data"
    mode: ServiceMode = ServiceMode.IN_PROCESS_SIM
    qtsp_peers: tuple[str, ...] = ()
    users: tuple[str, ...] = ("alice",)
    seed: int = 7
    # stands in for the user's local unlock secret; see keystore module
    keystore_passphrase: str = "demo-passphrase"

    def __post_init__(self):
        if not 1 <= self.t <= self.n:
            raise ConfigError(f"threshold {self.t} outside 1..{self.n}")
        if not 0 <= self.seed <= MAX_SEED:
            raise ConfigError("seed must fit in 64 bits")
        if not self.users or len(set(self.users)) != len(self.users):
            raise ConfigError("users must be non-empty and free of duplicates")
        if self.mode is ServiceMode.MULTI_PROCESS and len(self.qtsp_peers) != self.n:
            raise ConfigError(
                f"multi_process mode needs exactly {self.n} qtsp peer "
                f"addresses, got {len(self.qtsp_peers)}"
            )
        if not 0 < self.listen_port < 65536:
            raise ConfigError(f"listen_port {self.listen_port} out of range")

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "t": self.t,
            "suite_id": self.suite_id,
            "listen_host": self.listen_host,
            "listen_port": self.listen_port,
            "data_dir": self.data_dir,
            "mode": self.mode.value,
            "qtsp_peers": list(self.qtsp_peers),
            "users": list(self.users),
            "seed": self.seed,
            "keystore_passphrase": self.keystore_passphrase,
        }


def config_from_dict(doc) -> ServiceConfig:
    if not isinstance(doc, dict):
        raise ConfigError("service config must be a JSON object")
    known = {f.name for f in fields(ServiceConfig)}
    unknown = sorted(set(doc) - known)
    if unknown:
        raise ConfigError(f"unknown config fields: {', '.join(unknown)}")
    kwargs = dict(doc)
    if "mode" in kwargs:
        try:
            kwargs["mode"] = ServiceMode(kwargs["mode"])
        except ValueError:
            raise ConfigError(f"unknown service mode {kwargs['mode']!r}") from None
    for name in ("qtsp_peers", "users"):
        if name in kwargs:
            value = kwargs[name]
            if not isinstance(value, (list, tuple)):
                raise ConfigError(f"{name} must be a list")
            kwargs[name] = tuple(value)
    try:
        return ServiceConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad config value: {exc}") from None


def load_config(path: str | None = None) -> ServiceConfig:
    """Explicit path wins, then $QOESIGN_CONFIG, then built-in defaults."""
    chosen = path or os.environ.get(ENV_VAR)
    if chosen is None:
        return ServiceConfig()
    try:
        raw = Path(chosen).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {chosen}: {exc}") from None
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {chosen} is not valid JSON: {exc}") from None
    return config_from_dict(doc)


def ensure_data_dir(config: ServiceConfig) -> Path:
    """Create the data directory and prove it is writable."""
    target = Path(config.data_dir)
    try:
        target.mkdir(parents=True, exist_ok=True)
        probe = target / ".write-probe"
        probe.write_bytes(b"")
        probe.unlink()
    except OSError as exc:
        raise ConfigError(f"data directory {target} is not writable: {exc}") from None
    return target
