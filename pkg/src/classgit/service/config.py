"""Server configuration: one JSON file, env-var overrides.

Keys (all optional):
  listen                "host:port" to bind          (default 127.0.0.1:8470)
  store_dir             directory for persisted data (default ./classgit-data)
  token_lifetime_hours  session lifetime             (default 24)

Environment overrides: CLASSGIT_LISTEN, CLASSGIT_STORE_DIR,
CLASSGIT_TOKEN_LIFETIME_HOURS.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

DEFAULT_LISTEN = "127.0.0.1:8470"
DEFAULT_STORE_DIR = "./classgit-data"
DEFAULT_TOKEN_LIFETIME_HOURS = 24


@dataclass
class ServerConfig:
    listen: str = DEFAULT_LISTEN
    store_dir: str = DEFAULT_STORE_DIR
    token_lifetime_hours: float = DEFAULT_TOKEN_LIFETIME_HOURS

    @property
    def host(self) -> str:
        host, _, _ = self.listen.rpartition(":")
        return host or "127.0.0.1"

    @property
    def port(self) -> int:
        _, _, port = self.listen.rpartition(":")
        return int(port)

    @property
    def token_lifetime_seconds(self) -> int:
        return int(self.token_lifetime_hours * 3600)


def load_config(path: str | Path | None = None) -> ServerConfig:
    cfg = ServerConfig()
    if path is not None:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        unknown = set(data) - {"listen", "store_dir", "token_lifetime_hours"}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        cfg.listen = data.get("listen", cfg.listen)
        cfg.store_dir = data.get("store_dir", cfg.store_dir)
        cfg.token_lifetime_hours = float(
            data.get("token_lifetime_hours", cfg.token_lifetime_hours))
    if os.environ.get("CLASSGIT_LISTEN"):
        cfg.listen = os.environ["CLASSGIT_LISTEN"]
    if os.environ.get("CLASSGIT_STORE_DIR"):
        cfg.store_dir = os.environ["CLASSGIT_STORE_DIR"]
    if os.environ.get("CLASSGIT_TOKEN_LIFETIME_HOURS"):
        cfg.token_lifetime_hours = float(os.environ["CLASSGIT_TOKEN_LIFETIME_HOURS"])
    return cfg
