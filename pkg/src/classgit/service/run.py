"""`mgit-server`: run the submission service."""

from __future__ import annotations

import json
import threading

import click
import uvicorn

from .config import ServerConfig, load_config
from .core import ServiceCore
from .rest import create_app
from .storage import FileBackend, MemoryBackend


def build_core(config: ServerConfig, in_memory: bool = False) -> ServiceCore:
    backend = MemoryBackend() if in_memory else FileBackend(config.store_dir)
    return ServiceCore(backend, token_lifetime=config.token_lifetime_seconds)


@click.group()
def main():
    """Submission server for the classgit system."""


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="JSON config file (see README for keys).")
@click.option("--in-memory", is_flag=True, default=False,
              help="Volatile store; useful for demos and tests.")
def serve(config_path, in_memory):
    """Start the REST service."""
    config = load_config(config_path)
    core = build_core(config, in_memory=in_memory)
    app = create_app(core)
    click.echo(f"listening on http://{config.host}:{config.port} "
               f"(store: {'memory' if in_memory else config.store_dir})")
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")


@main.command("example-config")
def example_config():
    """Print a config file with the default values."""
    cfg = ServerConfig()
    click.echo(json.dumps({
        "listen": cfg.listen,
        "store_dir": cfg.store_dir,
        "token_lifetime_hours": cfg.token_lifetime_hours,
    }, indent=2))


class EmbeddedServer:
    """Uvicorn on an ephemeral port inside this process (tests, bench)."""

    def __init__(self, core: ServiceCore, host: str = "127.0.0.1", port: int = 0):
        self.core = core
        self._server = uvicorn.Server(uvicorn.Config(
            create_app(core), host=host, port=port, log_level="error"))
        self._thread = threading.Thread(target=self._server.run, daemon=True)
        self.base_url = ""

    def start(self, timeout: float = 10.0) -> "EmbeddedServer":
        self._thread.start()
        import time
        deadline = time.time() + timeout
        while not self._server.started:
            if time.time() > deadline:
                raise RuntimeError("embedded server failed to start")
            time.sleep(0.01)
        sock = self._server.servers[0].sockets[0]
        host, port = sock.getsockname()[:2]
        self.base_url = f"http://{host}:{port}"
        return self

    def stop(self) -> None:
        self._server.should_exit = True
        self._thread.join(timeout=5)

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()
