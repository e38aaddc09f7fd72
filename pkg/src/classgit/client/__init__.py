"""Student-facing client: HTTP API wrapper, checkout state, CLI."""
