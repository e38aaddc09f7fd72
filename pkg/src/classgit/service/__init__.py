"""Submission server: accounts, assignments, push/fetch, persistence, REST."""

from .core import ServiceCore
from .storage import FileBackend, MemoryBackend

__all__ = ["ServiceCore", "MemoryBackend", "FileBackend"]
