"""Content-addressable store of immutable blob, tree, and commit objects.

Objects are keyed by the SHA-1 of a canonical encoding
``<kind> <decimal payload length>\\0<payload>``, so identical content is
stored exactly once.  Tree and commit payloads use a line-oriented
grammar (see :func:`encode_tree` / :func:`encode_commit`); blob payloads
are raw file bytes.  SHA-1 is used for content addressing only, not as a
cryptographic integrity guarantee.
"""

from __future__ import annotations

import hashlib
import os
import re
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

from .errors import CorruptObject, MalformedBody, ObjectNotFound, PayloadTooLarge

BLOB = "blob"
TREE = "tree"
COMMIT = "commit"
KINDS = (BLOB, TREE, COMMIT)

MODE_FILE = "100644"
MODE_DIR = "040000"

# Bounds memory for the in-process store; oversize files are a client error.
MAX_PAYLOAD = 16 * 1024 * 1024

_OBJECT_ID_RE = re.compile(r"^[0-9a-f]{40}$")
_NAME_FORBIDDEN = ("/", "\x00", "\n")


def is_object_id(value: str) -> bool:
    return bool(_OBJECT_ID_RE.match(value))


def canonical_encode(kind: str, payload: bytes) -> bytes:
    """Return the hashing preimage: ``<kind> <len>\\0<payload>``."""
    if kind not in KINDS:
        raise ValueError(f"unknown object kind: {kind!r}")
    return kind.encode("ascii") + b" " + str(len(payload)).encode("ascii") + b"\x00" + payload


def hash_object(kind: str, payload: bytes) -> str:
    """SHA-1 of the canonical encoding, as 40 lowercase hex chars."""
    if len(payload) > MAX_PAYLOAD:
        raise PayloadTooLarge(f"payload is {len(payload)} bytes, cap is {MAX_PAYLOAD}")
    return hashlib.sha1(canonical_encode(kind, payload)).hexdigest()


def decode_canonical(raw: bytes) -> tuple[str, bytes]:
    """Split a canonical encoding back into (kind, payload)."""
    header, sep, payload = raw.partition(b"\x00")
    if not sep:
        raise MalformedBody("canonical encoding has no NUL separator")
    try:
        kind, length = header.decode("ascii").split(" ")
    except ValueError:
        raise MalformedBody("canonical header is not '<kind> <len>'") from None
    if kind not in KINDS:
        raise MalformedBody(f"unknown object kind {kind!r}")
    if not length.isdigit() or int(length) != len(payload):
        raise MalformedBody("payload length does not match header")
    return kind, payload


# --- tree objects ----------------------------------------------------------

@dataclass(frozen=True)
class TreeEntry:
    """One directory slot: a file (blob) or subdirectory (tree)."""

    mode: str
    kind: str
    id: str
    name: str

    def __post_init__(self):
        if self.mode == MODE_FILE:
            if self.kind != BLOB:
                raise MalformedBody(f"mode {self.mode} requires a blob, got {self.kind}")
        elif self.mode == MODE_DIR:
            if self.kind != TREE:
                raise MalformedBody(f"mode {self.mode} requires a tree, got {self.kind}")
        else:
            raise MalformedBody(f"unknown tree entry mode {self.mode!r}")
        if not is_object_id(self.id):
            raise MalformedBody(f"bad object id in tree entry: {self.id!r}")
        if not self.name or self.name in (".", ".."):
            raise MalformedBody(f"bad tree entry name {self.name!r}")
        if any(ch in self.name for ch in _NAME_FORBIDDEN):
            raise MalformedBody(f"tree entry name contains forbidden character: {self.name!r}")


@dataclass(frozen=True)
class Tree:
    """Entries strictly sorted by name bytes; names unique."""

    entries: tuple[TreeEntry, ...]

    def __post_init__(self):
        names = [e.name.encode("utf-8") for e in self.entries]
        if any(a >= b for a, b in zip(names, names[1:])):
            raise MalformedBody("tree entries not strictly sorted by name")


def encode_tree(tree: Tree) -> bytes:
    """One ``<mode> <kind> <id> <name>`` line per entry, LF-joined, no trailer."""
    lines = [f"{e.mode} {e.kind} {e.id} {e.name}" for e in tree.entries]
    return "\n".join(lines).encode("utf-8")


def parse_tree(payload: bytes) -> Tree:
    if payload == b"":
        return Tree(())
    entries = []
    for raw in payload.split(b"\n"):
        try:
            line = raw.decode("utf-8")
        except UnicodeDecodeError:
            raise MalformedBody("tree entry is not UTF-8") from None
        parts = line.split(" ", 3)
        if len(parts) != 4:
            raise MalformedBody(f"tree line has {len(parts)} fields, expected 4")
        mode, kind, oid, name = parts
        entries.append(TreeEntry(mode=mode, kind=kind, id=oid, name=name))
    return Tree(tuple(entries))  # re-checks sortedness/uniqueness


# --- commit objects --------------------------------------------------------

_AUTHOR_RE = re.compile(r"^[^\s]+$")


@dataclass(frozen=True)
class Commit:
    """Snapshot: root tree, 0-2 parents, author, client timestamp, message."""

    tree: str
    parents: tuple[str, ...]
    author: str
    authored_at: int
    message: str

    def __post_init__(self):
        if not is_object_id(self.tree):
            raise MalformedBody(f"bad tree id {self.tree!r}")
        if len(self.parents) > 2:
            raise MalformedBody("a commit has at most two parents")
        for p in self.parents:
            if not is_object_id(p):
                raise MalformedBody(f"bad parent id {p!r}")
        if not _AUTHOR_RE.match(self.author):
            raise MalformedBody(f"bad author identifier {self.author!r}")
        if not isinstance(self.authored_at, int) or self.authored_at < 0:
            raise MalformedBody("authored_at must be a non-negative unix timestamp")
        if not self.message:
            raise MalformedBody("commit message must be nonempty")


def encode_commit(commit: Commit) -> bytes:
    """Fixed field order keeps the hash deterministic."""
    lines = [f"tree {commit.tree}"]
    lines.extend(f"parent {p}" for p in commit.parents)
    lines.append(f"author {commit.author} {commit.authored_at}")
    head = "\n".join(lines)
    return (head + "\n\n" + commit.message).encode("utf-8")


def parse_commit(payload: bytes) -> Commit:
    try:
        text = payload.decode("utf-8")
    except UnicodeDecodeError:
        raise MalformedBody("commit body is not UTF-8") from None
    head, sep, message = text.partition("\n\n")
    if not sep:
        raise MalformedBody("commit body has no blank line before message")
    lines = head.split("\n")
    if not lines or not lines[0].startswith("tree "):
        raise MalformedBody("commit body must start with a tree line")
    tree = lines[0][len("tree "):]
    parents = []
    i = 1
    while i < len(lines) and lines[i].startswith("parent "):
        parents.append(lines[i][len("parent "):])
        i += 1
    if i >= len(lines) or not lines[i].startswith("author "):
        raise MalformedBody("commit body missing author line")
    author_field = lines[i][len("author "):]
    author, sep, ts = author_field.rpartition(" ")
    if not sep or not author:
        raise MalformedBody("author line is not '<user-id> <unix-seconds>'")
    try:
        authored_at = int(ts)
    except ValueError:
        raise MalformedBody(f"bad author timestamp {ts!r}") from None
    if i + 1 != len(lines):
        raise MalformedBody("unexpected lines after author")
    return Commit(tree=tree, parents=tuple(parents), author=author,
                  authored_at=authored_at, message=message)


_PARSERS = {TREE: parse_tree, COMMIT: parse_commit}


# --- stats -----------------------------------------------------------------

@dataclass(frozen=True)
class StorageStats:
    """Counters behind the deduplication savings figure."""

    object_count: int
    logical_bytes: int     # payload bytes over every put attempt
    physical_bytes: int    # payload bytes over unique stored objects

    @property
    def dedup_saving_ratio(self) -> float:
        if self.logical_bytes == 0:
            return 0.0
        return 1.0 - self.physical_bytes / self.logical_bytes


# --- stores ----------------------------------------------------------------

class ObjectStore:
    """Shared put/get contract; concrete stores override the raw I/O.

    ``put`` is idempotent and commutative for identical content, so
    concurrent writers are safe; counters are updated under a lock.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._logical = 0
        self._physical = 0
        self._encoded = 0
        self._count = 0

    # raw hooks -------------------------------------------------------
    def _has_raw(self, oid: str) -> bool:
        raise NotImplementedError

    def _read_raw(self, oid: str) -> bytes:
        raise NotImplementedError

    def _write_raw(self, oid: str, encoded: bytes) -> None:
        raise NotImplementedError

    def _iter_ids(self) -> Iterator[str]:
        raise NotImplementedError

    # public API ------------------------------------------------------
    def put(self, kind: str, payload: bytes) -> tuple[str, bool]:
        """Store an object; returns (id, was_new). Validates tree/commit grammar."""
        if len(payload) > MAX_PAYLOAD:
            raise PayloadTooLarge(f"payload is {len(payload)} bytes, cap is {MAX_PAYLOAD}")
        parser = _PARSERS.get(kind)
        if parser is not None:
            parser(payload)  # raises MalformedBody
        elif kind != BLOB:
            raise MalformedBody(f"unknown object kind {kind!r}")
        encoded = canonical_encode(kind, payload)
        oid = hashlib.sha1(encoded).hexdigest()
        with self._lock:
            self._logical += len(payload)
            was_new = not self._has_raw(oid)
            if was_new:
                self._write_raw(oid, encoded)
                self._physical += len(payload)
                self._encoded += len(encoded)
                self._count += 1
        return oid, was_new

    def get(self, oid: str) -> tuple[str, bytes]:
        if not self._has_raw(oid):
            raise ObjectNotFound(f"no object {oid}")
        kind, payload = decode_canonical(self._read_raw(oid))
        return kind, payload

    def __contains__(self, oid: str) -> bool:
        return self._has_raw(oid)

    def ids(self) -> list[str]:
        return sorted(self._iter_ids())

    def stats(self) -> StorageStats:
        with self._lock:
            return StorageStats(self._count, self._logical, self._physical)

    @property
    def encoded_bytes(self) -> int:
        """Total at-rest bytes (canonical encodings of unique objects)."""
        with self._lock:
            return self._encoded

    def verify(self) -> list[str]:
        """Re-hash every stored object; returns ids whose content mismatches."""
        bad = []
        for oid in self._iter_ids():
            try:
                kind, payload = self.get(oid)
            except (MalformedBody, ObjectNotFound, CorruptObject):
                bad.append(oid)
                continue
            if hash_object(kind, payload) != oid:
                bad.append(oid)
        return bad


class MemoryObjectStore(ObjectStore):
    """Dict-backed store for tests and the in-memory service backend."""

    def __init__(self):
        super().__init__()
        self._objects: dict[str, bytes] = {}

    def _has_raw(self, oid):
        return oid in self._objects

    def _read_raw(self, oid):
        return self._objects[oid]

    def _write_raw(self, oid, encoded):
        self._objects[oid] = encoded

    def _iter_ids(self):
        return iter(list(self._objects))


class FileObjectStore(ObjectStore):
    """Stores each object at ``objects/<2 hex>/<38 hex>``, bytes verbatim.

    Counters are seeded from disk on open (each existing object counts as
    one put attempt), then track this process's activity.
    """

    def __init__(self, root: str | Path):
        super().__init__()
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        for path in self.root.glob("??/" + "?" * 38):
            size = path.stat().st_size
            self._encoded += size
            self._count += 1
        # payload size = encoded size minus header; recover it lazily only
        # when exactness matters (stats on a reopened store are best-effort
        # seeded with encoded sizes).
        self._physical = self._encoded
        self._logical = self._encoded

    def _path(self, oid: str) -> Path:
        return self.root / oid[:2] / oid[2:]

    def _has_raw(self, oid):
        return is_object_id(oid) and self._path(oid).exists()

    def _read_raw(self, oid):
        try:
            return self._path(oid).read_bytes()
        except FileNotFoundError:
            raise ObjectNotFound(f"no object {oid}") from None

    def _write_raw(self, oid, encoded):
        path = self._path(oid)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(path.name + f".tmp{os.getpid()}.{threading.get_ident()}")
        tmp.write_bytes(encoded)
        os.replace(tmp, path)  # atomic publish

    def _iter_ids(self):
        for sub in sorted(self.root.iterdir()):
            if not sub.is_dir() or len(sub.name) != 2:
                continue
            for f in sorted(sub.iterdir()):
                if len(f.name) == 38:
                    yield sub.name + f.name

    def get(self, oid: str) -> tuple[str, bytes]:
        kind, payload = super().get(oid)
        # on-disk bytes may have been tampered with; re-hash on read
        if hash_object(kind, payload) != oid:
            raise CorruptObject(f"object {oid} fails re-hash")
        return kind, payload


# --- typed loads and tree walking ------------------------------------------

def load_tree(store: ObjectStore, oid: str) -> Tree:
    kind, payload = store.get(oid)
    if kind != TREE:
        raise MalformedBody(f"object {oid} is a {kind}, expected tree")
    return parse_tree(payload)


def load_commit(store: ObjectStore, oid: str) -> Commit:
    kind, payload = store.get(oid)
    if kind != COMMIT:
        raise MalformedBody(f"object {oid} is a {kind}, expected commit")
    return parse_commit(payload)


def load_blob(store: ObjectStore, oid: str) -> bytes:
    kind, payload = store.get(oid)
    if kind != BLOB:
        raise MalformedBody(f"object {oid} is a {kind}, expected blob")
    return payload


def flatten_tree(store: ObjectStore, tree_id: str | None) -> dict[str, str]:
    """Map every file path under the tree to its blob id. None -> empty."""
    if tree_id is None:
        return {}
    flat: dict[str, str] = {}
    stack = [("", tree_id)]
    while stack:
        prefix, tid = stack.pop()
        for entry in load_tree(store, tid).entries:
            path = prefix + entry.name
            if entry.kind == BLOB:
                flat[path] = entry.id
            else:
                stack.append((path + "/", entry.id))
    return flat
