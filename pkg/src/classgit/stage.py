"""The staging area (index): what the next commit will contain.

The index maps normalized repository-relative paths to blob ids plus the
file metadata (size, mtime) captured when the file was staged.  Change
detection is always done by hash; mtime/size are informational only, so
clock skew on student machines can never corrupt `status`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Mapping

from . import objstore
from .errors import InvalidPath, PathNotStaged, PathUnknown

if TYPE_CHECKING:
    from .history import RepoState


def normalize_path(raw: str) -> str:
    """Validate and normalize a repo-relative path.

    Rejects absolute paths, backslashes, '.'/'..' segments, empty
    segments, and control characters; returns the '/'-joined form.
    """
    if not raw or "\\" in raw or "\x00" in raw or "\n" in raw:
        raise InvalidPath(f"bad path {raw!r}")
    if raw.startswith("/"):
        raise InvalidPath(f"path must be repository-relative: {raw!r}")
    segments = raw.split("/")
    for seg in segments:
        if seg in ("", ".", ".."):
            raise InvalidPath(f"bad path segment in {raw!r}")
    return "/".join(segments)


@dataclass
class IndexEntry:
    path: str
    blob_id: str
    size: int
    mtime: int

    def to_json_obj(self) -> dict:
        return {"path": self.path, "blob_id": self.blob_id,
                "size": self.size, "mtime": self.mtime}

    @classmethod
    def from_json_obj(cls, obj: dict) -> "IndexEntry":
        return cls(path=obj["path"], blob_id=obj["blob_id"],
                   size=int(obj["size"]), mtime=int(obj["mtime"]))


class Index:
    """Path -> IndexEntry map; paths never nest under one another."""

    def __init__(self, entries: Iterable[IndexEntry] = ()):
        self._entries: dict[str, IndexEntry] = {}
        for e in entries:
            self.set_entry(e)

    def __len__(self):
        return len(self._entries)

    def __contains__(self, path: str) -> bool:
        return path in self._entries

    def get(self, path: str) -> IndexEntry | None:
        return self._entries.get(path)

    def paths(self) -> set[str]:
        return set(self._entries)

    def entries(self) -> list[IndexEntry]:
        return [self._entries[p] for p in sorted(self._entries)]

    def set_entry(self, entry: IndexEntry) -> None:
        self._check_conflict(entry.path)
        self._entries[entry.path] = entry

    def remove(self, path: str) -> None:
        self._entries.pop(path, None)

    def clear(self) -> None:
        self._entries.clear()

    def as_map(self) -> dict[str, str]:
        return {p: e.blob_id for p, e in self._entries.items()}

    def copy(self) -> "Index":
        out = Index()
        out._entries = {p: IndexEntry(**vars(e)) for p, e in self._entries.items()}
        return out

    def _check_conflict(self, path: str) -> None:
        # staging `a` when `a/b` is tracked (or vice versa) would make the
        # index impossible to materialize as a tree
        prefix = path + "/"
        for existing in self._entries:
            if existing == path:
                return
            if existing.startswith(prefix) or path.startswith(existing + "/"):
                raise InvalidPath(f"{path!r} conflicts with tracked path {existing!r}")

    def to_json_obj(self) -> list[dict]:
        return [e.to_json_obj() for e in self.entries()]

    @classmethod
    def from_json_obj(cls, obj: list[dict]) -> "Index":
        return cls(IndexEntry.from_json_obj(o) for o in obj)


@dataclass
class StatusReport:
    """Hash-derived working state; a path may be both staged and modified."""

    staged: list[str]
    modified: list[str]
    untracked: list[str]
    deleted: list[str]
    ahead_count: int

    @property
    def clean(self) -> bool:
        return not (self.staged or self.modified or self.untracked or self.deleted)

    def to_json_obj(self) -> dict:
        return {"staged": self.staged, "modified": self.modified,
                "untracked": self.untracked, "deleted": self.deleted,
                "ahead_count": self.ahead_count}


def head_tree_map(repo: "RepoState") -> dict[str, str]:
    """Flattened (path -> blob id) view of the HEAD commit's tree."""
    target = repo.refs.get(repo.head)
    if target is None:
        return {}
    commit = objstore.load_commit(repo.objects, target)
    return objstore.flatten_tree(repo.objects, commit.tree)


def stage_file(repo: "RepoState", path: str, content: bytes, mtime: int = 0) -> IndexEntry:
    """Store the content as a blob and point the index entry at it."""
    norm = normalize_path(path)
    blob_id, _ = repo.objects.put(objstore.BLOB, content)
    entry = IndexEntry(path=norm, blob_id=blob_id, size=len(content), mtime=int(mtime))
    repo.index.set_entry(entry)
    return entry


def unstage(repo: "RepoState", path: str | None = None) -> Index:
    """Reset index entries to HEAD's version (drop paths HEAD lacks).

    ``path=None`` resets the whole index.  Blobs stay in the object store;
    only the index changes.
    """
    head_map = head_tree_map(repo)
    if path is None:
        repo.index.clear()
        for p, blob_id in head_map.items():
            size = len(objstore.load_blob(repo.objects, blob_id))
            repo.index.set_entry(IndexEntry(path=p, blob_id=blob_id, size=size, mtime=0))
        return repo.index
    norm = normalize_path(path)
    if norm not in repo.index and norm not in head_map:
        raise PathNotStaged(f"{norm} is neither staged nor committed")
    if norm in head_map:
        blob_id = head_map[norm]
        size = len(objstore.load_blob(repo.objects, blob_id))
        repo.index.remove(norm)
        repo.index.set_entry(IndexEntry(path=norm, blob_id=blob_id, size=size, mtime=0))
    else:
        repo.index.remove(norm)
    return repo.index


def restore_file(repo: "RepoState", path: str) -> bytes:
    """Content to overwrite the working file with: index first, then HEAD."""
    norm = normalize_path(path)
    entry = repo.index.get(norm)
    if entry is not None:
        return objstore.load_blob(repo.objects, entry.blob_id)
    head_map = head_tree_map(repo)
    if norm in head_map:
        return objstore.load_blob(repo.objects, head_map[norm])
    raise PathUnknown(f"{norm} not found in index or HEAD")


def _worktree_blob_id(value: bytes | str) -> str:
    if isinstance(value, bytes):
        return objstore.hash_object(objstore.BLOB, value)
    if isinstance(value, str) and objstore.is_object_id(value):
        return value
    raise InvalidPath(f"worktree values must be bytes or 40-hex blob ids, got {value!r}")


def _reachable(store: objstore.ObjectStore, tip: str | None) -> set[str]:
    seen: set[str] = set()
    stack = [tip] if tip else []
    while stack:
        oid = stack.pop()
        if oid in seen:
            continue
        seen.add(oid)
        stack.extend(objstore.load_commit(store, oid).parents)
    return seen


def status(repo: "RepoState", worktree: Mapping[str, bytes | str]) -> StatusReport:
    """Compare HEAD tree, index, and a worktree snapshot by hash.

    ``worktree`` maps every non-ignored path to its bytes (or a
    precomputed blob id).  The report is a pure function of the three
    hash maps, so enumeration order never matters.
    """
    head_map = head_tree_map(repo)
    index_map = repo.index.as_map()
    work_map = {p: _worktree_blob_id(v) for p, v in worktree.items()}

    staged = sorted(p for p, b in index_map.items() if head_map.get(p) != b)
    modified = sorted(p for p, b in index_map.items()
                      if p in work_map and work_map[p] != b)
    untracked = sorted(p for p in work_map
                       if p not in index_map and p not in head_map)
    deleted = sorted(p for p in head_map if p not in work_map)

    head_commits = _reachable(repo.objects, repo.refs.get(repo.head))
    pushed_commits = _reachable(repo.objects, repo.last_pushed)
    ahead = len(head_commits - pushed_commits)

    return StatusReport(staged=staged, modified=modified, untracked=untracked,
                        deleted=deleted, ahead_count=ahead)
