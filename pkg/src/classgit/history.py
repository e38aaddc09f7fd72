"""Commit graph operations: tree building, commits, branches, merge, clone.

All mutating operations follow an append-only discipline: objects are
never deleted or rewritten, and a branch ref only ever moves to a commit
whose ancestry is already fully stored.  Ref movement is the commit
point, so a failure at any earlier step leaves the repository unchanged.
"""

from __future__ import annotations

import secrets
from dataclasses import dataclass, field

from . import merge3, objstore, stage
from .errors import (
    BranchExists,
    DirtyIndex,
    EmptyMessage,
    InvalidName,
    NoCommonAncestor,
    NothingToCommit,
    RefConflict,
    Unauthorized,
    UnknownBranch,
    UnknownSource,
)

DEFAULT_BRANCH = "main"

FAST_FORWARD = "fast_forward"
CLEAN_MERGE = "clean_merge"
CONFLICTS = "conflicts"


def validate_branch_name(name: str) -> str:
    if (not name or "/" in name or name == "HEAD"
            or any(ord(c) < 0x20 or ord(c) == 0x7F for c in name)
            or " " in name):
        raise InvalidName(f"bad branch name {name!r}")
    return name


def new_repo_id() -> str:
    return "r" + secrets.token_hex(8)


@dataclass
class MergeEvent:
    """One merge attempt on this repository, for instructor analytics."""

    at: int
    outcome: str
    conflict_count: int

    def to_json_obj(self) -> dict:
        return {"at": self.at, "outcome": self.outcome,
                "conflict_count": self.conflict_count}

    @classmethod
    def from_json_obj(cls, obj: dict) -> "MergeEvent":
        return cls(at=int(obj["at"]), outcome=obj["outcome"],
                   conflict_count=int(obj["conflict_count"]))


@dataclass
class RepoState:
    """Mutable repository: refs, HEAD, index, ownership, push mark.

    Objects live in a (possibly shared) content-addressed store, so
    cloning copies none of them.
    """

    repo_id: str
    owners: set[str]
    objects: objstore.ObjectStore
    refs: dict[str, str] = field(default_factory=dict)
    head: str = DEFAULT_BRANCH
    index: stage.Index = field(default_factory=stage.Index)
    assignment_id: str | None = None
    last_pushed: str | None = None
    merge_events: list[MergeEvent] = field(default_factory=list)

    def head_target(self) -> str | None:
        return self.refs.get(self.head)


@dataclass
class MergeConflict:
    path: str
    ours: bytes
    theirs: bytes
    base: bytes


@dataclass
class MergeResult:
    outcome: str  # FAST_FORWARD | CLEAN_MERGE | CONFLICTS
    commit_id: str | None = None
    conflicts: list[MergeConflict] = field(default_factory=list)
    conflict_files: dict[str, bytes] = field(default_factory=dict)  # marker renditions


# --- tree construction ------------------------------------------------------

def build_trees(store: objstore.ObjectStore, index: stage.Index) -> str:
    """Persist the hierarchy for the index and return the root tree id.

    Flat entries are grouped per directory and each tree's entries are
    sorted by name bytes, so the result depends only on index content,
    never on insertion order.
    """
    def build(prefix: str, paths: dict[str, str]) -> str:
        files: dict[str, str] = {}
        dirs: dict[str, dict[str, str]] = {}
        for path, blob_id in paths.items():
            name, sep, rest = path.partition("/")
            if sep:
                dirs.setdefault(name, {})[rest] = blob_id
            else:
                files[name] = blob_id
        entries = []
        for name in sorted(set(files) | set(dirs), key=lambda n: n.encode("utf-8")):
            if name in files:
                entries.append(objstore.TreeEntry(
                    mode=objstore.MODE_FILE, kind=objstore.BLOB,
                    id=files[name], name=name))
            else:
                sub_id = build(prefix + name + "/", dirs[name])
                entries.append(objstore.TreeEntry(
                    mode=objstore.MODE_DIR, kind=objstore.TREE,
                    id=sub_id, name=name))
        payload = objstore.encode_tree(objstore.Tree(tuple(entries)))
        tree_id, _ = store.put(objstore.TREE, payload)
        return tree_id

    return build("", index.as_map())


def build_tree_from_map(store: objstore.ObjectStore, blob_map: dict[str, str]) -> str:
    idx = stage.Index(
        stage.IndexEntry(path=p, blob_id=b, size=0, mtime=0)
        for p, b in blob_map.items()
    )
    return build_trees(store, idx)


# --- graph helpers ----------------------------------------------------------

def reachable_commits(store: objstore.ObjectStore, tip: str | None) -> set[str]:
    seen: set[str] = set()
    stack = [tip] if tip else []
    while stack:
        oid = stack.pop()
        if oid in seen:
            continue
        seen.add(oid)
        stack.extend(objstore.load_commit(store, oid).parents)
    return seen


def is_ancestor(store: objstore.ObjectStore, ancestor: str, descendant: str) -> bool:
    """Ancestor-or-equal along parent links."""
    return ancestor in reachable_commits(store, descendant)


def _cas_ref(repo: RepoState, name: str, expected: str | None, new_target: str) -> None:
    current = repo.refs.get(name)
    if current != expected:
        raise RefConflict(f"ref {name} moved: expected {expected}, found {current}")
    repo.refs[name] = new_target


# --- commits ----------------------------------------------------------------

def create_commit(repo: RepoState, author: str, message: str,
                  authored_at: int) -> tuple[str, objstore.Commit]:
    """Snapshot the index onto the current branch.

    All object writes happen before the single ref update, which is the
    commit point; any earlier failure leaves refs and index untouched.
    """
    if author not in repo.owners:
        raise Unauthorized(f"{author} may not commit to {repo.repo_id}")
    if not message:
        raise EmptyMessage("commit message must be nonempty")
    old_target = repo.head_target()
    root = build_trees(repo.objects, repo.index)
    if old_target is not None:
        head_commit = objstore.load_commit(repo.objects, old_target)
        if head_commit.tree == root:
            raise NothingToCommit("index matches HEAD tree")
    parents = (old_target,) if old_target else ()
    commit = objstore.Commit(tree=root, parents=parents, author=author,
                             authored_at=int(authored_at), message=message)
    commit_id, _ = repo.objects.put(objstore.COMMIT, objstore.encode_commit(commit))
    _cas_ref(repo, repo.head, old_target, commit_id)
    return commit_id, commit


def create_branch(repo: RepoState, name: str, source: str | None = None) -> str:
    """New lightweight ref; O(1), no object copying. Returns the target id."""
    validate_branch_name(name)
    if name in repo.refs:
        raise BranchExists(f"branch {name} already exists")
    if source is None:
        source = repo.head
    if source in repo.refs:
        target = repo.refs[source]
    elif objstore.is_object_id(source) and source in repo.objects:
        objstore.load_commit(repo.objects, source)  # must be a commit
        target = source
    else:
        raise UnknownSource(f"cannot branch from {source!r}")
    repo.refs[name] = target
    return target


def index_matches_head(repo: RepoState) -> bool:
    return repo.index.as_map() == stage.head_tree_map(repo)


def index_from_commit(repo: RepoState, commit_id: str | None) -> stage.Index:
    idx = stage.Index()
    if commit_id is None:
        return idx
    commit = objstore.load_commit(repo.objects, commit_id)
    for path, blob_id in objstore.flatten_tree(repo.objects, commit.tree).items():
        size = len(objstore.load_blob(repo.objects, blob_id))
        idx.set_entry(stage.IndexEntry(path=path, blob_id=blob_id, size=size, mtime=0))
    return idx


def switch_branch(repo: RepoState, name: str) -> None:
    """Move HEAD to another branch; refuses rather than lose staged work."""
    if name not in repo.refs:
        raise UnknownBranch(f"no branch {name}")
    if not index_matches_head(repo):
        raise DirtyIndex("commit or reset staged changes before switching")
    repo.head = name
    repo.index = index_from_commit(repo, repo.refs[name])


def history_walk(repo: RepoState, ref_name: str | None = None) -> list[tuple[str, objstore.Commit]]:
    """Commits in reverse topological order (parents after children).

    Among commits whose children are all emitted, the next is the one
    with the greatest authored_at, ties going to the lowest id.
    """
    name = ref_name if ref_name is not None else repo.head
    if name not in repo.refs:
        raise UnknownBranch(f"no branch {name}")
    store = repo.objects
    tip = repo.refs[name]
    commits = {oid: objstore.load_commit(store, oid)
               for oid in reachable_commits(store, tip)}
    child_count = {oid: 0 for oid in commits}
    for commit in commits.values():
        for parent in commit.parents:
            child_count[parent] += 1
    ready = {oid for oid, n in child_count.items() if n == 0}
    out: list[tuple[str, objstore.Commit]] = []
    while ready:
        oid = min(ready, key=lambda o: (-commits[o].authored_at, o))
        ready.discard(oid)
        out.append((oid, commits[oid]))
        for parent in commits[oid].parents:
            child_count[parent] -= 1
            if child_count[parent] == 0:
                ready.add(parent)
    return out


def merge_base(store: objstore.ObjectStore, a: str, b: str) -> str:
    """A lowest common ancestor; greatest authored_at wins ties, then lowest id."""
    common = reachable_commits(store, a) & reachable_commits(store, b)
    if not common:
        raise NoCommonAncestor(f"{a} and {b} share no history")
    dominated: set[str] = set()
    for oid in common:
        parents = objstore.load_commit(store, oid).parents
        for p in parents:
            if p in common:
                dominated |= reachable_commits(store, p)
    lowest = common - dominated
    return min(lowest, key=lambda o: (-objstore.load_commit(store, o).authored_at, o))


def diff_trees(store: objstore.ObjectStore, a: str | None, b: str | None) -> list[tuple[str, str]]:
    """Exact set difference of the two flattened trees, sorted by path."""
    a_map = objstore.flatten_tree(store, a)
    b_map = objstore.flatten_tree(store, b)
    out = []
    for path in sorted(set(a_map) | set(b_map)):
        in_a, in_b = path in a_map, path in b_map
        if in_a and not in_b:
            out.append((path, "removed"))
        elif in_b and not in_a:
            out.append((path, "added"))
        elif a_map[path] != b_map[path]:
            out.append((path, "modified"))
    return out


# --- merge ------------------------------------------------------------------

def _blob(store: objstore.ObjectStore, blob_id: str | None) -> bytes:
    return objstore.load_blob(store, blob_id) if blob_id else b""


def merge(repo: RepoState, ours: str, theirs: str, author: str, message: str,
          merged_at: int) -> MergeResult:
    """Merge branch `theirs` into branch `ours` (three-way, line level).

    Fast-forwards when one tip contains the other.  Otherwise each file
    is merged against the merge base: non-overlapping line edits combine,
    overlapping edits become conflicts and no ref moves.  Cleanly merged
    paths are staged into the index (when `ours` is HEAD) so a student
    can resolve conflicted files and re-commit without losing either
    side's work.
    """
    store = repo.objects
    for name in (ours, theirs):
        if name not in repo.refs:
            raise UnknownBranch(f"no branch {name}")
    if not index_matches_head(repo):
        raise DirtyIndex("commit or reset staged changes before merging")

    ours_tip = repo.refs[ours]
    theirs_tip = repo.refs[theirs]

    def record(outcome: str, conflict_count: int) -> None:
        repo.merge_events.append(MergeEvent(at=int(merged_at), outcome=outcome,
                                            conflict_count=conflict_count))

    if is_ancestor(store, theirs_tip, ours_tip):
        record(FAST_FORWARD, 0)
        return MergeResult(outcome=FAST_FORWARD, commit_id=ours_tip)
    if is_ancestor(store, ours_tip, theirs_tip):
        _cas_ref(repo, ours, ours_tip, theirs_tip)
        if repo.head == ours:
            repo.index = index_from_commit(repo, theirs_tip)
        record(FAST_FORWARD, 0)
        return MergeResult(outcome=FAST_FORWARD, commit_id=theirs_tip)

    base_id = merge_base(store, ours_tip, theirs_tip)
    base_map = objstore.flatten_tree(store, objstore.load_commit(store, base_id).tree)
    ours_map = objstore.flatten_tree(store, objstore.load_commit(store, ours_tip).tree)
    theirs_map = objstore.flatten_tree(store, objstore.load_commit(store, theirs_tip).tree)

    merged_map: dict[str, str] = {}
    conflicts: list[MergeConflict] = []
    conflict_files: dict[str, bytes] = {}

    for path in sorted(set(base_map) | set(ours_map) | set(theirs_map)):
        b_id = base_map.get(path)
        o_id = ours_map.get(path)
        t_id = theirs_map.get(path)
        if o_id == t_id:
            if o_id is not None:
                merged_map[path] = o_id
            continue
        if b_id == o_id:  # only theirs changed
            if t_id is not None:
                merged_map[path] = t_id
            continue
        if b_id == t_id:  # only ours changed
            if o_id is not None:
                merged_map[path] = o_id
            continue
        # both sides changed the path differently
        o_bytes = _blob(store, o_id)
        t_bytes = _blob(store, t_id)
        b_bytes = _blob(store, b_id)
        if o_id is None or t_id is None:
            # delete vs modify: never silently pick a side
            conflicts.append(MergeConflict(path=path, ours=o_bytes,
                                           theirs=t_bytes, base=b_bytes))
            conflict_files[path] = (merge3.OURS_MARK + merge3._ensure_nl(o_bytes)
                                    + merge3.SPLIT_MARK + merge3._ensure_nl(t_bytes)
                                    + merge3.THEIRS_MARK)
            if o_id is not None:
                merged_map[path] = o_id
            continue
        merged = merge3.merge_lines(b_bytes, o_bytes, t_bytes)
        if merged.clean:
            blob_id, _ = store.put(objstore.BLOB, merged.content)
            merged_map[path] = blob_id
        else:
            for hunk in merged.conflicts:
                conflicts.append(MergeConflict(path=path, ours=hunk.ours,
                                               theirs=hunk.theirs, base=hunk.base))
            conflict_files[path] = merged.with_markers()
            merged_map[path] = o_id  # index keeps ours until resolved

    if conflicts:
        if repo.head == ours:
            _stage_map(repo, merged_map)  # conflicted paths stay at ours
        record(CONFLICTS, len(conflicts))
        return MergeResult(outcome=CONFLICTS, conflicts=conflicts,
                           conflict_files=conflict_files)

    root = build_tree_from_map(store, merged_map)
    commit = objstore.Commit(tree=root, parents=(ours_tip, theirs_tip),
                             author=author, authored_at=int(merged_at),
                             message=message)
    commit_id, _ = store.put(objstore.COMMIT, objstore.encode_commit(commit))
    _cas_ref(repo, ours, ours_tip, commit_id)
    if repo.head == ours:
        repo.index = index_from_commit(repo, commit_id)
    record(CLEAN_MERGE, 0)
    return MergeResult(outcome=CLEAN_MERGE, commit_id=commit_id)


def _stage_map(repo: RepoState, blob_map: dict[str, str]) -> None:
    """Rebuild the index to exactly the given path -> blob map."""
    new_index = stage.Index()
    for path, blob_id in blob_map.items():
        size = len(objstore.load_blob(repo.objects, blob_id))
        new_index.set_entry(stage.IndexEntry(path=path, blob_id=blob_id, size=size, mtime=0))
    repo.index = new_index


# --- cloning ----------------------------------------------------------------

def clone_repository(source: RepoState, new_owner: str,
                     repo_id: str | None = None) -> RepoState:
    """New repo with identical refs/head/index; objects shared, not copied."""
    return RepoState(
        repo_id=repo_id or new_repo_id(),
        owners={new_owner},
        objects=source.objects,
        refs=dict(source.refs),
        head=source.head,
        index=source.index.copy(),
        assignment_id=source.assignment_id,
        last_pushed=None,
        merge_events=[],
    )
