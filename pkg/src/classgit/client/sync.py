"""Client-side clone/fetch/push against the service."""

from __future__ import annotations

import shutil
from pathlib import Path

from .. import history, objstore
from ..errors import CorruptObject
from ..service.types import WireObject
from .api import ApiClient, RemoteRepo
from .checkout import Checkout, CheckoutError


def object_closure(store: objstore.ObjectStore, tips: list[str]) -> set[str]:
    """Ids of every commit, tree, and blob reachable from the given commits."""
    seen: set[str] = set()
    stack = [t for t in tips if t]
    while stack:
        oid = stack.pop()
        if oid in seen:
            continue
        seen.add(oid)
        kind, payload = store.get(oid)
        if kind == objstore.COMMIT:
            commit = objstore.parse_commit(payload)
            stack.append(commit.tree)
            stack.extend(commit.parents)
        elif kind == objstore.TREE:
            stack.extend(e.id for e in objstore.parse_tree(payload).entries)
    return seen


def store_wire_objects(store: objstore.ObjectStore, objects: list[WireObject]) -> int:
    """Verify and store fetched objects; returns how many were new locally."""
    new = 0
    for obj in objects:
        if objstore.hash_object(obj.kind, obj.payload) != obj.id:
            raise CorruptObject(f"fetched object {obj.id} fails re-hash")
        if obj.id not in store:
            store.put(obj.kind, obj.payload)
            new += 1
    return new


def clone(api: ApiClient, repo_id: str, target_dir: str | Path,
          owner: str) -> Checkout:
    """Materialize a fresh checkout from the server.

    Every received object is re-hashed before anything is written; a
    corrupt wire object aborts and removes the partially created
    directory.
    """
    target = Path(target_dir)
    if target.exists() and any(target.iterdir()):
        raise CheckoutError(f"directory {target} is not empty")
    remote = api.fetch_repo(repo_id)
    made_dir = not target.exists()
    target.mkdir(parents=True, exist_ok=True)
    try:
        checkout = Checkout.init(target, repo_id)
        store = checkout.objects()
        store_wire_objects(store, remote.objects)
        repo = checkout.load(owner)
        repo.refs = dict(remote.refs)
        repo.head = remote.head if remote.head in remote.refs or not remote.refs \
            else sorted(remote.refs)[0]
        head_target = repo.refs.get(repo.head)
        repo.index = history.index_from_commit(repo, head_target)
        repo.last_pushed = head_target
        checkout.save(repo)
        checkout.write_remote_refs(remote.refs)
        checkout.materialize_index(repo)
        return checkout
    except Exception:
        shutil.rmtree(target / ".mgit", ignore_errors=True)
        if made_dir:
            shutil.rmtree(target, ignore_errors=True)
        raise


def fetch_into(api: ApiClient, checkout: Checkout) -> tuple[RemoteRepo, int]:
    """Refresh local objects and the remote-ref cache; local branches stay put."""
    remote = api.fetch_repo(checkout.repo_id)
    new = store_wire_objects(checkout.objects(), remote.objects)
    checkout.write_remote_refs(remote.refs)
    return remote, new


def collect_push_objects(repo: history.RepoState,
                         remote_refs: dict[str, str]) -> list[WireObject]:
    """Exactly the objects the server lacks for the current head.

    The server is assumed to hold everything reachable from its refs (the
    connectivity invariant), so the difference of the two closures is the
    minimal upload set.
    """
    head_target = repo.head_target()
    if head_target is None:
        return []
    have = object_closure(repo.objects, list(remote_refs.values()))
    want = object_closure(repo.objects, [head_target])
    out = []
    for oid in sorted(want - have):
        kind, payload = repo.objects.get(oid)
        out.append(WireObject(id=oid, kind=kind, payload=payload))
    return out


def push(api: ApiClient, checkout: Checkout, repo: history.RepoState) -> dict | None:
    """Push the current branch; returns the server receipt, or None if up to date."""
    head_target = repo.head_target()
    if head_target is None:
        raise CheckoutError("nothing to push: no commits on the current branch")
    remote_refs = checkout.read_remote_refs()
    branch = repo.head
    if remote_refs.get(branch) == head_target:
        return None
    objects = collect_push_objects(repo, remote_refs)
    receipt = api.push(checkout.repo_id, branch, head_target,
                       expected_old=remote_refs.get(branch), objects=objects)
    remote_refs[branch] = head_target
    checkout.write_remote_refs(remote_refs)
    repo.last_pushed = head_target
    checkout.save(repo)
    return receipt
