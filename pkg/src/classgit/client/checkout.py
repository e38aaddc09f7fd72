"""On-disk checkout state under `.mgit/`.

Layout:
  .mgit/HEAD                  text: `ref: refs/heads/<name>`
  .mgit/refs/heads/<name>     40-hex commit id + LF
  .mgit/objects/<2>/<38>      canonical object bytes (shared format with the server)
  .mgit/index                 JSON array of entries, sorted by path
  .mgit/last_pushed           40-hex + LF, absent before the first push
  .mgit/remote_refs.json      cache of server ref targets per branch
  .mgit/repo                  server-side repository id
  .mgit/lock                  held while a mutating command runs
"""

from __future__ import annotations

import contextlib
import json
import os
from pathlib import Path

from .. import history, objstore, stage

MGIT_DIR = ".mgit"


class CheckoutError(Exception):
    pass


def find_root(start: Path | None = None) -> Path | None:
    """Walk up from `start` to the checkout root (directory holding .mgit)."""
    current = (start or Path.cwd()).resolve()
    for candidate in (current, *current.parents):
        if (candidate / MGIT_DIR).is_dir():
            return candidate
    return None


class Checkout:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.mgit = self.root / MGIT_DIR

    # --- lifecycle -----------------------------------------------------

    @classmethod
    def init(cls, root: str | Path, repo_id: str) -> "Checkout":
        checkout = cls(root)
        if checkout.mgit.exists():
            raise CheckoutError(f"{checkout.mgit} already exists")
        (checkout.mgit / "refs" / "heads").mkdir(parents=True)
        (checkout.mgit / "objects").mkdir()
        checkout._write_head(history.DEFAULT_BRANCH)
        checkout._write_index(stage.Index())
        (checkout.mgit / "repo").write_text(repo_id + "\n", encoding="utf-8")
        checkout.write_remote_refs({})
        return checkout

    @property
    def repo_id(self) -> str:
        return (self.mgit / "repo").read_text(encoding="utf-8").strip()

    def objects(self) -> objstore.FileObjectStore:
        return objstore.FileObjectStore(self.mgit / "objects")

    # --- pieces ----------------------------------------------------------

    def _write_head(self, branch: str) -> None:
        (self.mgit / "HEAD").write_text(f"ref: refs/heads/{branch}\n", encoding="utf-8")

    def _read_head(self) -> str:
        text = (self.mgit / "HEAD").read_text(encoding="utf-8").strip()
        prefix = "ref: refs/heads/"
        if not text.startswith(prefix):
            raise CheckoutError(f"unreadable HEAD: {text!r}")
        return text[len(prefix):]

    def _write_refs(self, refs: dict[str, str]) -> None:
        heads = self.mgit / "refs" / "heads"
        for stale in heads.iterdir():
            if stale.name not in refs:
                stale.unlink()
        for name, target in refs.items():
            (heads / name).write_text(target + "\n", encoding="utf-8")

    def _read_refs(self) -> dict[str, str]:
        heads = self.mgit / "refs" / "heads"
        refs = {}
        for path in heads.iterdir():
            refs[path.name] = path.read_text(encoding="utf-8").strip()
        return refs

    def _write_index(self, index: stage.Index) -> None:
        (self.mgit / "index").write_text(
            json.dumps(index.to_json_obj(), indent=1), encoding="utf-8")

    def _read_index(self) -> stage.Index:
        return stage.Index.from_json_obj(
            json.loads((self.mgit / "index").read_text(encoding="utf-8")))

    def _write_last_pushed(self, target: str | None) -> None:
        path = self.mgit / "last_pushed"
        if target is None:
            path.unlink(missing_ok=True)
        else:
            path.write_text(target + "\n", encoding="utf-8")

    def _read_last_pushed(self) -> str | None:
        path = self.mgit / "last_pushed"
        if not path.exists():
            return None
        return path.read_text(encoding="utf-8").strip() or None

    def write_remote_refs(self, refs: dict[str, str]) -> None:
        (self.mgit / "remote_refs.json").write_text(
            json.dumps(dict(sorted(refs.items())), indent=1), encoding="utf-8")

    def read_remote_refs(self) -> dict[str, str]:
        path = self.mgit / "remote_refs.json"
        if not path.exists():
            return {}
        return json.loads(path.read_text(encoding="utf-8"))

    # --- repo state ------------------------------------------------------

    def load(self, owner: str) -> history.RepoState:
        return history.RepoState(
            repo_id=self.repo_id,
            owners={owner},
            objects=self.objects(),
            refs=self._read_refs(),
            head=self._read_head(),
            index=self._read_index(),
            last_pushed=self._read_last_pushed(),
        )

    def save(self, repo: history.RepoState) -> None:
        self._write_refs(repo.refs)
        self._write_head(repo.head)
        self._write_index(repo.index)
        self._write_last_pushed(repo.last_pushed)

    # --- worktree ----------------------------------------------------------

    def snapshot_worktree(self) -> dict[str, bytes]:
        """Every non-ignored file, keyed by repo-relative path."""
        out: dict[str, bytes] = {}
        for dirpath, dirnames, filenames in os.walk(self.root):
            dirnames[:] = [d for d in dirnames if d != MGIT_DIR]
            for name in filenames:
                full = Path(dirpath) / name
                rel = full.relative_to(self.root).as_posix()
                out[rel] = full.read_bytes()
        return out

    def write_file(self, path: str, content: bytes) -> None:
        target = self.root / path
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_bytes(content)

    def materialize_index(self, repo: history.RepoState) -> None:
        """Write every indexed blob out to the working tree."""
        for entry in repo.index.entries():
            self.write_file(entry.path, objstore.load_blob(repo.objects, entry.blob_id))

    # --- locking --------------------------------------------------------------

    @contextlib.contextmanager
    def lock(self):
        """One mutating command at a time per checkout."""
        lock_path = self.mgit / "lock"
        try:
            fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise CheckoutError(
                f"another command holds {lock_path} (remove it if stale)") from None
        try:
            os.write(fd, str(os.getpid()).encode())
            os.close(fd)
            yield
        finally:
            lock_path.unlink(missing_ok=True)
