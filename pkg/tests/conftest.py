from __future__ import annotations

import pytest

from classgit import history, objstore, stage


@pytest.fixture
def store():
    return objstore.MemoryObjectStore()


@pytest.fixture
def repo(store):
    return history.RepoState(repo_id="r-test", owners={"alice"}, objects=store)


def commit_files(repo, files: dict[str, bytes], author="alice", message="snapshot",
                 authored_at=1_700_000_000):
    """Stage the given files on top of the current index and commit."""
    for path, content in files.items():
        stage.stage_file(repo, path, content)
    return history.create_commit(repo, author, message, authored_at)[0]
