from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from classgit import history, objstore, stage
from classgit.errors import InvalidPath, PathNotStaged, PathUnknown

from conftest import commit_files


class TestNormalizePath:
    @pytest.mark.parametrize("raw", ["a.txt", "dir/sub/file.py", "weird name.txt"])
    def test_accepts(self, raw):
        assert stage.normalize_path(raw) == raw

    @pytest.mark.parametrize("raw", ["../x", "/abs", "a//b", "a/./b", "a\\b",
                                     "", "a/..", ".", "a\nb", "a\x00"])
    def test_rejects(self, raw):
        with pytest.raises(InvalidPath):
            stage.normalize_path(raw)


class TestStageFile:
    def test_definition(self, repo):
        entry = stage.stage_file(repo, "a.txt", b"hi")
        assert entry.path == "a.txt"
        assert entry.blob_id == objstore.hash_object("blob", b"hi")
        assert entry.size == 2

    def test_same_bytes_twice_no_physical_growth(self, repo):
        stage.stage_file(repo, "a.txt", b"same")
        physical = repo.objects.stats().physical_bytes
        entry2 = stage.stage_file(repo, "a.txt", b"same")
        assert repo.objects.stats().physical_bytes == physical
        assert entry2.blob_id == objstore.hash_object("blob", b"same")

    def test_traversal_rejected(self, repo):
        with pytest.raises(InvalidPath):
            stage.stage_file(repo, "../x", b"")

    def test_file_directory_conflict_rejected(self, repo):
        stage.stage_file(repo, "a/b", b"1")
        with pytest.raises(InvalidPath):
            stage.stage_file(repo, "a", b"2")
        with pytest.raises(InvalidPath):
            stage.stage_file(repo, "a/b/c", b"3")

    def test_entry_blob_always_resolvable(self, repo):
        for i in range(5):
            stage.stage_file(repo, f"f{i}.txt", bytes([i]) * 10)
        for entry in repo.index.entries():
            assert entry.blob_id in repo.objects


class TestUnstage:
    def test_new_file_removed(self, repo):
        stage.stage_file(repo, "f.txt", b"new")
        stage.unstage(repo, "f.txt")
        assert "f.txt" not in repo.index

    def test_unstage_all_is_head_fixpoint(self, repo):
        commit_files(repo, {"kept.txt": b"v1"})
        stage.stage_file(repo, "extra.txt", b"x")
        stage.stage_file(repo, "kept.txt", b"v2")
        stage.unstage(repo)
        assert repo.index.as_map() == stage.head_tree_map(repo)

    def test_committed_path_reset_to_head(self, repo):
        commit_files(repo, {"f.txt": b"v1"})
        stage.stage_file(repo, "f.txt", b"v2")
        stage.unstage(repo, "f.txt")
        assert repo.index.get("f.txt").blob_id == objstore.hash_object("blob", b"v1")

    def test_unknown_path(self, repo):
        with pytest.raises(PathNotStaged):
            stage.unstage(repo, "never.txt")

    def test_stage_unstage_restores_index_for_new_paths(self, repo):
        before = repo.index.as_map()
        stage.stage_file(repo, "tmp.txt", b"t")
        stage.unstage(repo, "tmp.txt")
        assert repo.index.as_map() == before

    def test_blobs_survive_unstage(self, repo):
        stage.stage_file(repo, "f.txt", b"content")
        blob_id = objstore.hash_object("blob", b"content")
        stage.unstage(repo, "f.txt")
        assert blob_id in repo.objects


class TestRestoreFile:
    def test_staged_bytes_win(self, repo):
        commit_files(repo, {"f.txt": b"committed"})
        stage.stage_file(repo, "f.txt", b"staged")
        assert stage.restore_file(repo, "f.txt") == b"staged"

    def test_falls_back_to_head(self, repo):
        commit_files(repo, {"f.txt": b"committed"})
        repo.index.remove("f.txt")
        assert stage.restore_file(repo, "f.txt") == b"committed"

    def test_unknown(self, repo):
        with pytest.raises(PathUnknown):
            stage.restore_file(repo, "ghost.txt")


class TestStatus:
    def test_clean_after_commit_and_push(self, repo):
        cid = commit_files(repo, {"a.txt": b"1", "d/b.txt": b"2"})
        repo.last_pushed = cid
        report = stage.status(repo, {"a.txt": b"1", "d/b.txt": b"2"})
        assert report.clean and report.ahead_count == 0

    def test_edit_without_staging_is_modified_only(self, repo):
        commit_files(repo, {"f.txt": b"old"})
        report = stage.status(repo, {"f.txt": b"edited"})
        assert report.modified == ["f.txt"]
        assert report.staged == []

    def test_stage_then_edit_again(self, repo):
        # hand-checked three-way: HEAD=v1, index=v2, worktree=v3
        commit_files(repo, {"f.txt": b"v1"})
        stage.stage_file(repo, "f.txt", b"v2")
        report = stage.status(repo, {"f.txt": b"v3"})
        assert report.staged == ["f.txt"]
        assert report.modified == ["f.txt"]

    def test_untracked_and_deleted(self, repo):
        commit_files(repo, {"a.txt": b"1"})
        report = stage.status(repo, {"new.txt": b"n"})
        assert report.untracked == ["new.txt"]
        assert report.deleted == ["a.txt"]

    def test_ahead_count_counts_unpushed_commits(self, repo):
        first = commit_files(repo, {"f.txt": b"1"})
        repo.last_pushed = first
        commit_files(repo, {"f.txt": b"2"})
        commit_files(repo, {"f.txt": b"3"})
        report = stage.status(repo, {"f.txt": b"3"})
        assert report.ahead_count == 2

    def test_accepts_precomputed_hashes(self, repo):
        commit_files(repo, {"f.txt": b"data"})
        blob_id = objstore.hash_object("blob", b"data")
        report = stage.status(repo, {"f.txt": blob_id})
        assert report.clean

    @given(seed=st.randoms(use_true_random=False))
    @settings(max_examples=30)
    def test_enumeration_order_never_matters(self, seed):
        store = objstore.MemoryObjectStore()
        repo = history.RepoState(repo_id="r", owners={"a"}, objects=store)
        commit_files(repo, {"a": b"1", "b": b"2", "c": b"3"}, author="a")
        work = [("a", b"1"), ("b", b"edited"), ("d", b"new")]
        seed.shuffle(work)
        report = stage.status(repo, dict(work))
        assert report.modified == ["b"]
        assert report.untracked == ["d"]
        assert report.deleted == ["c"]


class TestIndexSerialization:
    def test_json_round_trip(self, repo):
        stage.stage_file(repo, "b.txt", b"2", mtime=20)
        stage.stage_file(repo, "a.txt", b"1", mtime=10)
        obj = repo.index.to_json_obj()
        assert [e["path"] for e in obj] == ["a.txt", "b.txt"]  # sorted on disk
        restored = stage.Index.from_json_obj(obj)
        assert restored.as_map() == repo.index.as_map()
