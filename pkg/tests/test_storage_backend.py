"""File-backed persistence: state survives a process restart."""

from __future__ import annotations

import pytest

from classgit.service import FileBackend, ServiceCore
from classgit.service.types import PushRequest

from test_service import FakeClock, build_commit_objects


@pytest.fixture
def clock():
    return FakeClock()


def make_core(path, clock):
    return ServiceCore(FileBackend(path), clock=clock, pbkdf2_iterations=1000)


class TestFileBackend:
    def test_full_state_survives_restart(self, tmp_path, clock):
        store_dir = tmp_path / "data"
        core = make_core(store_dir, clock)
        core.register_user("prof", "teaching-pass", "instructor")
        instructor = core.login("prof", "teaching-pass").token
        assignment = core.create_assignment(instructor, "hw1", int(clock()) + 86400)
        core.register_user("ada", "learning-pass", "student")
        student = core.login("ada", "learning-pass").token
        repo_id = core.join_assignment(student, assignment.invite_code).repo_id
        cid, objects = build_commit_objects({"f.py": b"persisted\n"})
        core.push(student, PushRequest(repo_id=repo_id, branch="main",
                                       new_target=cid, objects=objects))

        # simulate a restart: brand-new backend over the same directory
        reborn = make_core(store_dir, clock)
        assert reborn.backend.user_by_name("ada").role == "student"
        assert reborn.backend.assignment(assignment.assignment_id).title == "hw1"
        repo = reborn.backend.repo(repo_id)
        assert repo.refs == {"main": cid}
        assert reborn.backend.latest_push(repo_id).new_target == cid
        # sessions persisted too: the old token still works
        fetched = reborn.fetch(student, repo_id)
        assert {o.id for o in fetched.objects} >= {cid}
        assert reborn.crawl() == []

    def test_objects_shared_across_repos_on_disk(self, tmp_path, clock):
        core = make_core(tmp_path / "data", clock)
        core.register_user("prof", "teaching-pass", "instructor")
        instructor = core.login("prof", "teaching-pass").token
        assignment = core.create_assignment(instructor, "hw", int(clock()) + 86400)
        shared = b"identical starter code\n" * 32
        for name in ("s1", "s2", "s3"):
            core.register_user(name, "password-123", "student")
            token = core.login(name, "password-123").token
            repo_id = core.join_assignment(token, assignment.invite_code).repo_id
            cid, objects = build_commit_objects({"starter.py": shared}, author=name)
            core.push(token, PushRequest(repo_id=repo_id, branch="main",
                                         new_target=cid, objects=objects))
        blob_files = list((tmp_path / "data" / "objects").glob("*/*"))
        blobs = [p for p in blob_files if p.read_bytes().startswith(b"blob ")]
        assert len(blobs) == 1  # one physical copy for three students

    def test_corrupt_state_file_raises(self, tmp_path, clock):
        store_dir = tmp_path / "data"
        make_core(store_dir, clock)
        (store_dir / "state.json").write_text("{not json", encoding="utf-8")
        with pytest.raises(Exception):
            make_core(store_dir, clock)
