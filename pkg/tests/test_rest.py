from __future__ import annotations

import base64

import pytest
from fastapi.testclient import TestClient

from classgit import objstore
from classgit.service import MemoryBackend, ServiceCore
from classgit.service.rest import create_app

from test_service import FakeClock, build_commit_objects


@pytest.fixture
def clock():
    return FakeClock()


@pytest.fixture
def client(clock):
    core = ServiceCore(MemoryBackend(), clock=clock, pbkdf2_iterations=1000,
                       token_lifetime=30 * 86400)
    return TestClient(create_app(core), raise_server_exceptions=False)


def register_and_login(client, username, role="student", password="password-123"):
    r = client.post("/api/register", json={"username": username,
                                           "password": password, "role": role})
    assert r.status_code == 201, r.text
    r = client.post("/api/login", json={"username": username, "password": password})
    assert r.status_code == 200
    return r.json()["token"]


def auth(token):
    return {"Authorization": f"Bearer {token}"}


def wire_objects(objects):
    return [{"id": o.id, "kind": o.kind,
             "payload_b64": base64.b64encode(o.payload).decode()} for o in objects]


@pytest.fixture
def instructor(client):
    return register_and_login(client, "prof", role="instructor")


@pytest.fixture
def student(client):
    return register_and_login(client, "ada")


def create_assignment(client, instructor, clock, **extra):
    body = {"title": "hw1", "deadline": int(clock()) + 14 * 86400, **extra}
    r = client.post("/api/assignments", json=body, headers=auth(instructor))
    assert r.status_code == 201, r.text
    return r.json()


class TestAccountsApi:
    def test_register_duplicate_is_409(self, client):
        register_and_login(client, "dup")
        r = client.post("/api/register", json={"username": "dup",
                                               "password": "password-123",
                                               "role": "student"})
        assert r.status_code == 409
        assert r.json() == {"error": "username_taken", "detail": r.json()["detail"]}

    def test_login_failure_is_401(self, client):
        register_and_login(client, "ada")
        r = client.post("/api/login", json={"username": "ada", "password": "nope-nope"})
        assert r.status_code == 401
        assert r.json()["error"] == "auth_failed"

    def test_weak_password_is_422(self, client):
        r = client.post("/api/register", json={"username": "x", "password": "a",
                                               "role": "student"})
        assert r.status_code == 422
        assert r.json()["error"] == "weak_password"

    def test_logout_then_use_is_401(self, client, student):
        assert client.post("/api/logout", headers=auth(student)).status_code == 200
        r = client.post("/api/assignments/join", json={"invite_code": "AAAAAAAA"},
                        headers=auth(student))
        assert r.status_code == 401
        assert r.json()["error"] == "unauthorized"

    def test_missing_token_is_401_everywhere(self, client):
        for method, path, body in [
            ("post", "/api/logout", {}),
            ("post", "/api/assignments", {"title": "t", "deadline": 1}),
            ("post", "/api/assignments/join", {"invite_code": "x"}),
            ("post", "/api/repos", {}),
            ("get", "/api/repos/r1/fetch", None),
            ("post", "/api/repos/r1/push", {"branch": "main", "new_target": "0" * 40}),
            ("get", "/api/assignments/a1/submissions", None),
            ("get", "/api/assignments/a1/similarity?file=f.py", None),
            ("get", "/api/repos/r1/analytics/contributions?members=a", None),
            ("get", "/api/assignments/a1/timing", None),
        ]:
            r = getattr(client, method)(path, json=body) if body is not None \
                else getattr(client, method)(path)
            assert r.status_code == 401, f"{method} {path}: {r.status_code}"
            assert r.json()["error"] == "unauthorized"

    def test_malformed_json_body_is_422_envelope(self, client, instructor):
        r = client.post("/api/assignments", json={"title": "t"},
                        headers=auth(instructor))
        assert r.status_code == 422
        assert r.json()["error"] == "validation"


class TestAssignmentApi:
    def test_create_and_join_round_trip(self, client, instructor, student, clock):
        created = create_assignment(client, instructor, clock)
        assert len(created["invite_code"]) == 8
        r = client.post("/api/assignments/join",
                        json={"invite_code": created["invite_code"]},
                        headers=auth(student))
        assert r.status_code == 200
        repo_id = r.json()["repo_id"]
        again = client.post("/api/assignments/join",
                            json={"invite_code": created["invite_code"]},
                            headers=auth(student))
        assert again.json()["repo_id"] == repo_id

    def test_student_create_is_403(self, client, student, clock):
        r = client.post("/api/assignments",
                        json={"title": "hw", "deadline": int(clock()) + 100},
                        headers=auth(student))
        assert r.status_code == 403

    def test_unknown_code_is_404(self, client, student):
        r = client.post("/api/assignments/join", json={"invite_code": "ZZZZZZZZ"},
                        headers=auth(student))
        assert r.status_code == 404
        assert r.json()["error"] == "unknown_code"

    def test_past_deadline_is_422(self, client, instructor, clock):
        r = client.post("/api/assignments",
                        json={"title": "hw", "deadline": int(clock()) - 5},
                        headers=auth(instructor))
        assert r.status_code == 422
        assert r.json()["error"] == "invalid_deadline"


class TestPushFetchApi:
    def join(self, client, instructor, student, clock):
        created = create_assignment(client, instructor, clock)
        r = client.post("/api/assignments/join",
                        json={"invite_code": created["invite_code"]},
                        headers=auth(student))
        return created, r.json()["repo_id"]

    def test_push_then_fetch_round_trip(self, client, instructor, student, clock):
        _, repo_id = self.join(client, instructor, student, clock)
        cid, objects = build_commit_objects({"f.py": b"pass\n"})
        r = client.post(f"/api/repos/{repo_id}/push",
                        json={"branch": "main", "new_target": cid,
                              "objects": wire_objects(objects)},
                        headers=auth(student))
        assert r.status_code == 200, r.text
        assert r.json()["late"] is False
        fetched = client.get(f"/api/repos/{repo_id}/fetch", headers=auth(student)).json()
        assert fetched["refs"] == [{"name": "main", "target": cid}]
        assert fetched["head"] == "main"
        for obj in fetched["objects"]:
            payload = base64.b64decode(obj["payload_b64"])
            assert objstore.hash_object(obj["kind"], payload) == obj["id"]

    def test_ref_conflict_is_409(self, client, instructor, student, clock):
        _, repo_id = self.join(client, instructor, student, clock)
        cid, objects = build_commit_objects({"f.py": b"pass\n"})
        body = {"branch": "main", "new_target": cid, "objects": wire_objects(objects)}
        assert client.post(f"/api/repos/{repo_id}/push", json=body,
                           headers=auth(student)).status_code == 200
        r = client.post(f"/api/repos/{repo_id}/push", json={
            "branch": "main", "new_target": cid, "expected_old": None,
            "objects": []}, headers=auth(student))
        assert r.status_code == 409
        assert r.json()["error"] == "ref_conflict"

    def test_corrupt_object_is_422(self, client, instructor, student, clock):
        _, repo_id = self.join(client, instructor, student, clock)
        cid, objects = build_commit_objects({"f.py": b"pass\n"})
        wired = wire_objects(objects)
        wired[0]["payload_b64"] = base64.b64encode(b"tampered").decode()
        r = client.post(f"/api/repos/{repo_id}/push",
                        json={"branch": "main", "new_target": cid, "objects": wired},
                        headers=auth(student))
        assert r.status_code == 422
        assert r.json()["error"] == "corrupt_object"

    def test_missing_object_is_422(self, client, instructor, student, clock):
        _, repo_id = self.join(client, instructor, student, clock)
        cid, objects = build_commit_objects({"f.py": b"pass\n"})
        partial = wire_objects([o for o in objects if o.kind != "blob"])
        r = client.post(f"/api/repos/{repo_id}/push",
                        json={"branch": "main", "new_target": cid, "objects": partial},
                        headers=auth(student))
        assert r.status_code == 422
        assert r.json()["error"] == "missing_object"
        assert "detail" in r.json()

    def test_unknown_repo_is_404(self, client, student):
        r = client.get("/api/repos/rmissing/fetch", headers=auth(student))
        assert r.status_code == 404
        assert r.json()["error"] == "unknown_repo"


class TestAnalyticsApi:
    def seed(self, client, instructor, clock, files_by_student):
        created = create_assignment(client, instructor, clock)
        repos = {}
        for i, (name, files) in enumerate(files_by_student.items()):
            token = register_and_login(client, name)
            r = client.post("/api/assignments/join",
                            json={"invite_code": created["invite_code"]},
                            headers=auth(token))
            repos[name] = r.json()["repo_id"]
            if files:
                cid, objects = build_commit_objects(files, author=name,
                                                    authored_at=700 + i)
                client.post(f"/api/repos/{repos[name]}/push",
                            json={"branch": "main", "new_target": cid,
                                  "objects": wire_objects(objects)},
                            headers=auth(token))
        return created, repos

    def test_submissions_rows(self, client, instructor, clock):
        created, _ = self.seed(client, instructor, clock,
                               {"amy": {"f.py": b"a\n"}, "zoe": None})
        r = client.get(f"/api/assignments/{created['assignment_id']}/submissions",
                       headers=auth(instructor))
        assert r.status_code == 200
        rows = r.json()
        assert [row["username"] for row in rows] == ["amy", "zoe"]
        assert rows[0]["submitted"] and not rows[1]["submitted"]

    def test_similarity_json(self, client, instructor, clock):
        same = b"x = 1\ny = 2\n"
        created, _ = self.seed(client, instructor, clock,
                               {"amy": {"cnn.py": same}, "ben": {"cnn.py": same}})
        r = client.get(f"/api/assignments/{created['assignment_id']}/similarity",
                       params={"file": "cnn.py"}, headers=auth(instructor))
        assert r.status_code == 200
        body = r.json()
        assert body["matrix"] == [{"a": "amy", "b": "ben", "score": 1.0}]
        assert body["bands"] == {"amy": "high", "ben": "high"}

    def test_similarity_requires_file_param(self, client, instructor, clock):
        created, _ = self.seed(client, instructor, clock, {"amy": {"f.py": b"a\n"}})
        r = client.get(f"/api/assignments/{created['assignment_id']}/similarity",
                       headers=auth(instructor))
        assert r.status_code == 422

    def test_contributions_json(self, client, instructor, clock):
        _, repos = self.seed(client, instructor, clock, {"amy": {"f.py": b"a\n"}})
        r = client.get(f"/api/repos/{repos['amy']}/analytics/contributions",
                       params={"members": "amy,ben"}, headers=auth(instructor))
        assert r.status_code == 200
        assert r.json()["counts"] == {"amy": 1, "ben": 0}

    def test_timing_json(self, client, instructor, clock):
        created, _ = self.seed(client, instructor, clock, {"amy": {"f.py": b"a\n"}})
        r = client.get(f"/api/assignments/{created['assignment_id']}/timing",
                       headers=auth(instructor))
        assert r.status_code == 200
        body = r.json()
        assert body["total_pushes"] == 1
        assert body["late"] == []

    def test_student_blocked_from_instructor_views(self, client, instructor, clock):
        created, _ = self.seed(client, instructor, clock, {"amy": {"f.py": b"a\n"}})
        amy = client.post("/api/login", json={"username": "amy",
                                              "password": "password-123"}).json()["token"]
        for path in (f"/api/assignments/{created['assignment_id']}/submissions",
                     f"/api/assignments/{created['assignment_id']}/timing"):
            assert client.get(path, headers=auth(amy)).status_code == 403
