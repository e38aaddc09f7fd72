"""Persistence behind the service: in-memory for tests, file-backed to run.

The backend owns all shared state and exposes coarse, individually-atomic
methods; `commit_push` is the transaction boundary of the push protocol
(compare-and-swap ref update plus the push record, together or not at
all).  Object payloads always live in a content-addressed store shared by
every repository, which is what makes cross-student deduplication work.
"""

from __future__ import annotations

import json
import os
import threading
from pathlib import Path

from .. import history, objstore, stage
from ..errors import RefConflict, UnknownRepo, UsernameTaken
from .types import Assignment, Enrollment, PushRecord, Session, User


class MemoryBackend:
    """Authoritative in-process state; every public method is atomic."""

    def __init__(self):
        self._mu = threading.RLock()
        self.mutex = self._mu  # for callers composing multi-step mutations
        self.objects: objstore.ObjectStore = self._make_object_store()
        self._users: dict[str, User] = {}          # by user_id
        self._usernames: dict[str, str] = {}        # username -> user_id
        self._sessions: dict[str, Session] = {}
        self._assignments: dict[str, Assignment] = {}
        self._codes: dict[str, str] = {}             # invite code -> assignment_id
        self._enrollments: dict[tuple[str, str], Enrollment] = {}
        self._repos: dict[str, history.RepoState] = {}
        self._push_records: list[PushRecord] = []

    def _make_object_store(self) -> objstore.ObjectStore:
        return objstore.MemoryObjectStore()

    def _persist(self) -> None:
        pass  # memory backend keeps nothing across processes

    # --- users / sessions ------------------------------------------------
    def add_user(self, user: User) -> None:
        with self._mu:
            if user.username in self._usernames:
                raise UsernameTaken(f"username {user.username!r} is taken")
            self._users[user.user_id] = user
            self._usernames[user.username] = user.user_id
            self._persist()

    def user_by_name(self, username: str) -> User | None:
        with self._mu:
            uid = self._usernames.get(username)
            return self._users.get(uid) if uid else None

    def user(self, user_id: str) -> User | None:
        with self._mu:
            return self._users.get(user_id)

    def put_session(self, session: Session) -> None:
        with self._mu:
            self._sessions[session.token] = session
            self._persist()

    def session(self, token: str) -> Session | None:
        with self._mu:
            return self._sessions.get(token)

    def drop_session(self, token: str) -> None:
        with self._mu:
            self._sessions.pop(token, None)
            self._persist()

    # --- assignments / enrollments ----------------------------------------
    def add_assignment(self, assignment: Assignment) -> None:
        with self._mu:
            if assignment.invite_code in self._codes:
                raise ValueError("invite code collision")
            self._assignments[assignment.assignment_id] = assignment
            self._codes[assignment.invite_code] = assignment.assignment_id
            self._persist()

    def assignment(self, assignment_id: str) -> Assignment | None:
        with self._mu:
            return self._assignments.get(assignment_id)

    def assignment_by_code(self, code: str) -> Assignment | None:
        with self._mu:
            aid = self._codes.get(code)
            return self._assignments.get(aid) if aid else None

    def add_enrollment(self, enrollment: Enrollment) -> None:
        with self._mu:
            key = (enrollment.assignment_id, enrollment.student_id)
            self._enrollments[key] = enrollment
            self._persist()

    def enrollment(self, assignment_id: str, student_id: str) -> Enrollment | None:
        with self._mu:
            return self._enrollments.get((assignment_id, student_id))

    def enrollments_for(self, assignment_id: str) -> list[Enrollment]:
        with self._mu:
            return [e for e in self._enrollments.values()
                    if e.assignment_id == assignment_id]

    # --- repos -------------------------------------------------------------
    def add_repo(self, repo: history.RepoState) -> None:
        with self._mu:
            self._repos[repo.repo_id] = repo
            self._persist()

    def repo(self, repo_id: str) -> history.RepoState | None:
        with self._mu:
            return self._repos.get(repo_id)

    def repo_ids(self) -> list[str]:
        with self._mu:
            return sorted(self._repos)

    def record_merge_event(self, repo_id: str, event: history.MergeEvent) -> None:
        with self._mu:
            repo = self._repos.get(repo_id)
            if repo is None:
                raise UnknownRepo(f"no repo {repo_id}")
            repo.merge_events.append(event)
            self._persist()

    # --- push transaction ----------------------------------------------------
    def put_object(self, kind: str, payload: bytes) -> tuple[str, bool]:
        return self.objects.put(kind, payload)

    def has_object(self, oid: str) -> bool:
        return oid in self.objects

    def get_object(self, oid: str) -> tuple[str, bytes]:
        return self.objects.get(oid)

    def commit_push(self, repo_id: str, branch: str, expected_old: str | None,
                    new_target: str, record: PushRecord) -> None:
        """Ref CAS + record append, atomically; raises RefConflict on a lost race."""
        with self._mu:
            repo = self._repos.get(repo_id)
            if repo is None:
                raise UnknownRepo(f"no repo {repo_id}")
            current = repo.refs.get(branch)
            if current != expected_old:
                raise RefConflict(
                    f"{branch}: expected {expected_old or 'unborn'}, found {current}")
            repo.refs[branch] = new_target
            self._push_records.append(record)
            self._persist()

    def push_records(self, repo_id: str | None = None) -> list[PushRecord]:
        with self._mu:
            if repo_id is None:
                return list(self._push_records)
            return [r for r in self._push_records if r.repo_id == repo_id]

    def latest_push(self, repo_id: str) -> PushRecord | None:
        with self._mu:
            records = [r for r in self._push_records if r.repo_id == repo_id]
            return records[-1] if records else None


def _repo_to_json(repo: history.RepoState) -> dict:
    return {
        "repo_id": repo.repo_id,
        "owners": sorted(repo.owners),
        "refs": dict(sorted(repo.refs.items())),
        "head": repo.head,
        "index": repo.index.to_json_obj(),
        "assignment_id": repo.assignment_id,
        "last_pushed": repo.last_pushed,
        "merge_events": [e.to_json_obj() for e in repo.merge_events],
    }


def _repo_from_json(obj: dict, objects: objstore.ObjectStore) -> history.RepoState:
    return history.RepoState(
        repo_id=obj["repo_id"],
        owners=set(obj["owners"]),
        objects=objects,
        refs=dict(obj["refs"]),
        head=obj["head"],
        index=stage.Index.from_json_obj(obj["index"]),
        assignment_id=obj.get("assignment_id"),
        last_pushed=obj.get("last_pushed"),
        merge_events=[history.MergeEvent.from_json_obj(e)
                      for e in obj.get("merge_events", [])],
    )


class FileBackend(MemoryBackend):
    """Write-through file persistence: objects on disk, metadata snapshot.

    The metadata snapshot is rewritten via temp-file + rename, so a crash
    leaves either the old or the new state, never a torn one.
    """

    STATE_FILE = "state.json"

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        super().__init__()
        self._load()

    def _make_object_store(self) -> objstore.ObjectStore:
        return objstore.FileObjectStore(Path(self.root) / "objects")

    def _persist(self) -> None:
        state = {
            "users": [u.to_json_obj() for u in self._users.values()],
            "sessions": [s.to_json_obj() for s in self._sessions.values()],
            "assignments": [a.to_json_obj() for a in self._assignments.values()],
            "enrollments": [e.to_json_obj() for e in self._enrollments.values()],
            "repos": [_repo_to_json(r) for r in self._repos.values()],
            "push_records": [r.to_json_obj() for r in self._push_records],
        }
        target = self.root / self.STATE_FILE
        tmp = target.with_suffix(f".tmp{os.getpid()}")
        tmp.write_text(json.dumps(state, indent=1), encoding="utf-8")
        os.replace(tmp, target)

    def _load(self) -> None:
        target = self.root / self.STATE_FILE
        if not target.exists():
            return
        state = json.loads(target.read_text(encoding="utf-8"))
        for obj in state.get("users", []):
            user = User.from_json_obj(obj)
            self._users[user.user_id] = user
            self._usernames[user.username] = user.user_id
        for obj in state.get("sessions", []):
            session = Session.from_json_obj(obj)
            self._sessions[session.token] = session
        for obj in state.get("assignments", []):
            assignment = Assignment.from_json_obj(obj)
            self._assignments[assignment.assignment_id] = assignment
            self._codes[assignment.invite_code] = assignment.assignment_id
        for obj in state.get("enrollments", []):
            enrollment = Enrollment.from_json_obj(obj)
            self._enrollments[(enrollment.assignment_id, enrollment.student_id)] = enrollment
        for obj in state.get("repos", []):
            repo = _repo_from_json(obj, self.objects)
            self._repos[repo.repo_id] = repo
        self._push_records = [PushRecord.from_json_obj(o)
                              for o in state.get("push_records", [])]
