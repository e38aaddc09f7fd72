"""Service-side records: accounts, sessions, assignments, pushes."""

from __future__ import annotations

from dataclasses import dataclass, field

ROLE_STUDENT = "student"
ROLE_INSTRUCTOR = "instructor"
ROLES = (ROLE_STUDENT, ROLE_INSTRUCTOR)


@dataclass
class User:
    user_id: str
    username: str
    role: str
    salt: str       # hex; raw passwords are never persisted
    pw_hash: str    # hex PBKDF2 digest

    def to_json_obj(self) -> dict:
        return {"user_id": self.user_id, "username": self.username,
                "role": self.role, "salt": self.salt, "pw_hash": self.pw_hash}

    @classmethod
    def from_json_obj(cls, obj: dict) -> "User":
        return cls(**obj)


@dataclass
class Session:
    token: str
    user_id: str
    expires_at: int

    def to_json_obj(self) -> dict:
        return {"token": self.token, "user_id": self.user_id,
                "expires_at": self.expires_at}

    @classmethod
    def from_json_obj(cls, obj: dict) -> "Session":
        return cls(token=obj["token"], user_id=obj["user_id"],
                   expires_at=int(obj["expires_at"]))


@dataclass
class Assignment:
    assignment_id: str
    title: str
    instructor_id: str
    deadline: int
    invite_code: str
    template_repo: str | None = None
    hard_cutoff: bool = False   # reject (rather than flag) late pushes

    def to_json_obj(self) -> dict:
        return {"assignment_id": self.assignment_id, "title": self.title,
                "instructor_id": self.instructor_id, "deadline": self.deadline,
                "invite_code": self.invite_code, "template_repo": self.template_repo,
                "hard_cutoff": self.hard_cutoff}

    @classmethod
    def from_json_obj(cls, obj: dict) -> "Assignment":
        return cls(assignment_id=obj["assignment_id"], title=obj["title"],
                   instructor_id=obj["instructor_id"], deadline=int(obj["deadline"]),
                   invite_code=obj["invite_code"],
                   template_repo=obj.get("template_repo"),
                   hard_cutoff=bool(obj.get("hard_cutoff", False)))


@dataclass
class Enrollment:
    assignment_id: str
    student_id: str
    repo_id: str
    joined_at: int

    def to_json_obj(self) -> dict:
        return {"assignment_id": self.assignment_id, "student_id": self.student_id,
                "repo_id": self.repo_id, "joined_at": self.joined_at}

    @classmethod
    def from_json_obj(cls, obj: dict) -> "Enrollment":
        return cls(assignment_id=obj["assignment_id"], student_id=obj["student_id"],
                   repo_id=obj["repo_id"], joined_at=int(obj["joined_at"]))


@dataclass(frozen=True)
class WireObject:
    """One object on the push/fetch wire: claimed id, kind, raw payload."""

    id: str
    kind: str
    payload: bytes


@dataclass
class PushRequest:
    repo_id: str
    branch: str
    new_target: str
    expected_old: str | None = None
    objects: list[WireObject] = field(default_factory=list)


@dataclass
class PushRecord:
    """Append-only log row; receive time comes from the server clock."""

    repo_id: str
    pusher: str
    branch: str
    new_target: str
    received_at: int
    late: bool

    def to_json_obj(self) -> dict:
        return {"repo_id": self.repo_id, "pusher": self.pusher,
                "branch": self.branch, "new_target": self.new_target,
                "received_at": self.received_at, "late": self.late}

    @classmethod
    def from_json_obj(cls, obj: dict) -> "PushRecord":
        return cls(repo_id=obj["repo_id"], pusher=obj["pusher"],
                   branch=obj["branch"], new_target=obj["new_target"],
                   received_at=int(obj["received_at"]), late=bool(obj["late"]))
