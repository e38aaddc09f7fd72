"""Service operations: auth, assignments, enrollment, fetch/push, analytics.

Handlers are stateless; all shared state lives behind the backend.  A push
is transactional: every request object is re-hashed, the full ancestry and
tree closure of the new target must resolve, and the branch update is a
compare-and-swap — any failure leaves nothing observable behind (objects
persisted before a failed CAS are unreachable garbage by construction).
"""

from __future__ import annotations

import hashlib
import hmac
import re
import secrets
import time
from dataclasses import dataclass
from typing import Callable

from .. import analytics, history, objstore
from ..errors import (
    AuthFailed,
    CorruptObject,
    DeadlinePassed,
    Forbidden,
    InvalidDeadline,
    MissingObject,
    NonFastForward,
    Unauthorized,
    UnknownAssignment,
    UnknownCode,
    UnknownRepo,
    ValidationFailed,
    WeakPassword,
)
from .storage import MemoryBackend
from .types import (
    ROLE_INSTRUCTOR,
    ROLES,
    Assignment,
    Enrollment,
    PushRecord,
    PushRequest,
    Session,
    User,
    WireObject,
)

# Crockford base32: no I, L, O, U; short enough for a whiteboard
INVITE_ALPHABET = "0123456789ABCDEFGHJKMNPQRSTVWXYZ"
INVITE_LENGTH = 8

USERNAME_RE = re.compile(r"^[A-Za-z0-9_.-]{1,64}$")
MIN_PASSWORD_LENGTH = 8

DEFAULT_TOKEN_LIFETIME = 24 * 3600
PBKDF2_ITERATIONS = 50_000


def _gen_invite_code() -> str:
    return "".join(secrets.choice(INVITE_ALPHABET) for _ in range(INVITE_LENGTH))


@dataclass
class FetchResult:
    refs: dict[str, str]
    head: str
    objects: list[WireObject]


@dataclass
class SubmissionRow:
    username: str
    repo_id: str
    submitted: bool
    head_commit: str | None
    last_push_at: int | None
    late: bool

    def to_json_obj(self) -> dict:
        return {"username": self.username, "repo_id": self.repo_id,
                "submitted": self.submitted, "head_commit": self.head_commit,
                "last_push_at": self.last_push_at, "late": self.late}


class ServiceCore:
    def __init__(self, backend: MemoryBackend, clock: Callable[[], float] = time.time,
                 token_lifetime: int = DEFAULT_TOKEN_LIFETIME,
                 pbkdf2_iterations: int = PBKDF2_ITERATIONS):
        self.backend = backend
        self.clock = clock
        self.token_lifetime = token_lifetime
        self.pbkdf2_iterations = pbkdf2_iterations

    # --- credentials -------------------------------------------------------

    def _hash_password(self, password: str, salt: bytes) -> str:
        digest = hashlib.pbkdf2_hmac("sha256", password.encode("utf-8"), salt,
                                     self.pbkdf2_iterations)
        return digest.hex()

    def register_user(self, username: str, password: str, role: str) -> User:
        if not USERNAME_RE.match(username or ""):
            raise ValidationFailed(f"bad username {username!r}")
        if role not in ROLES:
            raise ValidationFailed(f"role must be one of {ROLES}")
        if len(password) < MIN_PASSWORD_LENGTH:
            raise WeakPassword(f"passwords need at least {MIN_PASSWORD_LENGTH} characters")
        salt = secrets.token_bytes(16)
        user = User(user_id="u" + secrets.token_hex(8), username=username, role=role,
                    salt=salt.hex(), pw_hash=self._hash_password(password, salt))
        self.backend.add_user(user)  # raises UsernameTaken
        return user

    def login(self, username: str, password: str) -> Session:
        user = self.backend.user_by_name(username)
        if user is None:
            # burn the same work as a real check so failures look uniform
            self._hash_password(password, b"\x00" * 16)
            raise AuthFailed("bad username or password")
        expected = user.pw_hash
        got = self._hash_password(password, bytes.fromhex(user.salt))
        if not hmac.compare_digest(expected, got):
            raise AuthFailed("bad username or password")
        session = Session(token=secrets.token_hex(32), user_id=user.user_id,
                          expires_at=int(self.clock()) + self.token_lifetime)
        self.backend.put_session(session)
        return session

    def logout(self, token: str) -> None:
        self.backend.drop_session(token)  # idempotent; unknown tokens acknowledge

    def _auth(self, token: str | None) -> User:
        if not token:
            raise Unauthorized("missing bearer token")
        session = self.backend.session(token)
        if session is None or session.expires_at < int(self.clock()):
            raise Unauthorized("token expired or revoked")
        user = self.backend.user(session.user_id)
        if user is None:
            raise Unauthorized("unknown user")
        return user

    # --- assignments ---------------------------------------------------------

    def create_assignment(self, token: str, title: str, deadline: int,
                          template_repo: str | None = None,
                          hard_cutoff: bool = False) -> Assignment:
        user = self._auth(token)
        if user.role != ROLE_INSTRUCTOR:
            raise Forbidden("only instructors create assignments")
        if not title:
            raise ValidationFailed("title must be nonempty")
        if deadline <= int(self.clock()):
            raise InvalidDeadline("deadline must be in the future")
        if template_repo is not None:
            template = self.backend.repo(template_repo)
            if template is None:
                raise UnknownRepo(f"no template repo {template_repo}")
            if user.username not in template.owners:
                raise Forbidden("template repo must belong to the instructor")
        assignment = Assignment(
            assignment_id="a" + secrets.token_hex(8), title=title,
            instructor_id=user.user_id, deadline=int(deadline),
            invite_code=_gen_invite_code(), template_repo=template_repo,
            hard_cutoff=hard_cutoff)
        while True:
            try:
                self.backend.add_assignment(assignment)
                return assignment
            except ValueError:  # invite code collision: regenerate
                assignment.invite_code = _gen_invite_code()

    def create_repo(self, token: str) -> history.RepoState:
        """Empty repo owned by the caller; instructors use this to seed templates."""
        user = self._auth(token)
        if user.role != ROLE_INSTRUCTOR:
            raise Forbidden("only instructors create bare repos")
        repo = history.RepoState(repo_id=history.new_repo_id(),
                                 owners={user.username},
                                 objects=self.backend.objects)
        self.backend.add_repo(repo)
        return repo

    def join_assignment(self, token: str, invite_code: str) -> Enrollment:
        user = self._auth(token)
        assignment = self.backend.assignment_by_code(invite_code)
        if assignment is None:
            raise UnknownCode(f"no assignment for code {invite_code!r}")
        if user.user_id == assignment.instructor_id:
            raise Forbidden("instructors cannot join their own assignment")
        existing = self.backend.enrollment(assignment.assignment_id, user.user_id)
        if existing is not None:
            return existing
        if assignment.template_repo is not None:
            template = self.backend.repo(assignment.template_repo)
            repo = history.clone_repository(template, user.username)
        else:
            repo = history.RepoState(repo_id=history.new_repo_id(),
                                     owners={user.username},
                                     objects=self.backend.objects)
        repo.assignment_id = assignment.assignment_id
        self.backend.add_repo(repo)
        enrollment = Enrollment(assignment_id=assignment.assignment_id,
                                student_id=user.user_id, repo_id=repo.repo_id,
                                joined_at=int(self.clock()))
        self.backend.add_enrollment(enrollment)
        return enrollment

    # --- repo access control ---------------------------------------------------

    def _repo_for(self, user: User, repo_id: str) -> history.RepoState:
        repo = self.backend.repo(repo_id)
        if repo is None:
            raise UnknownRepo(f"no repo {repo_id}")
        if user.username in repo.owners:
            return repo
        if repo.assignment_id is not None:
            assignment = self.backend.assignment(repo.assignment_id)
            if assignment is not None and assignment.instructor_id == user.user_id:
                return repo
        raise Unauthorized(f"{user.username} may not access repo {repo_id}")

    def _instructor_assignment(self, user: User, assignment_id: str) -> Assignment:
        assignment = self.backend.assignment(assignment_id)
        if assignment is None:
            raise UnknownAssignment(f"no assignment {assignment_id}")
        if assignment.instructor_id != user.user_id:
            raise Forbidden("only the assignment's instructor may do that")
        return assignment

    # --- fetch -------------------------------------------------------------------

    def fetch(self, token: str, repo_id: str) -> FetchResult:
        user = self._auth(token)
        repo = self._repo_for(user, repo_id)
        objects = [
            WireObject(id=oid, kind=kind, payload=payload)
            for oid, kind, payload in self._closure(dict(repo.refs))
        ]
        return FetchResult(refs=dict(sorted(repo.refs.items())), head=repo.head,
                           objects=objects)

    def _closure(self, refs: dict[str, str]) -> list[tuple[str, str, bytes]]:
        """Every object reachable from the refs, sorted by id."""
        seen: set[str] = set()
        out = []
        stack = sorted(refs.values())
        while stack:
            oid = stack.pop()
            if oid in seen:
                continue
            seen.add(oid)
            kind, payload = self.backend.get_object(oid)
            out.append((oid, kind, payload))
            if kind == objstore.COMMIT:
                commit = objstore.parse_commit(payload)
                stack.append(commit.tree)
                stack.extend(commit.parents)
            elif kind == objstore.TREE:
                stack.extend(e.id for e in objstore.parse_tree(payload).entries)
        return sorted(out, key=lambda item: item[0])

    # --- push ----------------------------------------------------------------------

    def push(self, token: str, req: PushRequest) -> PushRecord:
        user = self._auth(token)
        repo = self._repo_for(user, req.repo_id)
        history.validate_branch_name(req.branch)

        # (1) re-hash every request object; one mismatch rejects the push
        overlay: dict[str, tuple[str, bytes]] = {}
        for obj in req.objects:
            if obj.kind not in objstore.KINDS:
                raise CorruptObject(f"unknown object kind {obj.kind!r}")
            actual = objstore.hash_object(obj.kind, obj.payload)
            if actual != obj.id:
                raise CorruptObject(f"object claims {obj.id} but hashes to {actual}")
            overlay[obj.id] = (obj.kind, obj.payload)

        def lookup(oid: str) -> tuple[str, bytes] | None:
            if oid in overlay:
                return overlay[oid]
            if self.backend.has_object(oid):
                return self.backend.get_object(oid)
            return None

        # (2) full ancestry + tree closure of new_target must resolve
        self._check_closure(req.new_target, overlay, lookup)

        # (3)/(4) fast-forward-only: expected_old must be an ancestor
        if req.expected_old is not None:
            if not self._is_ancestor_combined(req.expected_old, req.new_target, lookup):
                raise NonFastForward(
                    f"{req.expected_old} is not an ancestor of {req.new_target}")

        received_at = int(self.clock())
        late = False
        if repo.assignment_id is not None:
            assignment = self.backend.assignment(repo.assignment_id)
            if assignment is not None:
                late = received_at > assignment.deadline
                if late and assignment.hard_cutoff:
                    raise DeadlinePassed("assignment deadline has passed")

        # failed pushes may leave unreachable objects behind; that is harmless
        # in a content-addressed store and invisible through fetch
        for obj in req.objects:
            self.backend.put_object(obj.kind, obj.payload)

        record = PushRecord(repo_id=req.repo_id, pusher=user.username,
                            branch=req.branch, new_target=req.new_target,
                            received_at=received_at, late=late)
        # CAS is the commit point; on RefConflict nothing observable changed
        self.backend.commit_push(req.repo_id, req.branch, req.expected_old,
                                 req.new_target, record)
        return record

    def _check_closure(self, new_target: str, overlay: dict,
                       lookup: Callable[[str], tuple[str, bytes] | None]) -> None:
        """Walk commits/trees/blobs from new_target; anything absent is fatal.

        Objects already on the server are not descended into: the
        connectivity invariant guarantees their closure is complete.
        """
        found = lookup(new_target)
        if found is None:
            raise MissingObject(f"new target {new_target} not supplied or stored")
        if found[0] != objstore.COMMIT:
            raise CorruptObject(f"new target {new_target} is a {found[0]}, not a commit")

        seen: set[str] = set()
        stack = [new_target]
        while stack:
            oid = stack.pop()
            if oid in seen or (oid not in overlay and self.backend.has_object(oid)):
                continue
            seen.add(oid)
            entry = lookup(oid)
            if entry is None:
                raise MissingObject(f"object {oid} referenced but not available")
            kind, payload = entry
            if kind == objstore.COMMIT:
                commit = objstore.parse_commit(payload)
                stack.append(commit.tree)
                stack.extend(commit.parents)
            elif kind == objstore.TREE:
                stack.extend(e.id for e in objstore.parse_tree(payload).entries)

    def _is_ancestor_combined(self, ancestor: str, descendant: str,
                              lookup: Callable[[str], tuple[str, bytes] | None]) -> bool:
        seen: set[str] = set()
        stack = [descendant]
        while stack:
            oid = stack.pop()
            if oid == ancestor:
                return True
            if oid in seen:
                continue
            seen.add(oid)
            entry = lookup(oid)
            if entry is None or entry[0] != objstore.COMMIT:
                return False
            stack.extend(objstore.parse_commit(entry[1]).parents)
        return False

    # --- instructor views ------------------------------------------------------------

    def list_submissions(self, token: str, assignment_id: str) -> list[SubmissionRow]:
        user = self._auth(token)
        self._instructor_assignment(user, assignment_id)
        rows = []
        for enrollment in self.backend.enrollments_for(assignment_id):
            student = self.backend.user(enrollment.student_id)
            repo = self.backend.repo(enrollment.repo_id)
            last = self.backend.latest_push(enrollment.repo_id)
            rows.append(SubmissionRow(
                username=student.username if student else enrollment.student_id,
                repo_id=enrollment.repo_id,
                submitted=last is not None,
                head_commit=repo.refs.get(repo.head) if repo else None,
                last_push_at=last.received_at if last else None,
                late=last.late if last else False,
            ))
        rows.sort(key=lambda r: r.username)
        return rows

    def similarity(self, token: str, assignment_id: str,
                   filename: str) -> analytics.SimilarityReport:
        """Pairwise similarity of `filename` across latest pushed commits."""
        user = self._auth(token)
        self._instructor_assignment(user, assignment_id)
        submissions: dict[str, tuple[str, bytes] | None] = {}
        for enrollment in self.backend.enrollments_for(assignment_id):
            student = self.backend.user(enrollment.student_id)
            name = student.username if student else enrollment.student_id
            last = self.backend.latest_push(enrollment.repo_id)
            if last is None:
                continue  # never submitted: not part of the matrix
            commit = objstore.load_commit(self.backend.objects, last.new_target)
            flat = objstore.flatten_tree(self.backend.objects, commit.tree)
            if filename in flat:
                blob_id = flat[filename]
                submissions[name] = (blob_id, objstore.load_blob(self.backend.objects, blob_id))
            else:
                submissions[name] = None
        return analytics.similarity_report(assignment_id, filename, submissions)

    def contributions(self, token: str, repo_id: str,
                      members: list[str]) -> analytics.ContributionReport:
        user = self._auth(token)
        repo = self._repo_for(user, repo_id)
        if not members:
            raise ValidationFailed("members list must be nonempty")
        return analytics.contribution_report(repo, members)

    def timing(self, token: str, assignment_id: str) -> analytics.TimingReport:
        user = self._auth(token)
        assignment = self._instructor_assignment(user, assignment_id)
        events = []
        for enrollment in self.backend.enrollments_for(assignment_id):
            for record in self.backend.push_records(enrollment.repo_id):
                events.append(analytics.PushEvent(repo_id=record.repo_id,
                                                  pusher=record.pusher,
                                                  received_at=record.received_at))
        events.sort(key=lambda e: e.received_at)
        return analytics.timing_report(assignment_id, assignment.deadline, events)

    def branch_activity(self, token: str, repo_id: str) -> analytics.BranchActivityReport:
        user = self._auth(token)
        repo = self._repo_for(user, repo_id)
        return analytics.branch_activity(repo)

    def merge_branches(self, token: str, repo_id: str, ours: str, theirs: str,
                       message: str) -> history.MergeResult:
        """Server-side merge; the outcome lands in the repo's merge event log."""
        user = self._auth(token)
        repo = self._repo_for(user, repo_id)
        with self.backend.mutex:  # serialize merges per backend
            # server repos have no staging activity: index mirrors the tip
            repo.index = history.index_from_commit(repo, repo.head_target())
            result = history.merge(repo, ours, theirs, user.username, message,
                                   merged_at=int(self.clock()))
            self.backend.add_repo(repo)  # write-through for file backends
        return result

    # --- integrity ---------------------------------------------------------------------

    def crawl(self) -> list[str]:
        """Verify every repo's refs resolve with complete closures.

        Returns human-readable problem strings; empty means healthy.
        """
        problems = []
        for repo_id in self.backend.repo_ids():
            repo = self.backend.repo(repo_id)
            for name, target in repo.refs.items():
                try:
                    for oid in history.reachable_commits(self.backend.objects, target):
                        commit = objstore.load_commit(self.backend.objects, oid)
                        for path, blob_id in objstore.flatten_tree(
                                self.backend.objects, commit.tree).items():
                            objstore.load_blob(self.backend.objects, blob_id)
                except Exception as exc:  # noqa: BLE001 - report, don't raise
                    problems.append(f"{repo_id}:{name}: {exc}")
        bad = self.backend.objects.verify()
        problems.extend(f"object {oid} fails re-hash" for oid in bad)
        return problems
