"""Exception hierarchy shared by the storage core, service, and clients.

Every error carries a stable machine code (``code``) used verbatim in the
REST error envelope ``{"error": <code>, "detail": <human text>}``.
"""

from __future__ import annotations


class ClassgitError(Exception):
    """Base class; ``code`` is the wire-level machine code."""

    code = "error"

    def __init__(self, detail: str = ""):
        super().__init__(detail or self.__class__.__name__)
        self.detail = detail or self.__class__.__name__


# --- object store ---------------------------------------------------------

class PayloadTooLarge(ClassgitError):
    code = "payload_too_large"


class MalformedBody(ClassgitError):
    code = "malformed_body"


class ObjectNotFound(ClassgitError):
    code = "object_not_found"


# --- staging --------------------------------------------------------------

class InvalidPath(ClassgitError):
    code = "invalid_path"


class PathNotStaged(ClassgitError):
    code = "path_not_staged"


class PathUnknown(ClassgitError):
    code = "path_unknown"


# --- history --------------------------------------------------------------

class NothingToCommit(ClassgitError):
    code = "nothing_to_commit"


class EmptyMessage(ClassgitError):
    code = "empty_message"


class BranchExists(ClassgitError):
    code = "branch_exists"


class InvalidName(ClassgitError):
    code = "invalid_name"


class UnknownSource(ClassgitError):
    code = "unknown_source"


class UnknownBranch(ClassgitError):
    code = "unknown_branch"


class DirtyIndex(ClassgitError):
    code = "dirty_index"


class NoCommonAncestor(ClassgitError):
    code = "no_common_ancestor"


# --- service --------------------------------------------------------------

class Unauthorized(ClassgitError):
    code = "unauthorized"


class Forbidden(ClassgitError):
    code = "forbidden"


class AuthFailed(ClassgitError):
    code = "auth_failed"


class UsernameTaken(ClassgitError):
    code = "username_taken"


class WeakPassword(ClassgitError):
    code = "weak_password"


class ValidationFailed(ClassgitError):
    code = "validation"


class InvalidDeadline(ClassgitError):
    code = "invalid_deadline"


class DeadlinePassed(ClassgitError):
    code = "deadline_passed"


class UnknownCode(ClassgitError):
    code = "unknown_code"


class UnknownRepo(ClassgitError):
    code = "unknown_repo"


class UnknownAssignment(ClassgitError):
    code = "unknown_assignment"


class CorruptObject(ClassgitError):
    code = "corrupt_object"


class MissingObject(ClassgitError):
    code = "missing_object"


class RefConflict(ClassgitError):
    code = "ref_conflict"


class NonFastForward(ClassgitError):
    code = "non_fast_forward"


# --- bench ----------------------------------------------------------------

class BenchSetupFailed(ClassgitError):
    code = "bench_setup_failed"
