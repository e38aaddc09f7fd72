"""REST surface over the service core.

JSON bodies, bearer tokens, and a uniform error envelope
``{"error": <machine code>, "detail": <human string>}``.
"""

from __future__ import annotations

import base64

from fastapi import Depends, FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .. import errors
from .core import PushRequest, ServiceCore, WireObject

STATUS_BY_ERROR: dict[type, int] = {
    errors.Unauthorized: 401,
    errors.AuthFailed: 401,
    errors.Forbidden: 403,
    errors.UnknownRepo: 404,
    errors.UnknownAssignment: 404,
    errors.UnknownCode: 404,
    errors.ObjectNotFound: 404,
    errors.UnknownBranch: 404,
    errors.UsernameTaken: 409,
    errors.RefConflict: 409,
    errors.NonFastForward: 409,
    errors.DeadlinePassed: 409,
    errors.BranchExists: 409,
    errors.WeakPassword: 422,
    errors.ValidationFailed: 422,
    errors.InvalidDeadline: 422,
    errors.CorruptObject: 422,
    errors.MissingObject: 422,
    errors.MalformedBody: 422,
    errors.PayloadTooLarge: 422,
    errors.InvalidName: 422,
    errors.InvalidPath: 422,
}


class RegisterBody(BaseModel):
    username: str
    password: str
    role: str


class LoginBody(BaseModel):
    username: str
    password: str


class AssignmentBody(BaseModel):
    title: str
    deadline: int
    template_repo: str | None = None
    hard_cutoff: bool = False


class JoinBody(BaseModel):
    invite_code: str


class WireObjectBody(BaseModel):
    id: str
    kind: str
    payload_b64: str


class PushBody(BaseModel):
    branch: str
    new_target: str
    expected_old: str | None = None
    objects: list[WireObjectBody] = []


def _encode_objects(objects: list[WireObject]) -> list[dict]:
    return [{"id": o.id, "kind": o.kind,
             "payload_b64": base64.b64encode(o.payload).decode("ascii")}
            for o in objects]


def create_app(core: ServiceCore) -> FastAPI:
    app = FastAPI(title="classgit", docs_url=None, redoc_url=None)

    @app.exception_handler(errors.ClassgitError)
    async def classgit_error(_request: Request, exc: errors.ClassgitError):
        status = STATUS_BY_ERROR.get(type(exc), 400)
        return JSONResponse(status_code=status,
                            content={"error": exc.code, "detail": exc.detail})

    @app.exception_handler(RequestValidationError)
    async def validation_error(_request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=422,
                            content={"error": "validation", "detail": str(exc.errors())})

    def bearer_token(request: Request) -> str | None:
        header = request.headers.get("authorization", "")
        if header.lower().startswith("bearer "):
            return header[len("bearer "):].strip()
        return None

    def require_token(request: Request) -> str:
        token = bearer_token(request)
        if not token:
            raise errors.Unauthorized("missing bearer token")
        return token

    # --- accounts ---------------------------------------------------------

    @app.post("/api/register", status_code=201)
    def register(body: RegisterBody):
        user = core.register_user(body.username, body.password, body.role)
        return {"user_id": user.user_id}

    @app.post("/api/login")
    def login(body: LoginBody):
        session = core.login(body.username, body.password)
        return {"token": session.token, "expires_at": session.expires_at}

    @app.post("/api/logout")
    def logout(token: str = Depends(require_token)):
        core.logout(token)
        return {}

    # --- assignments --------------------------------------------------------

    @app.post("/api/assignments", status_code=201)
    def create_assignment(body: AssignmentBody, token: str = Depends(require_token)):
        assignment = core.create_assignment(
            token, body.title, body.deadline,
            template_repo=body.template_repo, hard_cutoff=body.hard_cutoff)
        return {"assignment_id": assignment.assignment_id,
                "invite_code": assignment.invite_code}

    @app.post("/api/assignments/join")
    def join(body: JoinBody, token: str = Depends(require_token)):
        enrollment = core.join_assignment(token, body.invite_code)
        return {"repo_id": enrollment.repo_id}

    @app.post("/api/repos", status_code=201)
    def create_repo(token: str = Depends(require_token)):
        repo = core.create_repo(token)
        return {"repo_id": repo.repo_id}

    # --- sync ------------------------------------------------------------------

    @app.get("/api/repos/{repo_id}/fetch")
    def fetch(repo_id: str, token: str = Depends(require_token)):
        result = core.fetch(token, repo_id)
        return {
            "refs": [{"name": n, "target": t} for n, t in sorted(result.refs.items())],
            "head": result.head,
            "objects": _encode_objects(result.objects),
        }

    @app.post("/api/repos/{repo_id}/push")
    def push(repo_id: str, body: PushBody, token: str = Depends(require_token)):
        try:
            objects = [WireObject(id=o.id, kind=o.kind,
                                  payload=base64.b64decode(o.payload_b64))
                       for o in body.objects]
        except Exception:
            raise errors.CorruptObject("payload_b64 is not valid base64") from None
        record = core.push(token, PushRequest(
            repo_id=repo_id, branch=body.branch, new_target=body.new_target,
            expected_old=body.expected_old, objects=objects))
        return {"received_at": record.received_at, "late": record.late}

    # --- instructor views ----------------------------------------------------------

    @app.get("/api/assignments/{assignment_id}/submissions")
    def submissions(assignment_id: str, token: str = Depends(require_token)):
        rows = core.list_submissions(token, assignment_id)
        return [r.to_json_obj() for r in rows]

    @app.get("/api/assignments/{assignment_id}/similarity")
    def similarity(assignment_id: str, file: str = Query(...),
                   token: str = Depends(require_token)):
        return core.similarity(token, assignment_id, file).to_json_obj()

    @app.get("/api/repos/{repo_id}/analytics/contributions")
    def contributions(repo_id: str, members: str = Query(...),
                      token: str = Depends(require_token)):
        member_list = [m for m in members.split(",") if m]
        return core.contributions(token, repo_id, member_list).to_json_obj()

    @app.get("/api/assignments/{assignment_id}/timing")
    def timing(assignment_id: str, token: str = Depends(require_token)):
        return core.timing(token, assignment_id).to_json_obj()

    return app
