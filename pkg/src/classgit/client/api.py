"""HTTP client for the submission service's REST protocol."""

from __future__ import annotations

import base64
from dataclasses import dataclass

import requests

from ..service.types import WireObject


class TransportError(Exception):
    """Network-level failure or a 5xx: the server never answered properly."""


@dataclass
class ApiError(Exception):
    """A structured error envelope from the server."""

    status: int
    code: str
    detail: str

    def __str__(self):
        return f"{self.code}: {self.detail}"


@dataclass
class RemoteRepo:
    refs: dict[str, str]
    head: str
    objects: list[WireObject]


class ApiClient:
    def __init__(self, base_url: str, token: str | None = None,
                 timeout: float = 30.0):
        self.base_url = base_url.rstrip("/")
        self.token = token
        self.timeout = timeout
        self._session = requests.Session()

    def _headers(self) -> dict[str, str]:
        if self.token:
            return {"Authorization": f"Bearer {self.token}"}
        return {}

    def _request(self, method: str, path: str, json_body=None, params=None) -> dict | list:
        url = self.base_url + path
        try:
            response = self._session.request(method, url, json=json_body,
                                             params=params, headers=self._headers(),
                                             timeout=self.timeout)
        except requests.RequestException as exc:
            raise TransportError(f"{method} {url}: {exc}") from exc
        if response.status_code >= 500:
            raise TransportError(f"{method} {url}: server error {response.status_code}")
        if response.status_code >= 400:
            try:
                body = response.json()
                raise ApiError(status=response.status_code,
                               code=body.get("error", "error"),
                               detail=str(body.get("detail", "")))
            except ValueError:
                raise ApiError(status=response.status_code, code="error",
                               detail=response.text) from None
        return response.json()

    # --- accounts -----------------------------------------------------

    def register(self, username: str, password: str, role: str) -> str:
        body = self._request("POST", "/api/register",
                             {"username": username, "password": password, "role": role})
        return body["user_id"]

    def login(self, username: str, password: str) -> str:
        body = self._request("POST", "/api/login",
                             {"username": username, "password": password})
        self.token = body["token"]
        return self.token

    def logout(self) -> None:
        self._request("POST", "/api/logout", {})
        self.token = None

    # --- assignments ----------------------------------------------------

    def create_assignment(self, title: str, deadline: int,
                          template_repo: str | None = None,
                          hard_cutoff: bool = False) -> dict:
        return self._request("POST", "/api/assignments", {
            "title": title, "deadline": deadline,
            "template_repo": template_repo, "hard_cutoff": hard_cutoff})

    def join(self, invite_code: str) -> str:
        return self._request("POST", "/api/assignments/join",
                             {"invite_code": invite_code})["repo_id"]

    def create_repo(self) -> str:
        return self._request("POST", "/api/repos", {})["repo_id"]

    # --- sync ------------------------------------------------------------

    def fetch_repo(self, repo_id: str) -> RemoteRepo:
        body = self._request("GET", f"/api/repos/{repo_id}/fetch")
        objects = [WireObject(id=o["id"], kind=o["kind"],
                              payload=base64.b64decode(o["payload_b64"]))
                   for o in body["objects"]]
        refs = {r["name"]: r["target"] for r in body["refs"]}
        return RemoteRepo(refs=refs, head=body["head"], objects=objects)

    def push(self, repo_id: str, branch: str, new_target: str,
             expected_old: str | None, objects: list[WireObject]) -> dict:
        wired = [{"id": o.id, "kind": o.kind,
                  "payload_b64": base64.b64encode(o.payload).decode("ascii")}
                 for o in objects]
        return self._request("POST", f"/api/repos/{repo_id}/push", {
            "branch": branch, "new_target": new_target,
            "expected_old": expected_old, "objects": wired})

    # --- instructor views ---------------------------------------------------

    def submissions(self, assignment_id: str) -> list[dict]:
        return self._request("GET", f"/api/assignments/{assignment_id}/submissions")

    def similarity(self, assignment_id: str, filename: str) -> dict:
        return self._request("GET", f"/api/assignments/{assignment_id}/similarity",
                             params={"file": filename})

    def contributions(self, repo_id: str, members: list[str]) -> dict:
        return self._request("GET", f"/api/repos/{repo_id}/analytics/contributions",
                             params={"members": ",".join(members)})

    def timing(self, assignment_id: str) -> dict:
        return self._request("GET", f"/api/assignments/{assignment_id}/timing")
