"""Capture real API responses as dashboard test fixtures.

Boots an in-process server, seeds an assignment with four students whose
submissions hit the similarity bands exactly (0.99 high, 0.85 medium,
0.50 distinct), one dominant contributor team repo, and a late push, then
dumps the live JSON responses under frontend/tests/fixtures/.
"""

from __future__ import annotations

import json
import sys
import time
from pathlib import Path

from classgit.client.api import ApiClient
from classgit.service import MemoryBackend, ServiceCore
from classgit.service.run import EmbeddedServer
from classgit.service.types import PushRequest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))
from test_service import build_commit_objects  # noqa: E402

FIXTURES = Path(__file__).resolve().parent.parent / "frontend" / "tests" / "fixtures"

BASE_LINES = [f"line {i:03d} of shared boilerplate" for i in range(100)]


def file_sharing(n_shared: int, tag: str) -> bytes:
    lines = BASE_LINES[:n_shared] + [f"{tag} unique line {i}" for i in range(100 - n_shared)]
    return ("\n".join(lines) + "\n").encode()


def main() -> None:
    now = 1_800_000_000  # fixed fake clock keeps fixtures byte-reproducible
    deadline = now + 3600  # students' pushes land before; one is forced late below
    backend = MemoryBackend()
    clock_now = {"t": float(now)}
    core = ServiceCore(backend, clock=lambda: clock_now["t"], pbkdf2_iterations=1000,
                       token_lifetime=30 * 86400)

    with EmbeddedServer(core) as server:
        prof = ApiClient(server.base_url)
        prof.register("prof", "teaching-pass", "instructor")
        prof.login("prof", "teaching-pass")
        assignment = prof.create_assignment("CNN on MNIST", deadline)
        aid = assignment["assignment_id"]

        submissions = {
            "ann": file_sharing(100, "ann"),   # vs ben: 0.99
            "ben": file_sharing(99, "ben"),
            "cal": file_sharing(85, "cal"),    # vs ann: 0.85
            "dot": file_sharing(50, "dot"),    # vs ann: 0.50
        }
        tokens = {}
        repos = {}
        for i, (name, content) in enumerate(submissions.items()):
            api = ApiClient(server.base_url)
            api.register(name, "learning-pass", "student")
            api.login(name, "learning-pass")
            tokens[name], repos[name] = api.token, api.join(assignment["invite_code"])
            cid, objects = build_commit_objects({"cnn_mnist.py": content}, author=name,
                                                authored_at=now - 7200 + i * 600)
            api.push(repos[name], "main", cid, expected_old=None, objects=objects)

        # one enrolled student who never pushes, one late pusher
        eve = ApiClient(server.base_url)
        eve.register("eve", "learning-pass", "student")
        eve.login("eve", "learning-pass")
        eve.join(assignment["invite_code"])

        clock_now["t"] = float(deadline + 1800)  # past the deadline
        zed = ApiClient(server.base_url)
        zed.register("zed", "learning-pass", "student")
        zed.login("zed", "learning-pass")
        zed_repo = zed.join(assignment["invite_code"])
        cid, objects = build_commit_objects({"cnn_mnist.py": file_sharing(60, "zed")},
                                            author="zed", authored_at=deadline + 1700)
        zed.push(zed_repo, "main", cid, expected_old=None, objects=objects)

        # team repo with a dominant contributor: 3 commits by ann, 1 by ben
        team_repo = repos["ann"]
        ann = ApiClient(server.base_url, token=tokens["ann"])
        parent = ann.fetch_repo(team_repo).refs["main"]
        for i, author in enumerate(["ann", "ann", "ben"]):
            cid, objects = build_commit_objects(
                {"cnn_mnist.py": submissions["ann"],
                 f"work_{i}.py": f"tuning pass {i}\n".encode()},
                parents=(parent,), author=author, authored_at=now - 3600 + i * 300,
                message=f"iteration {i}")
            ann.push(team_repo, "main", cid, expected_old=parent, objects=objects)
            parent = cid

        FIXTURES.mkdir(parents=True, exist_ok=True)
        captures = {
            "submissions.json": prof.submissions(aid),
            "similarity.json": prof.similarity(aid, "cnn_mnist.py"),
            "contributions.json": prof.contributions(team_repo, ["ann", "ben"]),
            "timing.json": prof.timing(aid),
            "fetch.json": prof._request("GET", f"/api/repos/{team_repo}/fetch"),
            "assignment.json": assignment,
        }
        for name, payload in captures.items():
            (FIXTURES / name).write_text(json.dumps(payload, indent=2, sort_keys=True)
                                         + "\n", encoding="utf-8")
            print(f"wrote {FIXTURES / name}")


if __name__ == "__main__":
    main()
