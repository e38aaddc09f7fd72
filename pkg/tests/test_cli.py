"""End-to-end CLI tests against an embedded HTTP server."""

from __future__ import annotations

import json

import pytest
from click.testing import CliRunner

from classgit.client import cli
from classgit.service import MemoryBackend, ServiceCore
from classgit.service.run import EmbeddedServer

PASSWORD = "student-pass-1"


@pytest.fixture
def server():
    core = ServiceCore(MemoryBackend(), pbkdf2_iterations=1000)
    with EmbeddedServer(core) as embedded:
        yield embedded


@pytest.fixture
def runner():
    return CliRunner()


class Env:
    """One user's CLI environment: config file + working directory."""

    def __init__(self, runner, server, tmp_path, name):
        self.runner = runner
        self.server = server
        self.config = tmp_path / f"{name}-config.json"
        self.cwd = tmp_path / name
        self.cwd.mkdir()

    def run(self, *args, input=None, cwd=None, expect=0):
        import contextlib
        import os

        @contextlib.contextmanager
        def chdir(path):
            old = os.getcwd()
            os.chdir(path)
            try:
                yield
            finally:
                os.chdir(old)

        with chdir(cwd or self.cwd):
            result = self.runner.invoke(cli.main, [
                "--config", str(self.config), "--server", self.server.base_url,
                *args], input=input, catch_exceptions=False)
        if expect is not None:
            assert result.exit_code == expect, \
                f"mgit {' '.join(args)} -> {result.exit_code}\n{result.output}"
        return result


@pytest.fixture
def student_env(runner, server, tmp_path):
    env = Env(runner, server, tmp_path, "student")
    env.run("register", "ada", input=f"{PASSWORD}\n{PASSWORD}\n")
    env.run("login", "ada", input=f"{PASSWORD}\n")
    return env


@pytest.fixture
def instructor_env(runner, server, tmp_path):
    env = Env(runner, server, tmp_path, "instructor")
    env.run("register", "prof", "--role", "instructor",
            input=f"{PASSWORD}\n{PASSWORD}\n")
    env.run("login", "prof", input=f"{PASSWORD}\n")
    return env


def make_assignment(instructor_env, server, **extra):
    from classgit.client.api import ApiClient
    token = json.loads(instructor_env.config.read_text())["token"]
    api = ApiClient(server.base_url, token=token)
    import time
    return api.create_assignment("hw1", int(time.time()) + 14 * 86400, **extra)


class TestAuth:
    def test_login_success_message(self, student_env):
        result = student_env.run("status", expect=1)  # not in a checkout
        assert "not inside a checkout" in result.output

    def test_wrong_password_exit_1(self, runner, server, tmp_path):
        env = Env(runner, server, tmp_path, "wrongpw")
        env.run("register", "bob", input=f"{PASSWORD}\n{PASSWORD}\n")
        result = env.run("login", "bob", input="bad-password\n", expect=1)
        assert "auth_failed" in result.output

    def test_offline_server_exit_2(self, runner, tmp_path):
        env = Env(runner, type("S", (), {"base_url": "http://127.0.0.1:1"})(),
                  tmp_path, "offline")
        env.run("login", "ada", input="whatever-pw\n", expect=2)

    def test_logout_twice_exit_0(self, student_env):
        student_env.run("logout")
        student_env.run("logout")


class TestWorkflow:
    def test_full_round_trip(self, student_env, instructor_env, server):
        assignment = make_assignment(instructor_env, server)

        joined = student_env.run("join", assignment["invite_code"])
        repo_id = joined.output.split("repository ")[1].split()[0]
        rejoined = student_env.run("join", assignment["invite_code"])
        assert repo_id in rejoined.output

        student_env.run("clone", repo_id, "work")
        work = student_env.cwd / "work"

        (work / "mlp.py").write_bytes(b"layers = [784, 128, 10]\n")
        student_env.run("add", "mlp.py", cwd=work)
        status = student_env.run("status", cwd=work)
        assert "staged: mlp.py" in status.output

        commit = student_env.run("commit", "-m", "initial network", cwd=work)
        assert "initial network" in commit.output

        student_env.run("push", cwd=work)
        again = student_env.run("push", cwd=work)
        assert "up to date" in again.output

        log = student_env.run("log", "--json", cwd=work)
        entries = json.loads(log.output)
        assert [e["message"] for e in entries] == ["initial network"]

        rows = make_submission_rows(instructor_env, server, assignment["assignment_id"])
        assert rows[0]["username"] == "ada"
        assert rows[0]["submitted"] is True
        assert rows[0]["head_commit"] == entries[0]["id"]  # server head == client head

    def test_clone_into_nonempty_dir_exit_1(self, student_env, instructor_env, server):
        assignment = make_assignment(instructor_env, server)
        joined = student_env.run("join", assignment["invite_code"])
        repo_id = joined.output.split("repository ")[1].split()[0]
        blocked = student_env.cwd / "blocked"
        blocked.mkdir()
        (blocked / "junk.txt").write_text("already here")
        result = student_env.run("clone", repo_id, str(blocked), expect=1)
        assert "not empty" in result.output

    def test_commit_clean_index_exit_1(self, student_env, instructor_env, server):
        assignment = make_assignment(instructor_env, server)
        joined = student_env.run("join", assignment["invite_code"])
        repo_id = joined.output.split("repository ")[1].split()[0]
        student_env.run("clone", repo_id, "empty")
        work = student_env.cwd / "empty"
        (work / "f.txt").write_bytes(b"x\n")
        student_env.run("add", "f.txt", cwd=work)
        student_env.run("commit", "-m", "one", cwd=work)
        result = student_env.run("commit", "-m", "two", cwd=work, expect=1)
        assert "nothing to commit" in result.output

    def test_add_directory_recursively(self, student_env, instructor_env, server):
        assignment = make_assignment(instructor_env, server)
        joined = student_env.run("join", assignment["invite_code"])
        repo_id = joined.output.split("repository ")[1].split()[0]
        student_env.run("clone", repo_id, "recursive")
        work = student_env.cwd / "recursive"
        (work / "src" / "deep").mkdir(parents=True)
        (work / "src" / "a.py").write_bytes(b"a\n")
        (work / "src" / "deep" / "b.py").write_bytes(b"b\n")
        result = student_env.run("add", ".", cwd=work)
        assert "staged src/a.py" in result.output
        assert "staged src/deep/b.py" in result.output
        status = student_env.run("status", "--json", cwd=work)
        assert json.loads(status.output)["staged"] == ["src/a.py", "src/deep/b.py"]

    def test_reset_hard_restores_file(self, student_env, instructor_env, server):
        assignment = make_assignment(instructor_env, server)
        joined = student_env.run("join", assignment["invite_code"])
        repo_id = joined.output.split("repository ")[1].split()[0]
        student_env.run("clone", repo_id, "resetme")
        work = student_env.cwd / "resetme"
        (work / "f.txt").write_bytes(b"committed\n")
        student_env.run("add", "f.txt", cwd=work)
        student_env.run("commit", "-m", "base", cwd=work)
        (work / "f.txt").write_bytes(b"scribbles\n")
        student_env.run("add", "f.txt", cwd=work)
        student_env.run("reset", "--hard", "f.txt", cwd=work)
        assert (work / "f.txt").read_bytes() == b"committed\n"
        status = student_env.run("status", cwd=work)
        assert "working tree clean" in status.output

    def test_branch_switch_merge_clean(self, student_env, instructor_env, server):
        assignment = make_assignment(instructor_env, server)
        joined = student_env.run("join", assignment["invite_code"])
        repo_id = joined.output.split("repository ")[1].split()[0]
        student_env.run("clone", repo_id, "team")
        work = student_env.cwd / "team"
        (work / "base.py").write_bytes(b"shared = True\n")
        student_env.run("add", "base.py", cwd=work)
        student_env.run("commit", "-m", "base", cwd=work)
        student_env.run("branch", "feat", cwd=work)
        student_env.run("switch", "feat", cwd=work)
        (work / "feature.py").write_bytes(b"new = 1\n")
        student_env.run("add", "feature.py", cwd=work)
        student_env.run("commit", "-m", "feature work", cwd=work)
        student_env.run("switch", "main", cwd=work)
        # feature.py was tracked only on feat and unmodified: gone after switch
        assert not (work / "feature.py").exists()
        merged = student_env.run("merge", "feat", cwd=work)
        assert "fast-forward" in merged.output
        assert (work / "feature.py").read_bytes() == b"new = 1\n"

    def test_merge_conflict_markers_exit_1(self, student_env, instructor_env, server):
        assignment = make_assignment(instructor_env, server)
        joined = student_env.run("join", assignment["invite_code"])
        repo_id = joined.output.split("repository ")[1].split()[0]
        student_env.run("clone", repo_id, "conflicted")
        work = student_env.cwd / "conflicted"
        (work / "f.py").write_bytes(b"a\nb\nc\n")
        student_env.run("add", "f.py", cwd=work)
        student_env.run("commit", "-m", "base", cwd=work)
        student_env.run("branch", "feat", cwd=work)
        (work / "f.py").write_bytes(b"a\nMINE\nc\n")
        student_env.run("add", "f.py", cwd=work)
        student_env.run("commit", "-m", "mine", cwd=work)
        student_env.run("switch", "feat", cwd=work)
        (work / "f.py").write_bytes(b"a\nTHEIRS\nc\n")
        student_env.run("add", "f.py", cwd=work)
        student_env.run("commit", "-m", "theirs", cwd=work)
        student_env.run("switch", "main", cwd=work)
        result = student_env.run("merge", "feat", cwd=work, expect=1)
        assert "conflict: f.py" in result.output
        content = (work / "f.py").read_bytes()
        assert b"<<<<<<< ours" in content and b">>>>>>> theirs" in content
        # resolve and recommit
        (work / "f.py").write_bytes(b"a\nRESOLVED\nc\n")
        student_env.run("add", "f.py", cwd=work)
        student_env.run("commit", "-m", "resolved", cwd=work)
        student_env.run("push", cwd=work)

    def test_fetch_and_remote_merge(self, student_env, instructor_env, server, tmp_path):
        # two checkouts of one repo: desk simulation of instructor errata
        assignment = make_assignment(instructor_env, server)
        joined = student_env.run("join", assignment["invite_code"])
        repo_id = joined.output.split("repository ")[1].split()[0]

        student_env.run("clone", repo_id, "first")
        first = student_env.cwd / "first"
        (first / "f.txt").write_bytes(b"v1\n")
        student_env.run("add", "f.txt", cwd=first)
        student_env.run("commit", "-m", "v1", cwd=first)
        student_env.run("push", cwd=first)

        student_env.run("clone", repo_id, "second")
        second = student_env.cwd / "second"
        (second / "g.txt").write_bytes(b"other\n")
        student_env.run("add", "g.txt", cwd=second)
        student_env.run("commit", "-m", "second line of work", cwd=second)
        student_env.run("push", cwd=second)

        fetched = student_env.run("fetch", cwd=first)
        assert "differs from local" in fetched.output
        merged = student_env.run("merge", "--remote", "main", cwd=first)
        assert "fast-forward" in merged.output
        assert (first / "g.txt").read_bytes() == b"other\n"

    def test_verify_clean(self, student_env, instructor_env, server):
        assignment = make_assignment(instructor_env, server)
        joined = student_env.run("join", assignment["invite_code"])
        repo_id = joined.output.split("repository ")[1].split()[0]
        student_env.run("clone", repo_id, "verifyme")
        work = student_env.cwd / "verifyme"
        (work / "f.txt").write_bytes(b"data\n")
        student_env.run("add", "f.txt", cwd=work)
        student_env.run("commit", "-m", "c", cwd=work)
        result = student_env.run("verify", cwd=work)
        assert "ok" in result.output


def make_submission_rows(instructor_env, server, assignment_id):
    from classgit.client.api import ApiClient
    token = json.loads(instructor_env.config.read_text())["token"]
    return ApiClient(server.base_url, token=token).submissions(assignment_id)


class TestPushMinimality:
    def test_second_push_sends_zero_objects(self, student_env, instructor_env,
                                            server, monkeypatch):
        assignment = make_assignment(instructor_env, server)
        joined = student_env.run("join", assignment["invite_code"])
        repo_id = joined.output.split("repository ")[1].split()[0]
        student_env.run("clone", repo_id, "minimal")
        work = student_env.cwd / "minimal"
        (work / "a.txt").write_bytes(b"one\n")
        student_env.run("add", "a.txt", cwd=work)
        student_env.run("commit", "-m", "first", cwd=work)

        sent_counts = []
        from classgit.client.api import ApiClient
        original = ApiClient.push

        def counting_push(self, repo_id, branch, new_target, expected_old, objects):
            sent_counts.append(len(objects))
            return original(self, repo_id, branch, new_target, expected_old, objects)

        monkeypatch.setattr(ApiClient, "push", counting_push)
        student_env.run("push", cwd=work)
        # second commit: only the delta moves
        (work / "a.txt").write_bytes(b"one\ntwo\n")
        student_env.run("add", "a.txt", cwd=work)
        student_env.run("commit", "-m", "second", cwd=work)
        student_env.run("push", cwd=work)
        assert len(sent_counts) == 2
        assert sent_counts[0] == 3  # blob + tree + commit
        assert sent_counts[1] == 3  # new blob + new tree + new commit, nothing old

    def test_clone_then_fetch_transfers_zero_new(self, student_env, instructor_env,
                                                 server):
        assignment = make_assignment(instructor_env, server)
        joined = student_env.run("join", assignment["invite_code"])
        repo_id = joined.output.split("repository ")[1].split()[0]
        student_env.run("clone", repo_id, "fixpoint")
        work = student_env.cwd / "fixpoint"
        (work / "f.txt").write_bytes(b"seeded\n")
        student_env.run("add", "f.txt", cwd=work)
        student_env.run("commit", "-m", "seed", cwd=work)
        student_env.run("push", cwd=work)
        result = student_env.run("fetch", cwd=work)
        assert "fetched 0 new object(s)" in result.output
