"""`mgit`: the student command-line client (plus instructor reports and bench).

Exit codes: 0 success, 1 user/domain error (auth failure, nothing to
commit, merge conflicts, ...), 2 transport or server-side failure.
"""

from __future__ import annotations

import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import click

from .. import errors, history, objstore, stage
from ..bench import Workload, run_concurrency_bench, run_shared_branch_race, run_storage_bench
from .api import ApiClient, ApiError, TransportError
from .checkout import Checkout, CheckoutError, find_root
from . import reports, sync

DEFAULT_CONFIG_PATH = Path.home() / ".classgit" / "config"


@dataclass
class ClientConfig:
    server_url: str = "http://127.0.0.1:8470"
    token: str | None = None
    username: str | None = None

    @classmethod
    def load(cls, path: Path) -> "ClientConfig":
        if not path.exists():
            return cls()
        data = json.loads(path.read_text(encoding="utf-8"))
        return cls(server_url=data.get("server_url", cls.server_url),
                   token=data.get("token"), username=data.get("username"))

    def save(self, path: Path) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps({
            "server_url": self.server_url,
            "token": self.token,
            "username": self.username,
        }, indent=2), encoding="utf-8")


class Context:
    def __init__(self, config_path: Path, server_override: str | None):
        self.config_path = config_path
        self.config = ClientConfig.load(config_path)
        if server_override:
            self.config.server_url = server_override

    def api(self, need_token: bool = True) -> ApiClient:
        if need_token and not self.config.token:
            fail(1, "not logged in (run `mgit login <username>` first)")
        return ApiClient(self.config.server_url, token=self.config.token)

    def checkout(self) -> Checkout:
        root = find_root()
        if root is None:
            fail(1, "not inside a checkout (no .mgit directory found)")
        return Checkout(root)

    def repo(self, checkout: Checkout) -> history.RepoState:
        return checkout.load(self.config.username or "anonymous")

    def require_username(self) -> str:
        if not self.config.username:
            fail(1, "no identity on file; run `mgit login <username>` first")
        return self.config.username


def fail(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def run_guarded(fn, *args, **kwargs):
    """Map exception classes onto the exit-code contract."""
    try:
        return fn(*args, **kwargs)
    except TransportError as exc:
        fail(2, str(exc))
    except ApiError as exc:
        fail(1, str(exc))
    except (errors.ClassgitError, CheckoutError) as exc:
        fail(1, getattr(exc, "detail", None) or str(exc))


@click.group()
@click.option("--server", default=None, metavar="URL",
              help="Server base URL (overrides the config file).")
@click.option("--config", "config_path", default=None, metavar="PATH",
              type=click.Path(dir_okay=False, path_type=Path),
              help=f"Client config file (default {DEFAULT_CONFIG_PATH}).")
@click.pass_context
def main(ctx, server, config_path):
    """Git-style assignment submission client."""
    ctx.obj = Context(config_path or DEFAULT_CONFIG_PATH, server)


# --- accounts ------------------------------------------------------------

@main.command()
@click.argument("username")
@click.option("--role", type=click.Choice(["student", "instructor"]),
              default="student", show_default=True)
@click.pass_obj
def register(obj: Context, username, role):
    """Create an account on the server."""
    password = click.prompt("password", hide_input=True, confirmation_prompt=True)

    def go():
        api = obj.api(need_token=False)
        api.register(username, password, role)
        click.echo(f"registered {username} ({role})")

    run_guarded(go)


@main.command()
@click.argument("username")
@click.pass_obj
def login(obj: Context, username):
    """Authenticate and store the session token."""
    password = click.prompt("password", hide_input=True)

    def go():
        api = obj.api(need_token=False)
        api.login(username, password)
        obj.config.token = api.token
        obj.config.username = username
        obj.config.save(obj.config_path)
        click.echo(f"logged in as {username}")

    run_guarded(go)


@main.command()
@click.pass_obj
def logout(obj: Context):
    """Invalidate the session server-side and forget it locally."""
    def go():
        if obj.config.token:
            try:
                obj.api().logout()
            except ApiError:
                pass  # token already dead server-side: still forget it
        obj.config.token = None
        obj.config.save(obj.config_path)
        click.echo("logged out")

    run_guarded(go)


# --- enrollment ------------------------------------------------------------

@main.command()
@click.argument("invite_code")
@click.pass_obj
def join(obj: Context, invite_code):
    """Join an assignment with an instructor-provided invite code."""
    def go():
        repo_id = obj.api().join(invite_code)
        click.echo(f"joined: repository {repo_id}")
        click.echo(f"next: mgit clone {repo_id}")

    run_guarded(go)


@main.command()
@click.argument("repo_id")
@click.argument("directory", required=False)
@click.pass_obj
def clone(obj: Context, repo_id, directory):
    """Materialize a local checkout of a server repository."""
    target = Path(directory or repo_id)

    def go():
        owner = obj.require_username()
        try:
            sync.clone(obj.api(), repo_id, target, owner)
        except errors.CorruptObject as exc:
            fail(2, f"clone aborted, partial directory removed: {exc.detail}")
        click.echo(f"cloned {repo_id} into {target}")

    run_guarded(go)


# --- working state -----------------------------------------------------------

@main.command()
@click.argument("paths", nargs=-1, required=True)
@click.pass_obj
def add(obj: Context, paths):
    """Stage files (or directories, recursively) for the next commit."""
    def go():
        checkout = obj.checkout()
        root = checkout.root.resolve()
        with checkout.lock():
            repo = obj.repo(checkout)
            for raw in paths:
                full = (Path.cwd() / raw).resolve()
                if not full.exists():
                    fail(1, f"no such file: {raw}")
                files = [full]
                if full.is_dir():
                    files = sorted(p for p in full.rglob("*")
                                   if p.is_file() and ".mgit" not in p.parts)
                    if not files:
                        fail(1, f"nothing to stage under {raw}")
                for file in files:
                    try:
                        rel = file.relative_to(root).as_posix()
                    except ValueError:
                        fail(1, f"{raw} is outside this checkout")
                    mtime = int(file.stat().st_mtime)
                    stage.stage_file(repo, rel, file.read_bytes(), mtime=mtime)
                    click.echo(f"staged {rel}")
            checkout.save(repo)

    run_guarded(go)


@main.command()
@click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")
@click.pass_obj
def status(obj: Context, as_json):
    """Staged, modified, untracked, and deleted paths; unpushed count."""
    def go():
        checkout = obj.checkout()
        repo = obj.repo(checkout)
        report = stage.status(repo, checkout.snapshot_worktree())
        if as_json:
            click.echo(json.dumps(report.to_json_obj(), indent=2))
            return
        click.echo(f"on branch {repo.head}")
        for label, paths in (("staged", report.staged), ("modified", report.modified),
                             ("untracked", report.untracked), ("deleted", report.deleted)):
            for path in paths:
                click.echo(f"  {label}: {path}")
        if report.clean:
            click.echo("working tree clean")
        click.echo(f"commits not pushed: {report.ahead_count}")

    run_guarded(go)


@main.command()
@click.option("-m", "--message", required=True, help="Commit message (nonempty).")
@click.pass_obj
def commit(obj: Context, message):
    """Snapshot the staged files onto the current branch."""
    def go():
        if not message.strip():
            fail(1, "commit message must be nonempty")
        checkout = obj.checkout()
        with checkout.lock():
            repo = obj.repo(checkout)
            author = obj.require_username()
            try:
                cid, _ = history.create_commit(repo, author, message, int(time.time()))
            except errors.NothingToCommit:
                fail(1, "nothing to commit")
            checkout.save(repo)
            click.echo(f"[{repo.head} {cid[:8]}] {message.splitlines()[0]}")

    run_guarded(go)


@main.command()
@click.argument("path", required=False)
@click.option("--hard", is_flag=True,
              help="Also rewrite working files from the restored index.")
@click.pass_obj
def reset(obj: Context, path, hard):
    """Reset the index to HEAD (optionally one path); --hard rewrites files."""
    def go():
        checkout = obj.checkout()
        with checkout.lock():
            repo = obj.repo(checkout)
            stage.unstage(repo, path)
            checkout.save(repo)
            targets = [path] if path else sorted(repo.index.paths())
            if hard:
                for p in targets:
                    checkout.write_file(p, stage.restore_file(repo, p))
            scope = path or "index"
            click.echo(f"reset {scope}" + (" (working files rewritten)" if hard else ""))

    run_guarded(go)


@main.command()
@click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")
@click.pass_obj
def log(obj: Context, as_json):
    """Commit history of the current branch, newest first."""
    def go():
        checkout = obj.checkout()
        repo = obj.repo(checkout)
        if repo.head_target() is None:
            click.echo("no commits yet")
            return
        walk = history.history_walk(repo)
        if as_json:
            click.echo(json.dumps([{
                "id": cid, "tree": c.tree, "parents": list(c.parents),
                "author": c.author, "authored_at": c.authored_at,
                "message": c.message,
            } for cid, c in walk], indent=2))
            return
        for cid, c in walk:
            stamp = time.strftime("%Y-%m-%d %H:%M", time.gmtime(c.authored_at))
            click.echo(f"{cid[:8]}  {stamp}  {c.author}  {c.message.splitlines()[0]}")

    run_guarded(go)


# --- branches ------------------------------------------------------------------

@main.command()
@click.argument("name", required=False)
@click.pass_obj
def branch(obj: Context, name):
    """List branches, or create one from the current HEAD."""
    def go():
        checkout = obj.checkout()
        repo = obj.repo(checkout)
        if name is None:
            for ref in sorted(repo.refs):
                marker = "*" if ref == repo.head else " "
                click.echo(f"{marker} {ref} {repo.refs[ref][:8]}")
            return
        with checkout.lock():
            history.create_branch(repo, name)
            checkout.save(repo)
            click.echo(f"created branch {name}")

    run_guarded(go)


@main.command()
@click.argument("name")
@click.pass_obj
def switch(obj: Context, name):
    """Move HEAD to another branch (refuses with staged changes)."""
    def go():
        checkout = obj.checkout()
        with checkout.lock():
            repo = obj.repo(checkout)
            old_index = repo.index.copy()
            history.switch_branch(repo, name)
            checkout.save(repo)
            checkout.materialize_index(repo)
            # drop files the old branch tracked and the new one does not,
            # but only when unmodified: local edits stay (as untracked)
            for entry in old_index.entries():
                if entry.path in repo.index:
                    continue
                target = checkout.root / entry.path
                if target.exists():
                    on_disk = target.read_bytes()
                    if objstore.hash_object(objstore.BLOB, on_disk) == entry.blob_id:
                        target.unlink()
            click.echo(f"switched to {name}")

    run_guarded(go)


@main.command()
@click.argument("name")
@click.option("--remote", is_flag=True,
              help="Merge the fetched server state of NAME instead of a local branch.")
@click.pass_obj
def merge(obj: Context, name, remote):
    """Three-way merge NAME into the current branch."""
    def go():
        checkout = obj.checkout()
        with checkout.lock():
            repo = obj.repo(checkout)
            author = obj.require_username()
            theirs = name
            if remote:
                target = checkout.read_remote_refs().get(name)
                if target is None:
                    fail(1, f"no fetched state for remote branch {name!r} (run mgit fetch)")
                theirs = f"{name}@remote"
                if theirs in repo.refs and repo.refs[theirs] != target:
                    del repo.refs[theirs]
                if theirs not in repo.refs:
                    history.create_branch(repo, theirs, source=target)
            result = history.merge(repo, repo.head, theirs, author,
                                   f"merge {name} into {repo.head}", int(time.time()))
            if remote and theirs in repo.refs:
                del repo.refs[theirs]  # scratch ref only for the merge
            checkout.save(repo)
            if result.outcome == history.FAST_FORWARD:
                checkout.materialize_index(repo)
                click.echo(f"fast-forward: {repo.head} -> {repo.refs[repo.head][:8]}")
            elif result.outcome == history.CLEAN_MERGE:
                checkout.materialize_index(repo)
                click.echo(f"merged {name} into {repo.head}: {result.commit_id[:8]}")
            else:
                checkout.materialize_index(repo)
                for path, content in sorted(result.conflict_files.items()):
                    checkout.write_file(path, content)
                click.echo("merge produced conflicts; fix, `mgit add`, then commit:")
                for conflict_path in sorted({c.path for c in result.conflicts}):
                    click.echo(f"  conflict: {conflict_path}")
                sys.exit(1)

    run_guarded(go)


# --- sync ------------------------------------------------------------------------

@main.command()
@click.pass_obj
def push(obj: Context):
    """Send local commits on the current branch to the server."""
    def go():
        checkout = obj.checkout()
        with checkout.lock():
            repo = obj.repo(checkout)
            receipt = sync.push(obj.api(), checkout, repo)
        if receipt is None:
            click.echo("everything up to date")
            return
        click.echo(f"pushed {repo.head} -> {repo.head_target()[:8]}")
        if receipt.get("late"):
            click.echo("warning: push received after the deadline (flagged late)")

    run_guarded(go)


@main.command()
@click.pass_obj
def fetch(obj: Context):
    """Update local objects and the remote-ref cache (no branch moves)."""
    def go():
        checkout = obj.checkout()
        with checkout.lock():
            remote, new = sync.fetch_into(obj.api(), checkout)
        click.echo(f"fetched {new} new object(s)")
        repo = obj.repo(checkout)
        for name, target in sorted(remote.refs.items()):
            local = repo.refs.get(name)
            note = "up to date" if local == target else \
                f"differs from local (merge with: mgit merge --remote {name})"
            click.echo(f"  {name}: {target[:8]} ({note})")

    run_guarded(go)


@main.command()
@click.pass_obj
def verify(obj: Context):
    """Re-hash every local object and check ref/index integrity."""
    def go():
        checkout = obj.checkout()
        repo = obj.repo(checkout)
        problems = [f"object {oid} fails re-hash" for oid in repo.objects.verify()]
        for name, target in repo.refs.items():
            try:
                history.reachable_commits(repo.objects, target)
            except errors.ClassgitError as exc:
                problems.append(f"ref {name}: {exc.detail}")
        for entry in repo.index.entries():
            if entry.blob_id not in repo.objects:
                problems.append(f"index entry {entry.path}: missing blob")
        if problems:
            for p in problems:
                click.echo(p, err=True)
            sys.exit(1)
        click.echo("ok")

    run_guarded(go)


# --- instructor reports -------------------------------------------------------------

@main.group()
def report():
    """Fetch instructor analytics and render CSV + JSON + figures."""


@report.command("similarity")
@click.argument("assignment_id")
@click.option("--file", "filename", required=True,
              help="Repository-relative path to compare (exact match).")
@click.option("--out", "out_dir", default="reports", show_default=True)
@click.pass_obj
def report_similarity(obj: Context, assignment_id, filename, out_dir):
    def go():
        payload = obj.api().similarity(assignment_id, filename)
        for path in reports.write_similarity_report(payload, out_dir):
            click.echo(f"wrote {path}")

    run_guarded(go)


@report.command("contributions")
@click.argument("repo_id")
@click.option("--members", required=True, help="Comma-separated usernames.")
@click.option("--out", "out_dir", default="reports", show_default=True)
@click.pass_obj
def report_contributions(obj: Context, repo_id, members, out_dir):
    def go():
        payload = obj.api().contributions(repo_id, [m for m in members.split(",") if m])
        for path in reports.write_contribution_report(payload, out_dir):
            click.echo(f"wrote {path}")

    run_guarded(go)


@report.command("timing")
@click.argument("assignment_id")
@click.option("--out", "out_dir", default="reports", show_default=True)
@click.pass_obj
def report_timing(obj: Context, assignment_id, out_dir):
    def go():
        payload = obj.api().timing(assignment_id)
        for path in reports.write_timing_report(payload, out_dir):
            click.echo(f"wrote {path}")

    run_guarded(go)


@report.command("submissions")
@click.argument("assignment_id")
@click.option("--out", "out_dir", default="reports", show_default=True)
@click.pass_obj
def report_submissions(obj: Context, assignment_id, out_dir):
    def go():
        payload = obj.api().submissions(assignment_id)
        for path in reports.write_submissions_report(payload, out_dir):
            click.echo(f"wrote {path}")

    run_guarded(go)


# --- bench ------------------------------------------------------------------------------

@main.group()
def bench():
    """Benchmark harness (storage savings, concurrent submissions)."""


def _emit_bench(report, json_path):
    click.echo(report.table())
    if json_path:
        Path(json_path).write_text(
            json.dumps(report.to_json_obj(), indent=2) + "\n", encoding="utf-8")
        click.echo(f"wrote {json_path}")


@bench.command("storage")
@click.option("--seed", default=42, show_default=True, type=int)
@click.option("--students", default=20, show_default=True, type=int)
@click.option("--files", default=10, show_default=True, type=int)
@click.option("--file-size", default=10 * 1024, show_default=True, type=int)
@click.option("--commits", default=5, show_default=True, type=int)
@click.option("--change-rate", default=0.10, show_default=True, type=float)
@click.option("--rewrite-everything", is_flag=True,
              help="Every commit rewrites every file with fresh random bytes.")
@click.option("--json", "json_path", default=None, metavar="PATH")
def bench_storage(seed, students, files, file_size, commits, change_rate,
                  rewrite_everything, json_path):
    """Content-addressed storage vs one ZIP archive per submission."""
    workload = Workload(students=students, files_per_repo=files, file_size=file_size,
                        commits_per_student=commits, change_fraction=change_rate,
                        seed=seed, rewrite_everything=rewrite_everything)
    _emit_bench(run_storage_bench(workload), json_path)


@bench.command("concurrency")
@click.option("--clients", default=30, show_default=True, type=int)
@click.option("--seed", default=42, show_default=True, type=int)
@click.option("--server", "server_url", default=None, metavar="URL",
              help="Target server; omit to embed a fresh in-memory server.")
@click.option("--shared-branch", is_flag=True,
              help="Race every client against one branch with retries.")
@click.option("--json", "json_path", default=None, metavar="PATH")
def bench_concurrency(clients, seed, server_url, shared_branch, json_path):
    """N clients clone/commit/push at the same moment."""
    def run(url, core=None):
        if shared_branch:
            count, failures = run_shared_branch_race(url, clients)
            click.echo(f"commits on shared branch: {count} (expected {clients})")
            for failure in failures:
                click.echo(f"  {failure}", err=True)
            if failures or count < clients:
                sys.exit(1)
            return
        workload = Workload(students=clients, files_per_repo=5, file_size=4096,
                            commits_per_student=1, seed=seed)
        bench_report = run_concurrency_bench(url, clients, workload, core=core)
        _emit_bench(bench_report, json_path)
        if bench_report.pushes_succeeded != clients or bench_report.crawl_problems:
            sys.exit(1)

    if server_url:
        run(server_url)
    else:
        from ..service import MemoryBackend, ServiceCore
        from ..service.run import EmbeddedServer
        core = ServiceCore(MemoryBackend(), pbkdf2_iterations=1000)
        with EmbeddedServer(core) as server:
            run(server.base_url, core=core)


if __name__ == "__main__":
    main()
