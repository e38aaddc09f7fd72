"""Benchmark runs: storage savings vs a ZIP baseline, concurrent pushes.

The storage bench plays a workload through the real service core twice:
once into the content-addressed store, once as one DEFLATE-compressed
archive of the full repo state per submission (the traditional
all-files-per-upload model).  The concurrency bench drives real HTTP
clients from worker threads and reports push latency percentiles;
latency timers wrap only protocol calls, never local file generation.
"""

from __future__ import annotations

import io
import threading
import time
import zipfile
from dataclasses import dataclass, field

from .. import history, objstore, stage
from ..client.api import ApiClient, ApiError, TransportError
from ..client.sync import collect_push_objects, object_closure, store_wire_objects
from ..errors import BenchSetupFailed
from ..service import MemoryBackend, ServiceCore
from ..service.types import PushRequest
from .workload import Workload

BENCH_PASSWORD = "bench-password-1"


def percentile(samples: list[float], q: float) -> float:
    if not samples:
        return 0.0
    ordered = sorted(samples)
    index = min(len(ordered) - 1, max(0, round(q * (len(ordered) - 1))))
    return ordered[index]


@dataclass
class BenchReport:
    kind: str
    pushes_attempted: int = 0
    pushes_succeeded: int = 0
    latency_p50: float = 0.0
    latency_p95: float = 0.0
    latency_max: float = 0.0
    clone_to_push_p50: float = 0.0
    clone_to_push_max: float = 0.0
    peak_in_flight: int = 0
    storage_bytes: int = 0
    baseline_bytes: int = 0
    savings_ratio: float = 0.0
    redundancy_reduction: float = 0.0
    wall_seconds: float = 0.0
    cpu_utilization: float | None = None  # process CPU time / wall, if measurable
    crawl_problems: list[str] = field(default_factory=list)

    def to_json_obj(self) -> dict:
        return {k: v for k, v in self.__dict__.items()}

    def table(self) -> str:
        rows = [("bench", self.kind),
                ("wall seconds", f"{self.wall_seconds:.2f}")]
        if self.kind == "concurrency":
            rows += [
                ("pushes", f"{self.pushes_succeeded}/{self.pushes_attempted}"),
                ("push latency p50", f"{self.latency_p50 * 1000:.1f} ms"),
                ("push latency p95", f"{self.latency_p95 * 1000:.1f} ms"),
                ("push latency max", f"{self.latency_max * 1000:.1f} ms"),
                ("clone-to-push p50", f"{self.clone_to_push_p50 * 1000:.1f} ms"),
                ("clone-to-push max", f"{self.clone_to_push_max * 1000:.1f} ms"),
                ("peak in flight", str(self.peak_in_flight)),
                ("crawl", "clean" if not self.crawl_problems
                 else f"{len(self.crawl_problems)} problem(s)"),
            ]
            if self.cpu_utilization is not None:
                rows.append(("process CPU / wall", f"{self.cpu_utilization:.0%}"))
        else:
            rows += [
                ("content-addressed bytes", str(self.storage_bytes)),
                ("zip baseline bytes", str(self.baseline_bytes)),
                ("savings vs baseline", f"{self.savings_ratio:.1%}"),
                ("redundancy reduction", f"{self.redundancy_reduction:.1%}"),
            ]
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k.ljust(width)}  {v}" for k, v in rows)


# --- storage ----------------------------------------------------------------


def _zip_snapshot(files: dict[str, bytes]) -> int:
    buffer = io.BytesIO()
    with zipfile.ZipFile(buffer, "w", compression=zipfile.ZIP_DEFLATED) as archive:
        for path in sorted(files):
            archive.writestr(path, files[path])
    return buffer.getbuffer().nbytes


def run_storage_bench(workload: Workload) -> BenchReport:
    """Same workload, two storage models; ratios per the report fields."""
    started = time.perf_counter()
    clock = lambda: 1_000_000.0  # noqa: E731 - deterministic deadline math
    core = ServiceCore(MemoryBackend(), clock=clock, pbkdf2_iterations=1000)
    core.register_user("bench-prof", BENCH_PASSWORD, "instructor")
    instructor = core.login("bench-prof", BENCH_PASSWORD).token
    assignment = core.create_assignment(instructor, "bench", int(clock()) + 86400)

    baseline_bytes = 0
    total_snapshot_bytes = 0

    for student in range(workload.students):
        name = f"bench-s{student:03d}"
        core.register_user(name, BENCH_PASSWORD, "student")
        token = core.login(name, BENCH_PASSWORD).token
        repo_id = core.join_assignment(token, assignment.invite_code).repo_id

        local = history.RepoState(repo_id="local", owners={name},
                                  objects=objstore.MemoryObjectStore())
        last_pushed: str | None = None
        for commit_no, snapshot in enumerate(workload.snapshots(student)):
            for path, content in snapshot.items():
                stage.stage_file(local, path, content)
            for tracked in list(local.index.paths()):
                if tracked not in snapshot:
                    local.index.remove(tracked)
            cid, _ = history.create_commit(local, name, f"commit {commit_no}",
                                           1000 + commit_no)
            remote_refs = {"main": last_pushed} if last_pushed else {}
            objects = collect_push_objects(local, remote_refs)
            core.push(token, PushRequest(repo_id=repo_id, branch="main",
                                         new_target=cid, expected_old=last_pushed,
                                         objects=objects))
            last_pushed = cid
            baseline_bytes += _zip_snapshot(snapshot)
            total_snapshot_bytes += sum(len(c) for c in snapshot.values())

    server_store = core.backend.objects
    storage_bytes = server_store.encoded_bytes
    unique_blob_bytes = sum(
        len(server_store.get(oid)[1]) for oid in server_store.ids()
        if server_store.get(oid)[0] == objstore.BLOB)

    report = BenchReport(kind="storage")
    report.storage_bytes = storage_bytes
    report.baseline_bytes = baseline_bytes
    report.savings_ratio = 1.0 - storage_bytes / baseline_bytes if baseline_bytes else 0.0
    report.redundancy_reduction = (1.0 - unique_blob_bytes / total_snapshot_bytes
                                   if total_snapshot_bytes else 0.0)
    report.pushes_attempted = report.pushes_succeeded = (
        workload.students * workload.commits_per_student)
    report.wall_seconds = time.perf_counter() - started
    return report


# --- concurrency ---------------------------------------------------------------


class _InFlight:
    def __init__(self):
        self._lock = threading.Lock()
        self.current = 0
        self.peak = 0

    def __enter__(self):
        with self._lock:
            self.current += 1
            self.peak = max(self.peak, self.current)

    def __exit__(self, *exc):
        with self._lock:
            self.current -= 1


def _build_commit_from_files(files: dict[str, bytes], author: str,
                             parents: tuple[str, ...] = (), message: str = "bench",
                             authored_at: int = 1000):
    local = history.RepoState(repo_id="local", owners={author},
                              objects=objstore.MemoryObjectStore())
    for path, content in files.items():
        stage.stage_file(local, path, content)
    root = history.build_trees(local.objects, local.index)
    commit = objstore.Commit(tree=root, parents=parents, author=author,
                             authored_at=authored_at, message=message)
    cid, _ = local.objects.put(objstore.COMMIT, objstore.encode_commit(commit))
    return local, cid


def _wire_all(store: objstore.ObjectStore):
    from ..service.types import WireObject
    return [WireObject(id=oid, kind=store.get(oid)[0], payload=store.get(oid)[1])
            for oid in store.ids()]


def run_concurrency_bench(server_url: str, n_clients: int,
                          workload: Workload | None = None,
                          core: ServiceCore | None = None) -> BenchReport:
    """N independent clients register/join/clone/commit/push simultaneously.

    `core` (when the caller embeds the server in-process) enables the
    server-side crawl on top of each worker's own fetch-back check.
    """
    workload = workload or Workload(students=n_clients, files_per_repo=5,
                                    file_size=4096, commits_per_student=1)
    setup = ApiClient(server_url)
    try:
        setup.register("bench-prof", BENCH_PASSWORD, "instructor")
        setup.login("bench-prof", BENCH_PASSWORD)
    except (TransportError, ApiError) as exc:
        raise BenchSetupFailed(f"cannot reach or prepare server: {exc}") from exc
    assignment = setup.create_assignment("bench", int(time.time()) + 86400)
    invite = assignment["invite_code"]

    push_spans: list[float] = []
    clone_to_push_spans: list[float] = []
    failures: list[str] = []
    crawl_problems: list[str] = []
    in_flight = _InFlight()
    results_lock = threading.Lock()
    barrier = threading.Barrier(n_clients)

    def worker(student: int) -> None:
        try:
            api = ApiClient(server_url)
            name = f"bench-s{student:03d}"
            api.register(name, BENCH_PASSWORD, "student")
            api.login(name, BENCH_PASSWORD)
            repo_id = api.join(invite)
            files = workload.initial_files(workload.student_rng(student))
            local, cid = _build_commit_from_files(files, name, authored_at=900 + student)
            barrier.wait(timeout=60)
            with in_flight:
                clone_started = time.perf_counter()
                remote = api.fetch_repo(repo_id)  # the clone step
                objects = _wire_all(local.objects)
                push_started = time.perf_counter()
                api.push(repo_id, "main", cid,
                         expected_old=remote.refs.get("main"), objects=objects)
                finished = time.perf_counter()
            # fetch back and verify: every object re-hashes, ref landed
            verify = api.fetch_repo(repo_id)
            check_store = objstore.MemoryObjectStore()
            store_wire_objects(check_store, verify.objects)
            if verify.refs.get("main") != cid:
                raise BenchSetupFailed(f"{name}: ref did not land")
            object_closure(check_store, [cid])
            with results_lock:
                push_spans.append(finished - push_started)
                clone_to_push_spans.append(finished - clone_started)
        except Exception as exc:  # noqa: BLE001 - report per-worker outcome
            with results_lock:
                failures.append(f"client {student}: {exc}")

    started = time.perf_counter()
    cpu_started = time.process_time()
    threads = [threading.Thread(target=worker, args=(i,)) for i in range(n_clients)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    wall = time.perf_counter() - started
    cpu_spent = time.process_time() - cpu_started

    if core is not None:
        crawl_problems = core.crawl()

    report = BenchReport(kind="concurrency")
    report.pushes_attempted = n_clients
    report.pushes_succeeded = n_clients - len(failures)
    report.latency_p50 = percentile(push_spans, 0.50)
    report.latency_p95 = percentile(push_spans, 0.95)
    report.latency_max = max(push_spans, default=0.0)
    report.clone_to_push_p50 = percentile(clone_to_push_spans, 0.50)
    report.clone_to_push_max = max(clone_to_push_spans, default=0.0)
    report.peak_in_flight = in_flight.peak
    report.wall_seconds = wall
    # meaningful only when the server runs in this process (core embedded);
    # against a remote server this is client-side cost alone
    report.cpu_utilization = cpu_spent / wall if wall > 0 else None
    report.crawl_problems = failures + crawl_problems
    return report


def run_shared_branch_race(server_url: str, n_clients: int) -> tuple[int, list[str]]:
    """N workers race one branch with retry-on-RefConflict.

    Returns (commits on the branch afterwards, failure strings); every
    worker must land exactly one commit for the race to count as clean.
    """
    setup = ApiClient(server_url)
    try:
        setup.register("race-prof", BENCH_PASSWORD, "instructor")
        setup.login("race-prof", BENCH_PASSWORD)
    except (TransportError, ApiError) as exc:
        raise BenchSetupFailed(f"cannot reach or prepare server: {exc}") from exc
    assignment = setup.create_assignment("race", int(time.time()) + 86400)

    owner = ApiClient(server_url)
    owner.register("race-owner", BENCH_PASSWORD, "student")
    owner.login("race-owner", BENCH_PASSWORD)
    repo_id = owner.join(assignment["invite_code"])

    failures: list[str] = []
    barrier = threading.Barrier(n_clients)

    def worker(i: int) -> None:
        api = ApiClient(server_url, token=owner.token)
        local = history.RepoState(repo_id="local", owners={"race-owner"},
                                  objects=objstore.MemoryObjectStore())
        barrier.wait(timeout=60)
        for attempt in range(n_clients * 4):
            remote = api.fetch_repo(repo_id)
            store_wire_objects(local.objects, remote.objects)
            parent = remote.refs.get("main")
            parents = (parent,) if parent else ()
            tmp_local, cid = _build_commit_from_files(
                {f"worker_{i}.txt": f"attempt {attempt}\n".encode()},
                "race-owner", parents=parents, message=f"worker {i}",
                authored_at=2000 + i)
            for oid in tmp_local.objects.ids():
                kind, payload = tmp_local.objects.get(oid)
                local.objects.put(kind, payload)
            objects = collect_push_objects(
                history.RepoState(repo_id="x", owners={"race-owner"},
                                  objects=local.objects, refs={"main": cid}),
                {"main": parent} if parent else {})
            try:
                api.push(repo_id, "main", cid, expected_old=parent, objects=objects)
                return
            except ApiError as exc:
                if exc.code != "ref_conflict":
                    failures.append(f"worker {i}: {exc}")
                    return
                continue  # lost the race: refetch and retry
        failures.append(f"worker {i}: starved out of retries")

    threads = [threading.Thread(target=worker, args=(i,)) for i in range(n_clients)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()

    final = owner.fetch_repo(repo_id)
    check = objstore.MemoryObjectStore()
    store_wire_objects(check, final.objects)
    tip = final.refs.get("main")
    commit_count = 0
    while tip:
        commit = objstore.parse_commit(check.get(tip)[1])
        commit_count += 1
        tip = commit.parents[0] if commit.parents else None
    return commit_count, failures
