"""Benchmark harness: concurrency, latency, and storage-savings runs."""

from .harness import run_concurrency_bench, run_shared_branch_race, run_storage_bench
from .workload import Workload

__all__ = ["Workload", "run_concurrency_bench", "run_storage_bench",
           "run_shared_branch_race"]
