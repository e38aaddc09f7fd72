"""Deterministic synthetic workloads.

File content is seeded random bytes: incompressible, so the ZIP baseline
measures snapshot redundancy rather than text entropy, and fully
reproducible from the seed.  Each commit rewrites a small slice of a few
files, the way students keep editing the same sources.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

MUTATION_SLICE = 256  # bytes overwritten per touched file per commit


@dataclass(frozen=True)
class Workload:
    students: int = 20
    files_per_repo: int = 10
    file_size: int = 10 * 1024
    commits_per_student: int = 5
    change_fraction: float = 0.10
    seed: int = 42
    rewrite_everything: bool = False  # fresh random content every commit

    def student_rng(self, student: int) -> random.Random:
        return random.Random(f"{self.seed}:{student}")

    def initial_files(self, rng: random.Random) -> dict[str, bytes]:
        return {f"src/file_{i:03d}.py": rng.randbytes(self.file_size)
                for i in range(self.files_per_repo)}

    def evolve(self, rng: random.Random, files: dict[str, bytes]) -> dict[str, bytes]:
        """Next snapshot: a few files get a small random slice replaced."""
        out = dict(files)
        if self.rewrite_everything:
            return {path: rng.randbytes(self.file_size) for path in out}
        n_changed = max(1, math.ceil(self.change_fraction * len(out)))
        for path in rng.sample(sorted(out), n_changed):
            content = bytearray(out[path])
            size = min(MUTATION_SLICE, len(content)) or 1
            offset = rng.randrange(0, max(1, len(content) - size + 1))
            content[offset:offset + size] = rng.randbytes(size)
            out[path] = bytes(content)
        return out

    def snapshots(self, student: int) -> list[dict[str, bytes]]:
        """The sequence of full file states this student commits."""
        rng = self.student_rng(student)
        current = self.initial_files(rng)
        states = [current]
        for _ in range(self.commits_per_student - 1):
            current = self.evolve(rng, current)
            states.append(current)
        return states
