"""Line-level three-way merge of a file against its common ancestor.

Both sides are aligned to the base with a canonical LCS: equal head lines
are always paired, and on a DP tie the base side advances first.  Regions
where base, ours, and theirs stay in step are emitted verbatim; between
them, a region changed on one side only takes that side, identical changes
collapse, and diverging changes become a conflict hunk.

The same alignment rule is what any independent checker must implement to
reproduce merges bit-for-bit, so it is part of this module's contract.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

OURS_MARK = b"<<<<<<< ours\n"
SPLIT_MARK = b"=======\n"
THEIRS_MARK = b">>>>>>> theirs\n"


def lcs_pairs(a: Sequence, b: Sequence) -> list[tuple[int, int]]:
    """Canonical longest-common-subsequence alignment of two sequences.

    Returns strictly increasing (i, j) pairs with a[i] == b[j].
    Reconstruction pairs equal heads eagerly and advances `a` on ties.
    """
    n, m = len(a), len(b)
    # dp[i][j] = LCS length of a[i:], b[j:], rolled row by row from the end
    dp = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        row, nxt = dp[i], dp[i + 1]
        ai = a[i]
        for j in range(m - 1, -1, -1):
            if ai == b[j]:
                row[j] = nxt[j + 1] + 1
            else:
                row[j] = nxt[j] if nxt[j] >= row[j + 1] else row[j + 1]
    pairs = []
    i = j = 0
    while i < n and j < m:
        if a[i] == b[j]:
            pairs.append((i, j))
            i += 1
            j += 1
        elif dp[i + 1][j] >= dp[i][j + 1]:
            i += 1
        else:
            j += 1
    return pairs


def split_keep_ends(data: bytes) -> list[bytes]:
    """LF-terminated line split preserving terminators (no \\r handling)."""
    if not data:
        return []
    lines = data.split(b"\n")
    out = [line + b"\n" for line in lines[:-1]]
    if lines[-1] != b"":
        out.append(lines[-1])
    return out


@dataclass
class ConflictHunk:
    ours: bytes
    theirs: bytes
    base: bytes


@dataclass
class MergedFile:
    """Result of merging one file; `content` is marker-free when clean."""

    content: bytes
    conflicts: list[ConflictHunk] = field(default_factory=list)
    _chunks: list[tuple[str, bytes, bytes, bytes]] = field(default_factory=list, repr=False)

    @property
    def clean(self) -> bool:
        return not self.conflicts

    def with_markers(self) -> bytes:
        """Render the merge with <<<<<<< ours / ======= / >>>>>>> theirs markers."""
        out = []
        for tag, ours, theirs, _base in self._chunks:
            if tag == "ok":
                out.append(ours)
            else:
                out.append(OURS_MARK)
                out.append(_ensure_nl(ours))
                out.append(SPLIT_MARK)
                out.append(_ensure_nl(theirs))
                out.append(THEIRS_MARK)
        return b"".join(out)


def _ensure_nl(chunk: bytes) -> bytes:
    if chunk and not chunk.endswith(b"\n"):
        return chunk + b"\n"
    return chunk


def merge_lines(base: bytes, ours: bytes, theirs: bytes) -> MergedFile:
    o_lines = split_keep_ends(base)
    a_lines = split_keep_ends(ours)
    b_lines = split_keep_ends(theirs)

    match_a = dict(lcs_pairs(o_lines, a_lines))
    match_b = dict(lcs_pairs(o_lines, b_lines))

    chunks: list[tuple[str, bytes, bytes, bytes]] = []
    conflicts: list[ConflictHunk] = []
    lo = la = lb = 0

    def emit(o_end: int, a_end: int, b_end: int) -> None:
        nonlocal lo, la, lb
        oc = b"".join(o_lines[lo:o_end])
        ac = b"".join(a_lines[la:a_end])
        bc = b"".join(b_lines[lb:b_end])
        if ac == bc:
            chunks.append(("ok", ac, bc, oc))
        elif oc == ac:
            chunks.append(("ok", bc, bc, oc))
        elif oc == bc:
            chunks.append(("ok", ac, ac, oc))
        else:
            chunks.append(("conflict", ac, bc, oc))
            conflicts.append(ConflictHunk(ours=ac, theirs=bc, base=oc))
        lo, la, lb = o_end, a_end, b_end

    while lo < len(o_lines) or la < len(a_lines) or lb < len(b_lines):
        # length of the run where all three files are in step
        step = 0
        while (match_a.get(lo + step) == la + step
               and match_b.get(lo + step) == lb + step):
            step += 1
        if step > 0:
            chunks.append(("ok", b"".join(a_lines[la:la + step]), b"", b""))
            lo, la, lb = lo + step, la + step, lb + step
            continue
        # scan for the next base line matched on both sides
        sync = lo
        while sync < len(o_lines) and not (sync in match_a and sync in match_b):
            sync += 1
        if sync < len(o_lines):
            emit(sync, match_a[sync], match_b[sync])
        else:
            emit(len(o_lines), len(a_lines), len(b_lines))

    merged = b"".join(c[1] for c in chunks if c[0] == "ok")
    result = MergedFile(content=merged, conflicts=conflicts)
    result._chunks = chunks
    return result
