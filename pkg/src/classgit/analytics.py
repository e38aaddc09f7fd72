"""Instructor analytics: similarity, contribution, timing, branch activity.

Similarity is a line-level longest-common-subsequence ratio with an
identical-blob shortcut; near-identical submissions land in the "high"
band exactly as copy-pasted files should.  Timing uses server receive
times (push records), never client commit timestamps, so it cannot be
spoofed by adjusting a laptop clock.  All computations are pure reads
over immutable objects and append-only logs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Mapping, Sequence

from . import objstore
from .errors import UnknownRepo

if TYPE_CHECKING:
    from .history import RepoState

BAND_HIGH = "high"          # score >= 0.98
BAND_MEDIUM = "medium"      # 0.80 <= score < 0.98
BAND_DISTINCT = "distinct"  # score < 0.80

HIGH_THRESHOLD = 0.98
MEDIUM_THRESHOLD = 0.80

LAST_RUSH_WINDOW = 48 * 3600


def band(score: float) -> str:
    if score >= HIGH_THRESHOLD:
        return BAND_HIGH
    if score >= MEDIUM_THRESHOLD:
        return BAND_MEDIUM
    return BAND_DISTINCT


def lcs_length(a: Sequence, b: Sequence) -> int:
    """Length of the longest common subsequence (two-row DP)."""
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            if x == y:
                cur.append(prev[j] + 1)
            else:
                cur.append(max(prev[j + 1], cur[j]))
        prev = cur
    return prev[-1]


def similarity_lines(text: str) -> list[str]:
    """LF-split lines with per-line trailing whitespace trimmed."""
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return [line.rstrip() for line in lines]


def pairwise_similarity(a: bytes, b: bytes,
                        a_id: str | None = None, b_id: str | None = None) -> float:
    """2*LCS(lines_a, lines_b) / (|lines_a| + |lines_b|), in [0, 1].

    Identical blob ids (or identical bytes) short-circuit to 1.0; pairs
    that do not decode as UTF-8 score 1.0 iff identical, else 0.0.
    """
    if (a_id is not None and a_id == b_id) or a == b:
        return 1.0
    try:
        la = similarity_lines(a.decode("utf-8"))
        lb = similarity_lines(b.decode("utf-8"))
    except UnicodeDecodeError:
        return 0.0
    total = len(la) + len(lb)
    if total == 0:
        return 1.0
    return 2.0 * lcs_length(la, lb) / total


# --- similarity report -------------------------------------------------------

@dataclass(frozen=True)
class PairScore:
    a: str
    b: str
    score: float


@dataclass
class SimilarityReport:
    assignment_id: str
    filename: str
    pairs: list[PairScore]
    bands: dict[str, str]       # student -> band of their max pairwise score
    missing: list[str]          # students whose submission lacks the file

    def to_json_obj(self) -> dict:
        return {
            "assignment_id": self.assignment_id,
            "filename": self.filename,
            "matrix": [{"a": p.a, "b": p.b, "score": p.score} for p in self.pairs],
            "bands": dict(sorted(self.bands.items())),
            "missing": sorted(self.missing),
        }


def similarity_report(assignment_id: str, filename: str,
                      submissions: Mapping[str, tuple[str, bytes] | None]) -> SimilarityReport:
    """Score every unordered pair of students that submitted the file.

    ``submissions`` maps student -> (blob id, content), or None when the
    file is missing from that student's latest pushed commit.
    """
    present = sorted(s for s, v in submissions.items() if v is not None)
    missing = sorted(s for s, v in submissions.items() if v is None)
    pairs: list[PairScore] = []
    best: dict[str, float] = {}
    for i, sa in enumerate(present):
        for sb in present[i + 1:]:
            id_a, bytes_a = submissions[sa]  # type: ignore[misc]
            id_b, bytes_b = submissions[sb]  # type: ignore[misc]
            score = pairwise_similarity(bytes_a, bytes_b, a_id=id_a, b_id=id_b)
            pairs.append(PairScore(a=sa, b=sb, score=score))
            best[sa] = max(best.get(sa, 0.0), score)
            best[sb] = max(best.get(sb, 0.0), score)
    bands = {student: band(score) for student, score in best.items()}
    return SimilarityReport(assignment_id=assignment_id, filename=filename,
                            pairs=pairs, bands=bands, missing=missing)


# --- contribution report -----------------------------------------------------

@dataclass
class ContributionReport:
    repo_id: str
    total_commits: int
    counts: dict[str, int]
    shares: dict[str, float]
    dominant: str | None

    def to_json_obj(self) -> dict:
        return {
            "repo_id": self.repo_id,
            "total_commits": self.total_commits,
            "counts": dict(sorted(self.counts.items())),
            "shares": dict(sorted(self.shares.items())),
            "dominant": self.dominant,
        }


def contribution_report(repo: "RepoState", members: Sequence[str]) -> ContributionReport:
    """Commit counts and shares over commits reachable from main.

    Shares are taken over every author seen (plus listed members), so
    they always sum to 1; the dominant flag only ever names a listed
    member with a share strictly above one half, and only for teams of
    two or more.
    """
    from .history import DEFAULT_BRANCH, reachable_commits  # local to avoid cycle

    tip = repo.refs.get(DEFAULT_BRANCH)
    counts: dict[str, int] = {m: 0 for m in members}
    total = 0
    for oid in reachable_commits(repo.objects, tip):
        author = objstore.load_commit(repo.objects, oid).author
        counts[author] = counts.get(author, 0) + 1
        total += 1
    shares = {who: n / total for who, n in counts.items()} if total else {}
    dominant = None
    if len(members) >= 2:
        for member in members:
            if shares.get(member, 0.0) > 0.5:
                dominant = member
                break
    return ContributionReport(repo_id=repo.repo_id, total_commits=total,
                              counts=counts, shares=shares, dominant=dominant)


# --- timing report -----------------------------------------------------------

@dataclass(frozen=True)
class PushEvent:
    repo_id: str
    pusher: str
    received_at: int


@dataclass
class TimingReport:
    assignment_id: str
    deadline: int
    total_pushes: int
    fraction_last_48h: float
    late: list[PushEvent]

    def to_json_obj(self) -> dict:
        return {
            "assignment_id": self.assignment_id,
            "deadline": self.deadline,
            "total_pushes": self.total_pushes,
            "fraction_last_48h": self.fraction_last_48h,
            "late": [{"repo_id": e.repo_id, "pusher": e.pusher,
                      "received_at": e.received_at} for e in self.late],
        }


def timing_report(assignment_id: str, deadline: int,
                  pushes: Sequence[PushEvent]) -> TimingReport:
    """Classify pushes by server receive time against the deadline.

    The 48 h window is [deadline - 48h, deadline] with a closed upper
    bound: a push exactly at the deadline is in the window and not late.
    """
    window_start = deadline - LAST_RUSH_WINDOW
    in_window = sum(1 for p in pushes if window_start <= p.received_at <= deadline)
    late = [p for p in pushes if p.received_at > deadline]
    fraction = in_window / len(pushes) if pushes else 0.0
    return TimingReport(assignment_id=assignment_id, deadline=deadline,
                        total_pushes=len(pushes), fraction_last_48h=fraction,
                        late=late)


# --- branch activity ---------------------------------------------------------

@dataclass
class BranchActivityReport:
    repo_id: str
    branch_count: int
    merges_performed: int
    merges_conflicted: int
    mean_conflicts_per_merge: float

    def to_json_obj(self) -> dict:
        return {
            "repo_id": self.repo_id,
            "branch_count": self.branch_count,
            "merges_performed": self.merges_performed,
            "merges_conflicted": self.merges_conflicted,
            "mean_conflicts_per_merge": self.mean_conflicts_per_merge,
        }


def branch_activity(repo: "RepoState") -> BranchActivityReport:
    """Branch count plus counters over the repo's recorded merge attempts."""
    if repo is None:
        raise UnknownRepo("no repository")
    performed = len(repo.merge_events)
    conflicted = sum(1 for e in repo.merge_events if e.conflict_count > 0)
    total_conflicts = sum(e.conflict_count for e in repo.merge_events)
    mean = total_conflicts / performed if performed else 0.0
    return BranchActivityReport(
        repo_id=repo.repo_id,
        branch_count=len(repo.refs),
        merges_performed=performed,
        merges_conflicted=conflicted,
        mean_conflicts_per_merge=mean,
    )
