from __future__ import annotations

import random
from functools import lru_cache

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from classgit import analytics, history, stage

from conftest import commit_files


def oracle_lcs_length(a: tuple, b: tuple) -> int:
    @lru_cache(maxsize=None)
    def rec(i: int, j: int) -> int:
        if i >= len(a) or j >= len(b):
            return 0
        if a[i] == b[j]:
            return 1 + rec(i + 1, j + 1)
        return max(rec(i + 1, j), rec(i, j + 1))

    out = rec(0, 0)
    rec.cache_clear()
    return out


WORDS = ["import", "def main():", "x = 1", "y = 2", "print(x)", "return y",
         "# comment", "", "for i in range(10):", "pass"]


class TestPairwiseSimilarity:
    def test_identical_files(self):
        data = b"line1\nline2\n"
        assert analytics.pairwise_similarity(data, data) == 1.0

    def test_identical_ids_shortcut(self):
        assert analytics.pairwise_similarity(b"a", b"b", a_id="x" * 40, b_id="x" * 40) == 1.0

    def test_no_common_lines(self):
        assert analytics.pairwise_similarity(b"aaa\nbbb\n", b"ccc\nddd\n") == 0.0

    def test_nine_of_ten_shared_lines(self):
        shared = [f"line {i}" for i in range(9)]
        a = "\n".join(shared + ["only a"]) + "\n"
        b = "\n".join(shared + ["only b"]) + "\n"
        score = analytics.pairwise_similarity(a.encode(), b.encode())
        assert score == pytest.approx(2 * 9 / 20)

    def test_trailing_whitespace_trimmed(self):
        assert analytics.pairwise_similarity(b"x  \ny\n", b"x\ny\n") == 1.0

    def test_binary_fallback(self):
        blob_a = b"\xff\xfe\x00binary"
        blob_b = b"\xff\xfe\x00other!"
        assert analytics.pairwise_similarity(blob_a, bytes(blob_a)) == 1.0
        assert analytics.pairwise_similarity(blob_a, blob_b) == 0.0

    @given(a=st.lists(st.sampled_from(WORDS), max_size=40),
           b=st.lists(st.sampled_from(WORDS), max_size=40))
    @settings(max_examples=200)
    def test_symmetry_and_range(self, a, b):
        blob_a = ("\n".join(a) + "\n" if a else "").encode()
        blob_b = ("\n".join(b) + "\n" if b else "").encode()
        s_ab = analytics.pairwise_similarity(blob_a, blob_b)
        s_ba = analytics.pairwise_similarity(blob_b, blob_a)
        assert s_ab == s_ba
        assert 0.0 <= s_ab <= 1.0
        assert analytics.pairwise_similarity(blob_a, bytes(blob_a)) == 1.0

    def test_matches_brute_force_on_500_random_pairs(self):
        rng = random.Random(99)
        for _ in range(500):
            a = [rng.choice(WORDS) for _ in range(rng.randrange(0, 41))]
            b = [rng.choice(WORDS) for _ in range(rng.randrange(0, 41))]
            blob_a = ("\n".join(a) + "\n" if a else "").encode()
            blob_b = ("\n".join(b) + "\n" if b else "").encode()
            got = analytics.pairwise_similarity(blob_a, blob_b)
            if blob_a == blob_b:
                assert got == 1.0
                continue
            expected = 2 * oracle_lcs_length(tuple(a), tuple(b)) / (len(a) + len(b))
            assert got == pytest.approx(expected, abs=0)


class TestBands:
    @pytest.mark.parametrize("score,expected", [
        (1.0, "high"), (0.99, "high"), (0.98, "high"),
        (0.979999, "medium"), (0.85, "medium"), (0.80, "medium"),
        (0.7999, "distinct"), (0.5, "distinct"), (0.0, "distinct"),
    ])
    def test_boundaries(self, score, expected):
        assert analytics.band(score) == expected

    @given(score=st.floats(min_value=0.0, max_value=1.0))
    def test_partition(self, score):
        assert analytics.band(score) in ("high", "medium", "distinct")


class TestSimilarityReport:
    def test_identical_pair_flagged_high(self):
        code = b"model = build()\ntrain(model)\n"
        report = analytics.similarity_report("a1", "cnn.py", {
            "ann": ("i" * 40, code),
            "ben": ("i" * 40, code),
            "cat": ("j" * 40, b"totally\ndifferent\ncontents\n"),
        })
        pair = next(p for p in report.pairs if {p.a, p.b} == {"ann", "ben"})
        assert pair.score == 1.0
        assert report.bands["ann"] == "high"
        assert report.bands["ben"] == "high"

    def test_missing_students_listed_not_scored(self):
        report = analytics.similarity_report("a1", "cnn.py", {
            "ann": ("i" * 40, b"x\n"),
            "ben": None,
        })
        assert report.missing == ["ben"]
        assert report.pairs == []
        assert "ben" not in report.bands

    def test_matrix_has_every_unordered_pair(self):
        report = analytics.similarity_report("a1", "f.py", {
            name: (f"{i}{i}".ljust(40, "0"), f"line{i}\n".encode())
            for i, name in enumerate(["s1", "s2", "s3", "s4"])
        })
        assert len(report.pairs) == 6
        assert all(p.a < p.b for p in report.pairs)

    def test_json_matrix_shape(self):
        report = analytics.similarity_report("a1", "f.py", {
            "a": ("1" * 40, b"x\n"), "b": ("2" * 40, b"x\n")})
        obj = report.to_json_obj()
        assert obj["matrix"] == [{"a": "a", "b": "b", "score": 1.0}]


class TestContribution:
    def make_team_repo(self, store, counts: dict[str, int]):
        repo = history.RepoState(repo_id="team", owners=set(counts), objects=store)
        i = 0
        for author, n in counts.items():
            for _ in range(n):
                stage.stage_file(repo, "work.txt", f"change {i}\n".encode())
                history.create_commit(repo, author, f"c{i}", 1000 + i)
                i += 1
        return repo

    def test_dominant_contributor(self, store):
        repo = self.make_team_repo(store, {"a": 3, "b": 1, "c": 1})
        report = analytics.contribution_report(repo, ["a", "b", "c"])
        assert report.shares["a"] == pytest.approx(0.6)
        assert report.dominant == "a"

    def test_even_split_no_dominant(self, store):
        repo = self.make_team_repo(store, {"a": 2, "b": 2, "c": 2})
        report = analytics.contribution_report(repo, ["a", "b", "c"])
        assert report.dominant is None

    def test_zero_commits(self, store):
        repo = history.RepoState(repo_id="empty", owners={"a"}, objects=store)
        report = analytics.contribution_report(repo, ["a", "b"])
        assert report.total_commits == 0
        assert report.shares == {}
        assert report.dominant is None

    def test_shares_sum_to_one(self, store):
        repo = self.make_team_repo(store, {"a": 5, "b": 2, "c": 4})
        report = analytics.contribution_report(repo, ["a", "b", "c"])
        assert sum(report.shares.values()) == pytest.approx(1.0)

    def test_single_member_team_never_dominant(self, store):
        repo = self.make_team_repo(store, {"solo": 4})
        report = analytics.contribution_report(repo, ["solo"])
        assert report.dominant is None

    def test_recount_matches_walk(self, store):
        repo = self.make_team_repo(store, {"a": 3, "b": 2})
        report = analytics.contribution_report(repo, ["a", "b"])
        recount: dict[str, int] = {}
        for _, commit in history.history_walk(repo, "main"):
            recount[commit.author] = recount.get(commit.author, 0) + 1
        assert report.counts == {**{"a": 0, "b": 0}, **recount}


class TestTiming:
    DEADLINE = 1_000_000_000

    def push(self, at, repo="r1", pusher="s"):
        return analytics.PushEvent(repo_id=repo, pusher=pusher, received_at=at)

    def test_fraction_definition(self):
        report = analytics.timing_report("a1", self.DEADLINE, [
            self.push(self.DEADLINE - 3600),
            self.push(self.DEADLINE - 100 * 3600),
        ])
        assert report.fraction_last_48h == pytest.approx(0.5)

    def test_one_second_late(self):
        report = analytics.timing_report("a1", self.DEADLINE,
                                         [self.push(self.DEADLINE + 1)])
        assert report.fraction_last_48h == 0.0
        assert len(report.late) == 1

    def test_exactly_at_deadline_in_window_not_late(self):
        report = analytics.timing_report("a1", self.DEADLINE,
                                         [self.push(self.DEADLINE)])
        assert report.fraction_last_48h == 1.0
        assert report.late == []

    def test_no_pushes(self):
        report = analytics.timing_report("a1", self.DEADLINE, [])
        assert report.total_pushes == 0
        assert report.fraction_last_48h == 0.0


class TestBranchActivity:
    def test_fresh_repo(self, repo):
        commit_files(repo, {"f": b"1"})
        report = analytics.branch_activity(repo)
        assert report.branch_count == 1
        assert report.merges_performed == 0

    def test_clean_merge_counted(self, repo):
        commit_files(repo, {"f": b"1"})
        history.create_branch(repo, "feat")
        history.switch_branch(repo, "feat")
        commit_files(repo, {"g": b"2"})
        history.switch_branch(repo, "main")
        commit_files(repo, {"h": b"3"})
        history.merge(repo, "main", "feat", "alice", "m", 50)
        report = analytics.branch_activity(repo)
        assert report.branch_count == 2
        assert report.merges_performed == 1
        assert report.merges_conflicted == 0

    def test_conflicted_then_resolved(self, repo):
        commit_files(repo, {"f": b"line\n"})
        history.create_branch(repo, "feat")
        history.switch_branch(repo, "feat")
        commit_files(repo, {"f": b"theirs\n"})
        history.switch_branch(repo, "main")
        commit_files(repo, {"f": b"ours\n"})
        result = history.merge(repo, "main", "feat", "alice", "m", 50)
        assert result.outcome == history.CONFLICTS
        stage.stage_file(repo, "f", b"resolved\n")
        history.create_commit(repo, "alice", "resolve", 60)
        report = analytics.branch_activity(repo)
        # recount from the recorded events
        assert report.merges_performed == len(repo.merge_events) == 1
        assert report.merges_conflicted == 1
        assert report.mean_conflicts_per_merge == pytest.approx(1.0)
