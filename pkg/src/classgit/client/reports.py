"""Instructor report files: JSON from the API, CSV rows, PNG figures.

Each `write_*` function takes the raw API response, writes the three
artifacts into the output directory, and returns the paths written.
Figures carry the same numbers as the delimited output, never more.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

BAND_COLORS = {"high": "#c0392b", "medium": "#e67e22", "distinct": "#27ae60"}


def _write_json(out_dir: Path, name: str, payload) -> Path:
    path = out_dir / name
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
    return path


def _write_csv(out_dir: Path, name: str, header: list[str], rows: list[list]) -> Path:
    path = out_dir / name
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def band_of(score: float) -> str:
    from .. import analytics
    return analytics.band(score)


def write_similarity_report(report: dict, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [_write_json(out, "similarity.json", report)]

    rows = [[p["a"], p["b"], f"{p['score']:.4f}", band_of(p["score"])]
            for p in report["matrix"]]
    written.append(_write_csv(out, "similarity.csv",
                              ["student_a", "student_b", "score", "band"], rows))

    students = sorted({p["a"] for p in report["matrix"]}
                      | {p["b"] for p in report["matrix"]})
    if students:
        n = len(students)
        pos = {s: i for i, s in enumerate(students)}
        grid = [[None] * n for _ in range(n)]
        for p in report["matrix"]:
            i, j = pos[p["a"]], pos[p["b"]]
            grid[min(i, j)][max(i, j)] = p["score"]
        fig, ax = plt.subplots(figsize=(max(4, 0.6 * n + 2),) * 2)
        for i in range(n):
            for j in range(n):
                score = grid[i][j]
                if score is None:
                    continue
                ax.add_patch(plt.Rectangle((j, n - 1 - i), 1, 1,
                                           color=BAND_COLORS[band_of(score)]))
                ax.text(j + 0.5, n - 0.5 - i, f"{score:.2f}",
                        ha="center", va="center", fontsize=8)
        ax.set_xticks([k + 0.5 for k in range(n)])
        ax.set_xticklabels(students, rotation=45, ha="right", fontsize=8)
        ax.set_yticks([k + 0.5 for k in range(n)])
        ax.set_yticklabels(reversed(students), fontsize=8)
        ax.set_xlim(0, n)
        ax.set_ylim(0, n)
        ax.set_title(f"similarity: {report['filename']}")
        handles = [plt.Rectangle((0, 0), 1, 1, color=c) for c in BAND_COLORS.values()]
        ax.legend(handles, BAND_COLORS.keys(), loc="lower left", fontsize=7)
        fig.tight_layout()
        figure_path = out / "similarity.png"
        fig.savefig(figure_path, dpi=120)
        plt.close(fig)
        written.append(figure_path)
    return written


def write_contribution_report(report: dict, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [_write_json(out, "contributions.json", report)]

    members = sorted(report["counts"])
    rows = [[m, report["counts"][m], f"{report['shares'].get(m, 0.0):.4f}",
             "yes" if report.get("dominant") == m else ""] for m in members]
    written.append(_write_csv(out, "contributions.csv",
                              ["member", "commits", "share", "dominant"], rows))

    if members:
        shares = [report["shares"].get(m, 0.0) for m in members]
        colors = ["#c0392b" if report.get("dominant") == m else "#2980b9"
                  for m in members]
        fig, ax = plt.subplots(figsize=(max(4, 0.8 * len(members) + 2), 3.5))
        ax.bar(members, shares, color=colors)
        ax.axhline(0.5, linestyle="--", linewidth=1, color="#7f8c8d")
        ax.set_ylabel("share of commits")
        ax.set_ylim(0, 1)
        ax.set_title(f"contributions: {report['repo_id']}")
        fig.tight_layout()
        figure_path = out / "contributions.png"
        fig.savefig(figure_path, dpi=120)
        plt.close(fig)
        written.append(figure_path)
    return written


def write_timing_report(report: dict, out_dir: str | Path,
                        pushes: list[dict] | None = None) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [_write_json(out, "timing.json", report)]

    rows = [[e["repo_id"], e["pusher"], e["received_at"]] for e in report["late"]]
    written.append(_write_csv(out, "timing_late.csv",
                              ["repo_id", "pusher", "received_at"], rows))

    fig, ax = plt.subplots(figsize=(5, 3.2))
    window = report["fraction_last_48h"]
    ax.bar(["last 48 h", "earlier"], [window, max(0.0, 1.0 - window)],
           color=["#e67e22", "#2980b9"])
    ax.set_ylim(0, 1)
    ax.set_ylabel("fraction of pushes")
    ax.set_title(f"push timing ({report['total_pushes']} pushes, "
                 f"{len(report['late'])} late)")
    fig.tight_layout()
    figure_path = out / "timing.png"
    fig.savefig(figure_path, dpi=120)
    plt.close(fig)
    written.append(figure_path)
    return written


def write_submissions_report(rows: list[dict], out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [_write_json(out, "submissions.json", rows)]
    csv_rows = [[r["username"], r["repo_id"], "yes" if r["submitted"] else "no",
                 r.get("head_commit") or "", r.get("last_push_at") or "",
                 "yes" if r.get("late") else ""] for r in rows]
    written.append(_write_csv(out, "submissions.csv",
                              ["username", "repo_id", "submitted", "head_commit",
                               "last_push_at", "late"], csv_rows))
    return written
