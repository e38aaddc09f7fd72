// Pure HTML renderers: API JSON in, markup out.  No fetching, no state,
// so every view is snapshot-testable and every rendered number traces
// straight back to a response field.

import type {
  ContributionReport,
  CreatedAssignment,
  SimilarityReport,
  SubmissionRow,
  TimingReport,
} from "./api.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function stamp(unixSeconds: number | null): string {
  if (unixSeconds === null) return "—";
  return new Date(unixSeconds * 1000).toISOString().replace("T", " ").slice(0, 16);
}

// --- bands -----------------------------------------------------------------

export function bandOf(score: number): "high" | "medium" | "distinct" {
  if (score >= 0.98) return "high";
  if (score >= 0.8) return "medium";
  return "distinct";
}

// --- submissions table --------------------------------------------------------

export type SubmissionSort = "username" | "push_time";

export function sortSubmissions(
  rows: SubmissionRow[],
  by: SubmissionSort,
): SubmissionRow[] {
  const sorted = [...rows];
  if (by === "push_time") {
    sorted.sort((a, b) => (b.last_push_at ?? -1) - (a.last_push_at ?? -1));
  } else {
    sorted.sort((a, b) => a.username.localeCompare(b.username));
  }
  return sorted;
}

export function renderSubmissionsTable(
  rows: SubmissionRow[],
  sortBy: SubmissionSort = "username",
): string {
  if (rows.length === 0) {
    return `<p class="empty">No enrollments yet.</p>`;
  }
  const body = sortSubmissions(rows, sortBy)
    .map((row) => {
      const badge = !row.submitted
        ? `<span class="badge not-submitted">not submitted</span>`
        : row.late
          ? `<span class="badge late">late</span>`
          : `<span class="badge ok">on time</span>`;
      const head = row.head_commit
        ? `<code>${escapeHtml(row.head_commit.slice(0, 8))}</code>`
        : "—";
      return (
        `<tr data-username="${escapeHtml(row.username)}">` +
        `<td>${escapeHtml(row.username)}</td>` +
        `<td><code>${escapeHtml(row.repo_id)}</code></td>` +
        `<td>${badge}</td>` +
        `<td>${stamp(row.last_push_at)}</td>` +
        `<td>${head}</td></tr>`
      );
    })
    .join("\n");
  return (
    `<table class="submissions" data-sort="${sortBy}">` +
    `<thead><tr><th>student</th><th>repository</th><th>status</th>` +
    `<th data-sort-key="push_time">last push</th><th>head</th></tr></thead>` +
    `<tbody>\n${body}\n</tbody></table>`
  );
}

// --- similarity heatmap ----------------------------------------------------------

export function renderSimilarityHeatmap(report: SimilarityReport): string {
  const students = [...new Set(report.matrix.flatMap((p) => [p.a, p.b]))].sort();
  if (students.length === 0) {
    return `<p class="empty">No scored pairs for ${escapeHtml(report.filename)} yet.</p>`;
  }
  const score = new Map<string, number>();
  for (const pair of report.matrix) {
    score.set(`${pair.a}|${pair.b}`, pair.score);
    score.set(`${pair.b}|${pair.a}`, pair.score);
  }
  const header = students
    .map((s) => `<th class="rot">${escapeHtml(s)}</th>`)
    .join("");
  const rows = students
    .map((rowStudent, i) => {
      const cells = students
        .map((colStudent, j) => {
          if (j <= i) return `<td class="blank"></td>`;
          const value = score.get(`${rowStudent}|${colStudent}`);
          if (value === undefined) return `<td class="blank"></td>`;
          const band = bandOf(value);
          return (
            `<td class="cell ${band}" tabindex="0" ` +
            `data-pair="${escapeHtml(rowStudent)}/${escapeHtml(colStudent)}" ` +
            `data-score="${value}" ` +
            `title="${escapeHtml(rowStudent)} × ${escapeHtml(colStudent)}: ${value.toFixed(2)}">` +
            `${value.toFixed(2)}</td>`
          );
        })
        .join("");
      return `<tr><th>${escapeHtml(rowStudent)}</th>${cells}</tr>`;
    })
    .join("\n");
  const missing =
    report.missing.length > 0
      ? `<p class="missing">file missing for: ${report.missing.map(escapeHtml).join(", ")}</p>`
      : "";
  return (
    `<table class="heatmap"><thead><tr><th></th>${header}</tr></thead>` +
    `<tbody>\n${rows}\n</tbody></table>` +
    `<div class="legend">` +
    `<span class="cell high">high ≥ 0.98</span>` +
    `<span class="cell medium">medium 0.80–0.97</span>` +
    `<span class="cell distinct">distinct &lt; 0.80</span></div>` +
    missing
  );
}

// --- contribution chart -------------------------------------------------------------

export function renderContributionChart(report: ContributionReport): string {
  const members = Object.keys(report.counts).sort();
  if (report.total_commits === 0 || members.length === 0) {
    return `<p class="empty">No commits in this repository yet.</p>`;
  }
  const bars = members
    .map((member) => {
      const share = report.shares[member] ?? 0;
      const dominant = report.dominant === member;
      const width = Math.round(share * 100);
      return (
        `<div class="bar-row${dominant ? " dominant" : ""}" data-member="${escapeHtml(member)}">` +
        `<span class="member">${escapeHtml(member)}${dominant ? " ★" : ""}</span>` +
        `<div class="bar" style="width:${width}%"></div>` +
        `<span class="share">${(share * 100).toFixed(0)}% (${report.counts[member]})</span>` +
        `</div>`
      );
    })
    .join("\n");
  const note = report.dominant
    ? `<p class="note">★ ${escapeHtml(report.dominant)} authored more than half of ` +
      `${report.total_commits} commits.</p>`
    : `<p class="note">No member exceeds half of ${report.total_commits} commits.</p>`;
  return `<div class="contributions">\n${bars}\n</div>${note}`;
}

// --- commit / push timeline ------------------------------------------------------------

export interface TimelinePoint {
  at: number;
  kind: "commit" | "push";
  label: string;
}

export function renderTimeline(points: TimelinePoint[]): string {
  if (points.length === 0) {
    return `<p class="empty">Nothing to plot yet.</p>`;
  }
  const ordered = [...points].sort((a, b) => b.at - a.at);
  const items = ordered
    .map(
      (p) =>
        `<li class="${p.kind}"><time>${stamp(p.at)}</time> ` +
        `<span class="kind">${p.kind}</span> ${escapeHtml(p.label)}</li>`,
    )
    .join("\n");
  return `<ol class="timeline">\n${items}\n</ol>`;
}

// --- assignment creation ----------------------------------------------------------------

export function renderInvitePanel(created: CreatedAssignment): string {
  return (
    `<div class="invite-panel">` +
    `<p>Assignment <code>${escapeHtml(created.assignment_id)}</code> created.</p>` +
    `<p class="invite-code" data-code="${escapeHtml(created.invite_code)}">` +
    `${escapeHtml(created.invite_code)}</p>` +
    `<button type="button" class="copy-code">copy invite code</button></div>`
  );
}

export function renderTimingSummary(report: TimingReport): string {
  const percent = (report.fraction_last_48h * 100).toFixed(0);
  const late = report.late
    .map(
      (p) =>
        `<li>${escapeHtml(p.pusher)} (<code>${escapeHtml(p.repo_id)}</code>) at ${stamp(p.received_at)}</li>`,
    )
    .join("\n");
  return (
    `<div class="timing">` +
    `<p>${report.total_pushes} pushes; ${percent}% within 48 h of the deadline ` +
    `(${stamp(report.deadline)}).</p>` +
    (report.late.length > 0
      ? `<p>${report.late.length} late:</p><ul class="late">\n${late}\n</ul>`
      : `<p>No late pushes.</p>`) +
    `</div>`
  );
}
