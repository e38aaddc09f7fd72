// Decode commit objects from the fetch endpoint for the timeline view.
// Commit payloads are line-oriented text: a tree line, optional parent
// lines, an author line with a unix timestamp, a blank line, the message.

import type { FetchResponse } from "./api.js";
import type { TimelinePoint } from "./views.js";

export interface CommitInfo {
  id: string;
  parents: string[];
  author: string;
  authoredAt: number;
  message: string;
}

export function parseCommitPayload(id: string, text: string): CommitInfo | null {
  const split = text.indexOf("\n\n");
  if (split < 0) return null;
  const head = text.slice(0, split).split("\n");
  const message = text.slice(split + 2);
  const parents: string[] = [];
  let author = "";
  let authoredAt = 0;
  for (const line of head) {
    if (line.startsWith("parent ")) {
      parents.push(line.slice("parent ".length));
    } else if (line.startsWith("author ")) {
      const rest = line.slice("author ".length);
      const cut = rest.lastIndexOf(" ");
      if (cut < 0) return null;
      author = rest.slice(0, cut);
      authoredAt = Number(rest.slice(cut + 1));
    }
  }
  if (!author || Number.isNaN(authoredAt)) return null;
  return { id, parents, author, authoredAt, message };
}

function decodeBase64(payload: string): string {
  // atob is global in browsers and node ≥ 16 alike
  const raw = atob(payload);
  const bytes = Uint8Array.from(raw, (c) => c.charCodeAt(0));
  return new TextDecoder().decode(bytes);
}

export function commitsFromFetch(response: FetchResponse): CommitInfo[] {
  const commits: CommitInfo[] = [];
  for (const object of response.objects) {
    if (object.kind !== "commit") continue;
    const parsed = parseCommitPayload(object.id, decodeBase64(object.payload_b64));
    if (parsed) commits.push(parsed);
  }
  commits.sort((a, b) => b.authoredAt - a.authoredAt || a.id.localeCompare(b.id));
  return commits;
}

export function timelinePoints(
  commits: CommitInfo[],
  lastPushAt: number | null,
): TimelinePoint[] {
  const points: TimelinePoint[] = commits.map((c) => ({
    at: c.authoredAt,
    kind: "commit",
    label: `${c.author}: ${c.message.split("\n")[0] ?? ""} (${c.id.slice(0, 8)})`,
  }));
  if (lastPushAt !== null) {
    points.push({ at: lastPushAt, kind: "push", label: "latest push received" });
  }
  return points;
}
