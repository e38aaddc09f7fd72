// Typed client for the submission service REST protocol.
// Every view renders data that came out of these calls and nothing else.

export interface ErrorEnvelope {
  error: string;
  detail: string;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    public readonly detail: string,
  ) {
    super(`${code}: ${detail}`);
  }
}

export interface SubmissionRow {
  username: string;
  repo_id: string;
  submitted: boolean;
  head_commit: string | null;
  last_push_at: number | null;
  late: boolean;
}

export interface SimilarityPair {
  a: string;
  b: string;
  score: number;
}

export interface SimilarityReport {
  assignment_id: string;
  filename: string;
  matrix: SimilarityPair[];
  bands: Record<string, string>;
  missing: string[];
}

export interface ContributionReport {
  repo_id: string;
  total_commits: number;
  counts: Record<string, number>;
  shares: Record<string, number>;
  dominant: string | null;
}

export interface LatePush {
  repo_id: string;
  pusher: string;
  received_at: number;
}

export interface TimingReport {
  assignment_id: string;
  deadline: number;
  total_pushes: number;
  fraction_last_48h: number;
  late: LatePush[];
}

export interface CreatedAssignment {
  assignment_id: string;
  invite_code: string;
}

export interface WireObject {
  id: string;
  kind: string;
  payload_b64: string;
}

export interface FetchResponse {
  refs: { name: string; target: string }[];
  head: string;
  objects: WireObject[];
}

export class DashboardApi {
  constructor(
    public baseUrl: string,
    public token: string | null = null,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = { "Content-Type": "application/json" };
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    const response = await fetch(this.baseUrl + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      let envelope: ErrorEnvelope = { error: "error", detail: response.statusText };
      try {
        envelope = (await response.json()) as ErrorEnvelope;
      } catch {
        // non-JSON error body: keep the status text
      }
      throw new ApiError(response.status, envelope.error, envelope.detail);
    }
    return (await response.json()) as T;
  }

  async login(username: string, password: string): Promise<string> {
    const body = await this.request<{ token: string }>("POST", "/api/login", {
      username,
      password,
    });
    this.token = body.token;
    return body.token;
  }

  async register(username: string, password: string, role: string): Promise<void> {
    await this.request("POST", "/api/register", { username, password, role });
  }

  logoutLocal(): void {
    this.token = null;
  }

  async logout(): Promise<void> {
    await this.request("POST", "/api/logout", {});
    this.token = null;
  }

  createAssignment(
    title: string,
    deadline: number,
    templateRepo?: string,
  ): Promise<CreatedAssignment> {
    return this.request("POST", "/api/assignments", {
      title,
      deadline,
      template_repo: templateRepo ?? null,
    });
  }

  submissions(assignmentId: string): Promise<SubmissionRow[]> {
    return this.request("GET", `/api/assignments/${assignmentId}/submissions`);
  }

  similarity(assignmentId: string, file: string): Promise<SimilarityReport> {
    const query = new URLSearchParams({ file }).toString();
    return this.request("GET", `/api/assignments/${assignmentId}/similarity?${query}`);
  }

  contributions(repoId: string, members: string[]): Promise<ContributionReport> {
    const query = new URLSearchParams({ members: members.join(",") }).toString();
    return this.request("GET", `/api/repos/${repoId}/analytics/contributions?${query}`);
  }

  timing(assignmentId: string): Promise<TimingReport> {
    return this.request("GET", `/api/assignments/${assignmentId}/timing`);
  }

  fetchRepo(repoId: string): Promise<FetchResponse> {
    return this.request("GET", `/api/repos/${repoId}/fetch`);
  }
}
