// Dashboard wiring: login, assignment selection, and the live views.
// All state that matters comes from the server; the browser only keeps
// the session token and the list of assignments this instructor created
// (the protocol has no assignment-listing call).

import {
  ApiError,
  DashboardApi,
  type CreatedAssignment,
  type SubmissionRow,
} from "./api.js";
import { commitsFromFetch, timelinePoints } from "./commits.js";
import { Poller } from "./poll.js";
import {
  renderContributionChart,
  renderInvitePanel,
  renderSimilarityHeatmap,
  renderSubmissionsTable,
  renderTimeline,
  renderTimingSummary,
  type SubmissionSort,
} from "./views.js";

const STORAGE_KEY = "classgit-dashboard";

interface StoredState {
  serverUrl: string;
  token: string | null;
  username: string | null;
  assignments: (CreatedAssignment & { title: string })[];
}

function loadState(): StoredState {
  const raw = localStorage.getItem(STORAGE_KEY);
  if (raw) return JSON.parse(raw) as StoredState;
  return {
    serverUrl: localStorage.getItem("classgit-server") ?? window.location.origin,
    token: null,
    username: null,
    assignments: [],
  };
}

function saveState(state: StoredState): void {
  localStorage.setItem(STORAGE_KEY, JSON.stringify(state));
}

const state = loadState();
const api = new DashboardApi(state.serverUrl, state.token);
let poller: Poller<SubmissionRow[]> | null = null;
let sortBy: SubmissionSort = "username";

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node;
}

function show(view: "login" | "assignments" | "detail"): void {
  for (const name of ["login", "assignments", "detail"]) {
    el(`view-${name}`).hidden = name !== view;
  }
  poller?.stop();
  poller = null;
}

function toLogin(message = ""): void {
  state.token = null;
  api.logoutLocal();
  saveState(state);
  el("login-error").textContent = message;
  show("login");
}

function guard(error: unknown): void {
  // expired/invalid sessions route to login instead of crashing a view
  if (error instanceof ApiError && error.status === 401) {
    toLogin("session expired; sign in again");
    return;
  }
  const banner = el("banner");
  banner.hidden = false;
  banner.textContent =
    error instanceof ApiError
      ? `${error.code}: ${error.detail}`
      : "network problem: showing the last loaded data";
}

// --- login -----------------------------------------------------------------

el("login-form").addEventListener("submit", (event) => {
  event.preventDefault();
  const username = (el("login-username") as HTMLInputElement).value.trim();
  const password = (el("login-password") as HTMLInputElement).value;
  const server = (el("login-server") as HTMLInputElement).value.trim();
  if (server) {
    api.baseUrl = server;
    state.serverUrl = server;
  }
  api
    .login(username, password)
    .then(() => {
      state.token = api.token;
      state.username = username;
      saveState(state);
      renderAssignmentList();
      show("assignments");
    })
    .catch((error) => {
      el("login-error").textContent =
        error instanceof ApiError ? error.detail : "cannot reach the server";
    });
});

// --- assignment list + creation ------------------------------------------------

function renderAssignmentList(): void {
  const list = el("assignment-list");
  if (state.assignments.length === 0) {
    list.innerHTML = `<p class="empty">No assignments yet; create one below.</p>`;
    return;
  }
  list.innerHTML = state.assignments
    .map(
      (a) =>
        `<li><a href="#" data-assignment="${a.assignment_id}">${a.title}</a> ` +
        `<code>${a.assignment_id}</code> invite <code>${a.invite_code}</code></li>`,
    )
    .join("\n");
  for (const link of list.querySelectorAll("a[data-assignment]")) {
    link.addEventListener("click", (event) => {
      event.preventDefault();
      openAssignment((link as HTMLElement).dataset["assignment"]!);
    });
  }
}

el("create-form").addEventListener("submit", (event) => {
  event.preventDefault();
  const title = (el("create-title") as HTMLInputElement).value.trim();
  const deadlineRaw = (el("create-deadline") as HTMLInputElement).value;
  const deadline = Math.floor(new Date(deadlineRaw).getTime() / 1000);
  api
    .createAssignment(title, deadline)
    .then((created) => {
      state.assignments.push({ ...created, title });
      saveState(state);
      el("create-result").innerHTML = renderInvitePanel(created);
      el("create-result")
        .querySelector(".copy-code")
        ?.addEventListener("click", () => {
          void navigator.clipboard.writeText(created.invite_code);
        });
      el("create-error").textContent = "";
      renderAssignmentList();
    })
    .catch((error) => {
      // 403/422 envelopes surface verbatim as form errors
      el("create-error").textContent =
        error instanceof ApiError ? `${error.code}: ${error.detail}` : String(error);
    });
});

el("logout-button").addEventListener("click", () => {
  api.logout().catch(() => {}).finally(() => toLogin("signed out"));
});

// --- assignment detail -----------------------------------------------------------

let currentAssignment = "";

function openAssignment(assignmentId: string): void {
  currentAssignment = assignmentId;
  el("detail-title").textContent =
    state.assignments.find((a) => a.assignment_id === assignmentId)?.title ??
    assignmentId;
  show("detail");
  startSubmissionsPoll();
  void loadTiming();
}

function startSubmissionsPoll(): void {
  poller?.stop();
  const next = new Poller(
    () => api.submissions(currentAssignment),
    (rows) => {
      el("banner").hidden = true;
      el("submissions").innerHTML = renderSubmissionsTable(rows, sortBy);
      el("submissions")
        .querySelector("[data-sort-key]")
        ?.addEventListener("click", () => {
          sortBy = sortBy === "username" ? "push_time" : "username";
          void poller?.tick();
        });
    },
    guard,
    10_000,
  );
  poller = next;
  next.start();
}

async function loadTiming(): Promise<void> {
  try {
    el("timing").innerHTML = renderTimingSummary(await api.timing(currentAssignment));
  } catch (error) {
    guard(error);
  }
}

el("similarity-form").addEventListener("submit", (event) => {
  event.preventDefault();
  const filename = (el("similarity-file") as HTMLInputElement).value.trim();
  api
    .similarity(currentAssignment, filename)
    .then((report) => {
      el("similarity").innerHTML = renderSimilarityHeatmap(report);
      for (const cell of el("similarity").querySelectorAll(".cell[data-pair]")) {
        cell.addEventListener("click", () => {
          const node = cell as HTMLElement;
          el("similarity-detail").textContent =
            `${node.dataset["pair"]}: score ${node.dataset["score"]}`;
        });
      }
    })
    .catch(guard);
});

el("contrib-form").addEventListener("submit", (event) => {
  event.preventDefault();
  const repoId = (el("contrib-repo") as HTMLInputElement).value.trim();
  const members = (el("contrib-members") as HTMLInputElement).value
    .split(",")
    .map((m) => m.trim())
    .filter(Boolean);
  Promise.all([
    api.contributions(repoId, members),
    api.fetchRepo(repoId),
    api.submissions(currentAssignment),
  ])
    .then(([contrib, repo, rows]) => {
      el("contributions").innerHTML = renderContributionChart(contrib);
      const lastPush =
        rows.find((r) => r.repo_id === repoId)?.last_push_at ?? null;
      el("timeline").innerHTML = renderTimeline(
        timelinePoints(commitsFromFetch(repo), lastPush),
      );
    })
    .catch(guard);
});

el("back-button").addEventListener("click", () => {
  renderAssignmentList();
  show("assignments");
});

// --- boot ------------------------------------------------------------------------

if (state.token) {
  renderAssignmentList();
  show("assignments");
} else {
  show("login");
}
