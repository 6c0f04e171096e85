/**
 * Browser entry point: hash routing between the review queue and the
 * agreement dashboard, reviewer identity, optimistic decisions with
 * conflict toasts, and a non-blocking error banner with retry.
 */

import { Api, ApiError } from "./api.js";
import { diffTaxonomies } from "./diff.js";
import { buildHeatmap } from "./heatmap.js";
import { QueueModel } from "./queue.js";
import {
  renderDiff,
  renderEmptyDashboard,
  renderErrorBanner,
  renderHeatmap,
  renderMetricCards,
  renderPerClassTable,
  renderQueue,
  renderTaxonomy,
} from "./render.js";
import type { DecisionKind, Stage } from "./types.js";

const api = new Api("");

function reviewerId(): string {
  let id = localStorage.getItem("reviewer_id") ?? "";
  while (!id.trim()) {
    id = window.prompt("Reviewer identifier:") ?? "";
  }
  localStorage.setItem("reviewer_id", id);
  return id;
}

function toast(message: string, kind: string): void {
  const host = document.getElementById("toasts")!;
  const node = document.createElement("div");
  node.className = `toast ${kind}`;
  node.textContent = message;
  host.appendChild(node);
  setTimeout(() => node.remove(), 6000);
}

const queue = new QueueModel(api, "", {
  onChange: () => paintQueue(),
  onToast: toast,
});

function paintQueue(): void {
  const main = document.getElementById("content")!;
  const banner = queue.lastError ? renderErrorBanner(queue.lastError) : "";
  main.innerHTML = `
<nav class="stage-nav">
  <a href="#/queue/structural">Structural review</a>
  <a href="#/queue/domain_expert">Domain-expert review</a>
  <a href="#/dashboard">Dashboard</a>
</nav>
${banner}
<div id="queue">${renderQueue(queue.items, (item) => queue.contextFor(item))}</div>`;
  main.querySelector('[data-action="retry"]')?.addEventListener("click", () => {
    void queue.load(queue.stage);
  });
  for (const button of main.querySelectorAll<HTMLButtonElement>("button[data-action][data-item]")) {
    button.addEventListener("click", () => {
      const card = button.closest(".review-card")!;
      const comment =
        card.querySelector<HTMLTextAreaElement>('[data-field="comment"]')?.value ?? "";
      const challenge =
        card.querySelector<HTMLTextAreaElement>('[data-field="challenge"]')?.value || undefined;
      void queue.decide(button.dataset.item!, {
        decision: button.dataset.action as DecisionKind,
        comment,
        challenge,
      });
    });
  }
}

async function showDashboard(runId?: string): Promise<void> {
  const main = document.getElementById("content")!;
  try {
    let id = runId;
    if (!id) {
      const runs = await api.runs();
      id = runs.runs.find((r) => r.dataset_refs.report)?.run_id ?? runs.runs[0]?.run_id;
    }
    if (!id) {
      main.innerHTML = `<p class="empty-state">No runs yet.</p>`;
      return;
    }
    const [report, matrix] = await Promise.all([api.report(id), api.confusion(id)]);
    const heatmap = buildHeatmap(matrix);
    if (heatmap.total !== report.n) {
      toast(`heatmap total ${heatmap.total} does not match report n ${report.n}`, "error");
    }
    main.innerHTML = `
<nav class="stage-nav">
  <a href="#/queue/structural">Structural review</a>
  <a href="#/queue/domain_expert">Domain-expert review</a>
  <a href="#/dashboard">Dashboard</a>
</nav>
<h2>Run ${id}</h2>
${renderMetricCards(report)}
${renderPerClassTable(report)}
<h3>Confusion matrix</h3>
${renderHeatmap(heatmap)}
<p class="note">${report.note}</p>`;
  } catch (error) {
    if (error instanceof ApiError && error.status === 404) {
      main.innerHTML = renderEmptyDashboard(runId ?? "latest");
    } else {
      main.innerHTML = renderErrorBanner(
        error instanceof Error ? error.message : String(error),
      );
      main
        .querySelector('[data-action="retry"]')
        ?.addEventListener("click", () => void showDashboard(runId));
    }
  }
}

async function showDiff(fromId: string, toId: string): Promise<void> {
  const main = document.getElementById("content")!;
  try {
    const [from, to] = await Promise.all([api.taxonomy(fromId), api.taxonomy(toId)]);
    main.innerHTML = `
<div class="diff-columns">
  <div>${renderTaxonomy(from.taxonomy)}</div>
  <div>${renderTaxonomy(to.taxonomy)}</div>
</div>
${renderDiff(diffTaxonomies(from.taxonomy, to.taxonomy))}`;
  } catch (error) {
    main.innerHTML = renderErrorBanner(error instanceof Error ? error.message : String(error));
  }
}

function route(): void {
  const hash = window.location.hash || "#/queue/structural";
  const parts = hash.replace(/^#\//, "").split("/");
  if (parts[0] === "queue") {
    const stage = (parts[1] as Stage) || "structural";
    void queue.load(stage);
  } else if (parts[0] === "dashboard") {
    void showDashboard(parts[1]);
  } else if (parts[0] === "diff" && parts.length >= 3) {
    void showDiff(parts[1], parts[2]);
  } else {
    window.location.hash = "#/queue/structural";
  }
}

window.addEventListener("hashchange", route);
window.addEventListener("DOMContentLoaded", () => {
  queue.reviewerId = reviewerId();
  route();
});
