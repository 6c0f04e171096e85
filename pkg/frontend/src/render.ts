/**
 * HTML renderers. Pure string producers so they stay testable without a
 * DOM; main.ts mounts the output and wires events. Metric values are
 * rendered verbatim from the service report (null -> "undefined"),
 * never recomputed or rounded.
 */

import type { CategoryDiff, TaxonomyDiff } from "./diff.js";
import type { HeatmapModel } from "./heatmap.js";
import type { DraftContext } from "./queue.js";
import type { AgreementReport, ReviewItem, Taxonomy } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

export function metricText(value: number | null | undefined): string {
  return value === null || value === undefined ? "undefined" : String(value);
}

export function renderQueueItem(item: ReviewItem, context?: DraftContext): string {
  const categoryName =
    (item.category_id && context?.categoryNames.get(item.category_id)) || item.category_id;
  const scopeLabel = item.category_id
    ? `category <strong>${escapeHtml(categoryName ?? "")}</strong>`
    : "whole taxonomy";
  const features =
    item.category_id && context?.categoryFeatures.get(item.category_id)
      ? `<p class="feature-chips">${Object.keys(context.categoryFeatures.get(item.category_id)!)
          .map((token) => `<span class="chip">${escapeHtml(token)}</span>`)
          .join(" ")}</p>`
      : "";
  const revise =
    item.stage === "domain_expert"
      ? `<button data-action="revised" data-item="${escapeHtml(item.item_id)}">Revise</button>`
      : "";
  const challengeField =
    item.stage === "domain_expert"
      ? `<textarea data-field="challenge" placeholder="Challenge (required for revise)"></textarea>`
      : "";
  return `
<article class="review-card" data-item-id="${escapeHtml(item.item_id)}">
  <header>
    <span class="stage-tag">${escapeHtml(item.stage)}</span>
    <span class="round-tag">round ${item.round}</span>
  </header>
  <p class="scope">${scopeLabel}</p>
  ${features}
  <p class="criterion">${escapeHtml(item.criterion)}</p>
  <textarea data-field="comment" placeholder="Comment (required for reject/revise)"></textarea>
  ${challengeField}
  <footer>
    <button data-action="approved" data-item="${escapeHtml(item.item_id)}">Approve</button>
    <button data-action="rejected" data-item="${escapeHtml(item.item_id)}">Reject</button>
    ${revise}
  </footer>
</article>`;
}

export function renderQueue(
  items: ReviewItem[],
  contextFor?: (item: ReviewItem) => DraftContext | undefined,
): string {
  if (!items.length) {
    return `<p class="empty-state">No pending items for this stage.</p>`;
  }
  return items.map((item) => renderQueueItem(item, contextFor?.(item))).join("\n");
}

export function renderTaxonomy(taxonomy: Taxonomy): string {
  const cats = taxonomy.categories
    .map((category) => {
      const features = Object.entries(category.features)
        .map(
          ([token, weight]) =>
            `<li><code>${escapeHtml(token)}</code> <span class="weight">${weight}</span></li>`,
        )
        .join("");
      return `
<section class="category">
  <h3>${escapeHtml(category.name)}</h3>
  <p>${escapeHtml(category.description)}</p>
  <p class="demo-note">${escapeHtml(category.demographic_note)}</p>
  <ul class="features">${features}</ul>
</section>`;
    })
    .join("\n");
  return `
<div class="taxonomy" data-draft-id="${escapeHtml(taxonomy.draft_id)}">
  <p class="meta">round ${taxonomy.round} &middot; ${escapeHtml(taxonomy.provenance)}</p>
  ${cats}
  <p class="rationale">${escapeHtml(taxonomy.rationale)}</p>
</div>`;
}

function renderCategoryDiff(diff: CategoryDiff): string {
  const changes = diff.features
    .map((change) => {
      if (change.kind === "added") {
        return `<li class="added">+ ${escapeHtml(change.token)} (${change.after})</li>`;
      }
      if (change.kind === "removed") {
        return `<li class="removed">- ${escapeHtml(change.token)} (${change.before})</li>`;
      }
      return `<li class="reweighted">~ ${escapeHtml(change.token)} ${change.before} &rarr; ${change.after}</li>`;
    })
    .join("");
  return `
<section class="category-diff ${diff.kind}">
  <h3>${escapeHtml(diff.name)} <span class="diff-kind">${diff.kind}</span></h3>
  <ul>${changes}</ul>
</section>`;
}

export function renderDiff(diff: TaxonomyDiff): string {
  return `
<div class="taxonomy-diff">
  <p class="meta">${escapeHtml(diff.fromDraft)} &rarr; ${escapeHtml(diff.toDraft)}</p>
  ${diff.categories.map(renderCategoryDiff).join("\n")}
</div>`;
}

export function renderMetricCards(report: AgreementReport): string {
  const cards: Array<[string, number | null]> = [
    ["Overall accuracy", report.overall_accuracy],
    ["Cohen's kappa", report.kappa],
    ["Pearson r", report.pearson_r],
    ["Spearman rho", report.spearman_rho],
  ];
  const rendered = cards
    .map(
      ([label, value]) => `
<div class="metric-card">
  <span class="metric-label">${escapeHtml(label)}</span>
  <span class="metric-value">${escapeHtml(metricText(value))}</span>
</div>`,
    )
    .join("\n");
  return `<div class="metric-cards" data-n="${report.n}">${rendered}</div>`;
}

export function renderPerClassTable(report: AgreementReport): string {
  const rows = report.labels
    .map((label) => {
      const row = report.per_class[label];
      return `<tr>
  <td>${escapeHtml(label)}</td>
  <td>${escapeHtml(metricText(row.precision))}</td>
  <td>${escapeHtml(metricText(row.recall))}</td>
  <td>${escapeHtml(metricText(row.f1))}</td>
  <td>${escapeHtml(metricText(row.accuracy))}</td>
</tr>`;
    })
    .join("\n");
  return `
<table class="per-class">
  <thead><tr><th>Persona Category</th><th>Precision</th><th>Recall</th><th>F1</th><th>Accuracy</th></tr></thead>
  <tbody>${rows}</tbody>
</table>`;
}

export function renderHeatmap(model: HeatmapModel): string {
  const header = model.labels.map((l) => `<th>${escapeHtml(l)}</th>`).join("");
  const rows = model.labels
    .map((rowLabel, i) => {
      const cells = model.cells
        .filter((cell) => cell.row === i)
        .map(
          (cell) =>
            `<td class="cell${cell.diagonal ? " diagonal" : ""}" ` +
            `style="--intensity:${cell.intensity.toFixed(3)}" ` +
            `title="${escapeHtml(cell.rowLabel)} &rarr; ${escapeHtml(cell.colLabel)}">${cell.value}</td>`,
        )
        .join("");
      return `<tr><th>${escapeHtml(rowLabel)}</th>${cells}</tr>`;
    })
    .join("\n");
  return `
<table class="heatmap" data-total="${model.total}">
  <thead><tr><th>gold \\ predicted</th>${header}</tr></thead>
  <tbody>${rows}</tbody>
</table>`;
}

export function renderErrorBanner(message: string): string {
  return `
<div class="error-banner" role="alert">
  <span>${escapeHtml(message)}</span>
  <button data-action="retry">Retry</button>
</div>`;
}

export function renderEmptyDashboard(runId: string): string {
  return `<p class="empty-state">No evaluation report for run ${escapeHtml(runId)} yet.</p>`;
}
