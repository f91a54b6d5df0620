/** HTML renderers for the annotation panels.
 *
 * Every agreement number on screen comes straight out of the /api/agreement
 * payload; nothing is recomputed client-side.
 */

import { AnnotationApi, ApiError } from "./api.js";
import type { AgreementResponse, Label, ProgressResponse, Task } from "./types.js";

export function escapeHtml(text: string): string {
  return text.replace(/[&<>"']/g, (ch) => {
    switch (ch) {
      case "&":
        return "&amp;";
      case "<":
        return "&lt;";
      case ">":
        return "&gt;";
      case '"':
        return "&quot;";
      default:
        return "&#39;";
    }
  });
}

/** Display precision for agreement statistics. */
export function formatStat(value: number): string {
  return value.toFixed(3);
}

export interface LabelDefinition {
  label: Label;
  key: string;
  definition: string;
}

// Mirrors the category descriptions in the judge_validation prompt asset.
export const LABEL_DEFINITIONS: readonly LabelDefinition[] = [
  {
    label: "Valid",
    key: "1",
    definition: "The statement always aligns with real-world commonsense knowledge.",
  },
  {
    label: "Invalid",
    key: "2",
    definition: "The statement always conflicts with real-world commonsense knowledge.",
  },
  {
    label: "Ambiguous",
    key: "3",
    definition:
      "The interpretation is ambiguous (the statement can either align or conflict with " +
      "real-world commonsense knowledge), or the if event does not relate to the then " +
      "event by the relation.",
  },
];

export function renderDefinitions(): string {
  const rows = LABEL_DEFINITIONS.map(
    (d) =>
      `<div class="definition"><kbd>${d.key}</kbd> <strong class="label-${d.label.toLowerCase()}">` +
      `${d.label}</strong><p>${escapeHtml(d.definition)}</p></div>`,
  );
  rows.push('<div class="definition"><kbd>u</kbd> <strong>Undo</strong><p>Bring the previous item back and relabel it; the newest label wins.</p></div>');
  return `<div class="definitions">${rows.join("")}</div>`;
}

export function renderTask(task: Task): string {
  return (
    `<div class="task">` +
    `<div class="task-position">Item ${task.position} of ${task.total}</div>` +
    `<div class="task-statement">${escapeHtml(task.statement)}</div>` +
    `</div>`
  );
}

export function renderDone(total: number): string {
  return `<div class="task done-banner">All ${total} items labeled. Thank you!</div>`;
}

export function renderError(message: string, retryable: boolean): string {
  const retry = retryable ? ' <button id="retry">Retry</button>' : "";
  return `<div class="error-banner">${escapeHtml(message)}${retry}</div>`;
}

export function renderProgress(progress: ProgressResponse): string {
  const total = progress.total_items;
  const done = new Set(progress.complete);
  const names = Object.keys(progress.labeled).sort();
  const rows = names.map((name) => {
    const count = progress.labeled[name];
    const pct = total > 0 ? Math.round((100 * count) / total) : 0;
    const badge = done.has(name) ? ' <span class="badge">complete</span>' : "";
    return (
      `<div class="progress-row"><span class="annotator">${escapeHtml(name)}</span>` +
      `<div class="bar"><div class="bar-fill" style="width:${pct}%"></div></div>` +
      `<span class="count">${count} / ${total}</span>${badge}</div>`
    );
  });
  if (rows.length === 0) rows.push('<div class="progress-row muted">no labels yet</div>');
  return `<div class="progress">${rows.join("")}</div>`;
}

export function renderAgreement(report: AgreementResponse): string {
  const header = report.labels.map((l) => `<th>${escapeHtml(l)}</th>`).join("");
  const body = report.confusion
    .map((row, i) => {
      const cells = row.map((n) => `<td>${n}</td>`).join("");
      return `<tr><th>${escapeHtml(report.labels[i])}</th>${cells}</tr>`;
    })
    .join("");
  return (
    `<div class="agreement">` +
    `<div class="kappa">&kappa; = <strong>${formatStat(report.kappa)}</strong></div>` +
    `<div class="agreement-stats">observed ${formatStat(report.observed_agreement)} &middot; ` +
    `expected ${formatStat(report.expected_agreement)} &middot; n = ${report.n_items}</div>` +
    `<table class="confusion"><thead><tr><th></th>${header}</tr></thead>` +
    `<tbody>${body}</tbody></table>` +
    `</div>`
  );
}

export function renderAgreementEmpty(detail: string): string {
  return `<div class="agreement muted">No co-labeled items yet. ${escapeHtml(detail)}</div>`;
}

/** Fetches progress and agreement and renders both panels. */
export class Dashboard {
  constructor(
    private readonly api: AnnotationApi,
    private readonly pair: () => [string, string],
  ) {}

  async render(): Promise<{ progressHtml: string; agreementHtml: string }> {
    const progress = await this.api.progress();
    const [a, b] = this.pair();
    let agreementHtml: string;
    try {
      const report = await this.api.agreement(a, b);
      agreementHtml = renderAgreement(report);
    } catch (err) {
      if (err instanceof ApiError && err.kind === "EmptyOverlap") {
        agreementHtml = renderAgreementEmpty(err.detail);
      } else {
        throw err;
      }
    }
    return { progressHtml: renderProgress(progress), agreementHtml };
  }
}
