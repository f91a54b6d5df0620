/** Browser entry point: wires the session and dashboard to the page. */

import { AnnotationApi } from "./api.js";
import { Dashboard, renderDefinitions, renderDone, renderError, renderTask } from "./dashboard.js";
import { AnnotationSession } from "./session.js";

const POLL_MS = 4000;

function param(name: string, fallback: string): string {
  return new URLSearchParams(window.location.search).get(name) ?? fallback;
}

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element #${id}`);
  return node;
}

function main(): void {
  const annotator = param("annotator", "ann-a");
  const peer = param("peer", "ann-b");
  const api = new AnnotationApi("");
  const session = new AnnotationSession(api, annotator);
  const dashboard = new Dashboard(api, () => [annotator, peer]);

  el("who").textContent = annotator;
  el("definitions").innerHTML = renderDefinitions();

  const taskPanel = el("task-panel");
  const statusLine = el("status");

  session.onChange((snapshot) => {
    switch (snapshot.phase) {
      case "loading":
      case "idle":
        taskPanel.innerHTML = '<div class="task muted">loading&hellip;</div>';
        break;
      case "ready":
      case "submitting":
        if (snapshot.task !== null) taskPanel.innerHTML = renderTask(snapshot.task);
        break;
      case "done":
        taskPanel.innerHTML = renderDone(snapshot.totalItems);
        break;
      case "error":
        taskPanel.innerHTML = renderError(snapshot.error ?? "unknown error", true);
        el("retry")?.addEventListener("click", () => void session.retry());
        break;
    }
    const bits = [`${snapshot.submitted} submitted`];
    if (snapshot.resubmitting) bits.push("relabeling previous item");
    if (snapshot.canUndo) bits.push("u to undo");
    statusLine.textContent = bits.join(" · ");
    if (snapshot.phase === "ready" || snapshot.phase === "done") void refreshDashboard();
  });

  async function refreshDashboard(): Promise<void> {
    try {
      const { progressHtml, agreementHtml } = await dashboard.render();
      el("progress-panel").innerHTML = progressHtml;
      el("agreement-panel").innerHTML = agreementHtml;
    } catch {
      // dashboard is advisory; leave the last rendering in place
    }
  }

  document.addEventListener("keydown", (event) => {
    if (event.target instanceof HTMLInputElement) return;
    if (event.metaKey || event.ctrlKey || event.altKey) return;
    void session.handleKey(event.key);
  });

  void session.start();
  void refreshDashboard();
  window.setInterval(() => void refreshDashboard(), POLL_MS);
}

main();
