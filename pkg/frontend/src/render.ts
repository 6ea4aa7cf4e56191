// Pure view rendering: server state in, HTML strings out. Nothing here
// mutates state or performs requests, which keeps the server the single
// source of truth and makes the renderers trivially testable.

import type { Earnings, Score, SessionView, TaskSummary } from "./api.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

export function formatMoney(value: number): string {
  return value.toFixed(2);
}

function taskBadge(task: TaskSummary, activeIndex: number | null): string {
  const classes = ["task-badge"];
  if (task.done) classes.push(task.outcome === "success" ? "task-ok" : "task-bad");
  else if (task.index === activeIndex) classes.push("task-active");
  const label = `${task.index + 1} ${task.difficulty}`;
  return `<span class="${classes.join(" ")}" title="${escapeHtml(task.domain)}">${escapeHtml(label)}</span>`;
}

export function renderTaskStrip(view: SessionView): string {
  const active = view.current ? view.current.index : null;
  return `<div class="task-strip">${view.tasks.map((t) => taskBadge(t, active)).join("")}</div>`;
}

export function renderBookPane(book: string | null, view: SessionView): string {
  if (view.finished || book === null) {
    return `<h2>Knowledge book</h2><p class="muted">No active task.</p>`;
  }
  const current = view.current!;
  return [
    `<h2>Knowledge book</h2>`,
    `<p class="muted">Task ${current.index + 1} of ${view.tasks.length} - ` +
      `${escapeHtml(current.domain)} (${escapeHtml(current.difficulty)})</p>`,
    `<pre class="book-text">${escapeHtml(book)}</pre>`,
  ].join("\n");
}

export function renderActionMenu(view: SessionView, busy: boolean): string {
  if (!view.current) return "";
  const items = view.current.actions
    .map((a) => {
      const disabled = busy || a.used ? " disabled" : "";
      const mark = a.used ? ` <span class="used-mark">(used)</span>` : "";
      return (
        `<li><button type="button" class="action-btn" data-action="${escapeHtml(a.name)}"` +
        `${disabled} aria-label="take action ${escapeHtml(a.name)}">` +
        `${escapeHtml(a.name)}</button>${mark}</li>`
      );
    })
    .join("");
  return `<h3>Actions</h3><ul class="action-menu" role="menu">${items}</ul>`;
}

export function renderTruthMenu(view: SessionView, busy: boolean): string {
  if (!view.current) return "";
  const items = view.current.truths
    .map(
      (t) =>
        `<li><button type="button" class="truth-btn" data-truth="${escapeHtml(t)}"` +
        `${busy ? " disabled" : ""} aria-label="predict ${escapeHtml(t)}">` +
        `${escapeHtml(t)}</button></li>`,
    )
    .join("");
  return `<h3>Candidates - predict one</h3><ul class="truth-menu" role="menu">${items}</ul>`;
}

export function renderObservationFeed(view: SessionView): string {
  if (!view.current) return "";
  const entries = view.current.observations
    .map(
      (o) =>
        `<li><strong>${escapeHtml(o.action)}</strong> &rarr; ${escapeHtml(o.observation)}</li>`,
    )
    .join("");
  return (
    `<h3>Observations</h3>` +
    `<ol class="observation-feed">${entries || ""}</ol>` +
    `<p class="muted">Actions this task: ${view.current.action_count}</p>`
  );
}

export function renderVerdict(outcome: string | null, correct: boolean | null): string {
  if (outcome === null) return "";
  const cls = correct ? "verdict-ok" : "verdict-bad";
  const text = correct ? "Correct!" : `Not this one (${outcome})`;
  return `<div class="verdict ${cls}" role="status">${escapeHtml(text)}</div>`;
}

export function renderEarnings(earnings: Earnings): string {
  return (
    `<dl class="earnings">` +
    `<dt>Base</dt><dd>${formatMoney(earnings.base)}</dd>` +
    `<dt>Accuracy bonus</dt><dd>${formatMoney(earnings.success_component)}</dd>` +
    `<dt>Action penalty</dt><dd>-${formatMoney(earnings.action_penalty)}</dd>` +
    `<dt>Total</dt><dd class="earnings-total">${formatMoney(earnings.total)}</dd>` +
    `</dl>`
  );
}

export function renderFinalScore(score: Score): string {
  return [
    `<h2>Task set complete</h2>`,
    `<p>Success rate ${(score.success_rate * 100).toFixed(0)}% over ` +
      `${score.tasks_done} tasks, ${score.action_count} actions taken.</p>`,
    renderEarnings(score.earnings),
  ].join("\n");
}

export function renderError(message: string, retryable = true): string {
  const retry = retryable
    ? ` <button type="button" class="retry-btn">Retry</button>`
    : "";
  return `<div class="error-banner" role="alert">${escapeHtml(message)}${retry}</div>`;
}
