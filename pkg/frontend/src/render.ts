/** Pure HTML-string views, kept free of DOM access so they unit-test in Node. */

import { barWidthPercent, formatScore, gaugePercent, sortedProbabilities } from "./format.js";
import { SessionEntry } from "./types.js";
import { compareSession } from "./session.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** The 1-5 score gauge: needle position plus the two-decimal reading. */
export function renderGauge(score: number): string {
  const pct = gaugePercent(score).toFixed(1);
  return (
    `<div class="gauge-track">` +
    `<div class="gauge-needle" style="left:${pct}%"></div>` +
    `</div>` +
    `<div class="gauge-value">${formatScore(score)}</div>` +
    `<div class="gauge-ends"><span>1</span><span>5</span></div>`
  );
}

/** Probability bars, most likely piano first. */
export function renderBars(probs: Record<string, number>): string {
  const rows = sortedProbabilities(probs).map(
    ([label, p]) =>
      `<div class="bar-row">` +
      `<span class="bar-label">${escapeHtml(label)}</span>` +
      `<span class="bar-track"><span class="bar-fill" style="width:${barWidthPercent(p)}"></span></span>` +
      `<span class="bar-value">${(p * 100).toFixed(1)}%</span>` +
      `</div>`,
  );
  return rows.join("");
}

/** Ranked session table: best score first, earlier try first on ties. */
export function renderTable(entries: SessionEntry[]): string {
  if (entries.length === 0) {
    return `<p class="empty">No pianos scored yet.</p>`;
  }
  const rows = compareSession(entries).map((e, i) => {
    const top = sortedProbabilities(e.probabilities)[0][0];
    const time = new Date(e.timestamp).toLocaleTimeString();
    return (
      `<tr>` +
      `<td>${i + 1}</td>` +
      `<td>${escapeHtml(e.nickname)}</td>` +
      `<td class="score-cell">${formatScore(e.score)}</td>` +
      `<td>${escapeHtml(top)}</td>` +
      `<td>${escapeHtml(time)}</td>` +
      `</tr>`
    );
  });
  return (
    `<table><thead><tr>` +
    `<th>#</th><th>piano</th><th>score</th><th>sounds like</th><th>time</th>` +
    `</tr></thead><tbody>` +
    rows.join("") +
    `</tbody></table>`
  );
}

/** Inline failure banner. */
export function renderError(message: string): string {
  return `<div class="banner error">${escapeHtml(message)}</div>`;
}
