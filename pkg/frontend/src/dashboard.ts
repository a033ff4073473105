/** Dataset and model dashboards: summary numbers, the wild-type/mutant
 * substitution grid, the 2-D embedding scatter colored by stability
 * change, and the metrics table. All pure payload-to-markup functions.
 */

import { divergingColor, scaleBounds } from "./color.js";
import {
  DatasetSummaryPayload,
  MetricsPayload,
  ScatterPayload,
} from "./types.js";

function fmt(v: number | null, digits = 3): string {
  if (v === null) return "undefined";
  return Number.isInteger(v) ? String(v) : v.toFixed(digits);
}

export function renderSummary(summary: DatasetSummaryPayload): string {
  const dedup = Object.entries(summary.dedup_fraction)
    .map(([split, f]) => `${split}: ${(f * 100).toFixed(2)}%`)
    .join(", ");
  return (
    `<dl class="summary">` +
    `<dt>records</dt><dd data-field="n_records">${summary.n_records}</dd>` +
    `<dt>training</dt><dd data-field="n_train">${summary.n_train}</dd>` +
    `<dt>validation</dt><dd data-field="n_val">${summary.n_val}</dd>` +
    `<dt>duplicates removed</dt><dd data-field="dedup_fraction">${dedup}</dd>` +
    `</dl>`
  );
}

/** 20x20 count grid; cell shade scales with count, zero cells stay blank. */
export function renderCountsGrid(summary: DatasetSummaryPayload): string {
  const { aa_order, counts } = summary.substitution_counts;
  const cell = 13;
  const gutter = 18;
  const size = gutter + aa_order.length * cell + 2;
  const maxCount = Math.max(1, ...counts.flat());
  const parts = [
    `<svg class="counts-grid" xmlns="http://www.w3.org/2000/svg" ` +
    `width="${size}" height="${size}" viewBox="0 0 ${size} ${size}">`,
  ];
  aa_order.forEach((aa, j) => {
    parts.push(`<text class="axis" x="${gutter + j * cell + cell / 2}" ` +
      `y="${gutter - 5}" text-anchor="middle">${aa}</text>`);
    parts.push(`<text class="axis" x="${gutter - 5}" ` +
      `y="${gutter + j * cell + cell - 3}" text-anchor="end">${aa}</text>`);
  });
  counts.forEach((row, i) => {
    row.forEach((count, j) => {
      if (count === 0) return;
      const alpha = 0.15 + 0.85 * (count / maxCount);
      parts.push(
        `<rect class="count-cell" x="${gutter + j * cell}" y="${gutter + i * cell}" ` +
        `width="${cell - 1}" height="${cell - 1}" fill="rgba(31,62,109,${alpha.toFixed(3)})" ` +
        `data-wt="${aa_order[i]}" data-mut="${aa_order[j]}" data-count="${count}"/>`,
      );
    });
  });
  parts.push("</svg>");
  return parts.join("\n");
}

/** Validation-set latent vectors in 2-D, one point per record, colored by
 * the record's measured stability change. */
export function renderScatter(scatter: ScatterPayload, width = 320, height = 280): string {
  if (!scatter.points.length) {
    return `<svg class="scatter" width="${width}" height="${height}"><text class="placeholder" ` +
      `x="${width / 2}" y="${height / 2}" text-anchor="middle">no scatter data</text></svg>`;
  }
  const xs = scatter.points.map((p) => p.x);
  const ys = scatter.points.map((p) => p.y);
  const xb = scaleBounds(xs);
  const yb = scaleBounds(ys);
  const ddgBounds = scaleBounds(scatter.points.map((p) => p.ddg));
  const pad = 14;
  const sx = (x: number) =>
    pad + (width - 2 * pad) * (xb.max === xb.min ? 0.5 : (x - xb.min) / (xb.max - xb.min));
  const sy = (y: number) =>
    height - pad - (height - 2 * pad) * (yb.max === yb.min ? 0.5 : (y - yb.min) / (yb.max - yb.min));
  const parts = [
    `<svg class="scatter" xmlns="http://www.w3.org/2000/svg" width="${width}" ` +
    `height="${height}" viewBox="0 0 ${width} ${height}">`,
  ];
  for (const p of scatter.points) {
    parts.push(
      `<circle class="point" cx="${sx(p.x).toFixed(1)}" cy="${sy(p.y).toFixed(1)}" r="4" ` +
      `fill="${divergingColor(p.ddg, ddgBounds)}" stroke="#555" stroke-width="0.5" ` +
      `data-pdb-id="${p.pdb_id}" data-position="${p.position}" ` +
      `data-wt="${p.wt_aa}" data-mut="${p.mut_aa}" data-ddg="${p.ddg}"/>`,
    );
  }
  parts.push("</svg>");
  return parts.join("\n");
}

/** Regression and classification numbers, field names straight from the
 * API payload so the table never drifts from the service contract. */
export function renderMetricsTable(metrics: MetricsPayload): string {
  const rows: Array<[string, string]> = [
    ["variant", String(metrics.variant)],
    ["best_epoch", String(metrics.best_epoch)],
  ];
  for (const [key, value] of Object.entries(metrics.regression)) {
    rows.push([`regression.${key}`, fmt(value as number)]);
  }
  for (const [key, value] of Object.entries(metrics.classification)) {
    rows.push([`classification.${key}`, fmt(value as number | null)]);
  }
  const body = rows
    .map(([k, v]) => `<tr><td class="metric-name">${k}</td>` +
      `<td class="metric-value" data-field="${k}">${v}</td></tr>`)
    .join("");
  return `<table class="metrics"><tbody>${body}</tbody></table>`;
}
