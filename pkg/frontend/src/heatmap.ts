/** Scan-matrix heatmap: one SVG rect per (position, substitute) cell.
 *
 * Rendering is a pure function of the scan payload, so it can be tested
 * straight off recorded API responses. Interaction wiring (hover tooltip,
 * click-to-pin) lives in main.ts and reads the data- attributes stamped on
 * every cell.
 */

import { divergingColor, scaleBounds, ScaleBounds } from "./color.js";
import { ScanPayload } from "./types.js";

export const CELL = 16;
export const LEFT_GUTTER = 52;
export const TOP_GUTTER = 22;

export interface HeatmapOptions {
  bounds?: ScaleBounds;
}

export function heatmapBounds(scan: ScanPayload): ScaleBounds {
  return scaleBounds(scan.values.flat());
}

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

/** Render the full L x 20 grid as an SVG string. */
export function renderHeatmap(scan: ScanPayload, options: HeatmapOptions = {}): string {
  if (!scan.values.length || scan.values.length !== scan.length
      || scan.values.some((row) => row.length !== scan.aa_order.length)) {
    throw new Error("malformed scan payload");
  }
  const bounds = options.bounds ?? heatmapBounds(scan);
  const width = LEFT_GUTTER + scan.aa_order.length * CELL + 4;
  const height = TOP_GUTTER + scan.length * CELL + 4;
  const parts: string[] = [];
  parts.push(
    `<svg class="heatmap" xmlns="http://www.w3.org/2000/svg" ` +
    `width="${width}" height="${height}" viewBox="0 0 ${width} ${height}" ` +
    `data-pdb-id="${esc(scan.pdb_id)}">`,
  );
  scan.aa_order.forEach((aa, j) => {
    const x = LEFT_GUTTER + j * CELL + CELL / 2;
    parts.push(`<text class="axis" x="${x}" y="${TOP_GUTTER - 8}" ` +
      `text-anchor="middle">${aa}</text>`);
  });
  scan.values.forEach((row, i) => {
    const wt = scan.wt_sequence[i];
    const y = TOP_GUTTER + i * CELL;
    parts.push(`<text class="axis" x="${LEFT_GUTTER - 6}" y="${y + CELL - 4}" ` +
      `text-anchor="end">${i + 1}${wt}</text>`);
    row.forEach((value, j) => {
      const mut = scan.aa_order[j];
      const x = LEFT_GUTTER + j * CELL;
      parts.push(
        `<rect class="cell${mut === wt ? " self" : ""}" x="${x}" y="${y}" ` +
        `width="${CELL - 1}" height="${CELL - 1}" fill="${divergingColor(value, bounds)}" ` +
        `data-position="${i + 1}" data-wt="${wt}" data-mut="${mut}" ` +
        `data-ddg="${value}"/>`,
      );
    });
  });
  parts.push("</svg>");
  return parts.join("\n");
}

/** Legend text stating the sign convention shown next to every heatmap. */
export function legendHtml(bounds: ScaleBounds, units: string): string {
  return (
    `<div class="legend">` +
    `<span class="legend-min">${bounds.min.toFixed(2)}</span>` +
    `<span class="legend-bar" aria-hidden="true"></span>` +
    `<span class="legend-max">${bounds.max.toFixed(2)} ${esc(units)}</span>` +
    `<span class="legend-note">positive &#916;&#916;G = destabilizing, ` +
    `negative = stabilizing; 0 (wild type) is the neutral midpoint</span>` +
    `</div>`
  );
}

export interface CellInfo {
  position: number;
  wt: string;
  mut: string;
  ddg: number;
}

/** Parse a cell's stamped data- attributes back into a typed record. */
export function cellInfo(el: Element): CellInfo {
  return {
    position: Number(el.getAttribute("data-position")),
    wt: el.getAttribute("data-wt") ?? "?",
    mut: el.getAttribute("data-mut") ?? "?",
    ddg: Number(el.getAttribute("data-ddg")),
  };
}

export function tooltipText(info: CellInfo, units: string): string {
  if (info.wt === info.mut) {
    return `position ${info.position}: wild type ${info.wt} (0 by definition)`;
  }
  return `position ${info.position}: ${info.wt}→${info.mut}  ` +
    `${info.ddg.toFixed(3)} ${units}`;
}
