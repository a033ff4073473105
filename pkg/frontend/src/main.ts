/** Page assembly and interaction wiring for the explorer. */

import { api, ApiError } from "./api.js";
import {
  cellInfo,
  heatmapBounds,
  legendHtml,
  renderHeatmap,
  tooltipText,
} from "./heatmap.js";
import {
  renderCountsGrid,
  renderMetricsTable,
  renderScatter,
  renderSummary,
} from "./dashboard.js";
import {
  Camera,
  parsePdbTrace,
  renderStructure,
  resetCamera,
} from "./structure.js";
import { ScanPayload, StructurePayload } from "./types.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function showError(panel: HTMLElement, err: unknown): void {
  const detail = err instanceof ApiError ? err.message : "service unreachable";
  panel.innerHTML = `<div class="banner error">${detail} ` +
    `<button class="retry">retry</button></div>`;
}

// ---------------------------------------------------------------------------
// heatmap + detail panel

let currentScan: ScanPayload | null = null;
let pinned = false;

function wireHeatmap(scan: ScanPayload): void {
  currentScan = scan;
  pinned = false;
  const host = el("heatmap-panel");
  const bounds = heatmapBounds(scan);
  host.innerHTML = renderHeatmap(scan, { bounds }) + legendHtml(bounds, scan.units);
  const tooltip = el("tooltip");
  const detail = el("detail-panel");
  detail.textContent = "hover a cell; click to pin a mutation here";
  host.querySelectorAll("rect.cell").forEach((cell) => {
    cell.addEventListener("mousemove", (ev) => {
      const info = cellInfo(cell);
      tooltip.textContent = tooltipText(info, scan.units);
      tooltip.style.display = "block";
      const mouse = ev as MouseEvent;
      tooltip.style.left = `${mouse.pageX + 12}px`;
      tooltip.style.top = `${mouse.pageY + 12}px`;
      if (!pinned) renderDetail(info);
    });
    cell.addEventListener("mouseleave", () => {
      tooltip.style.display = "none";
    });
    cell.addEventListener("click", () => {
      pinned = true;
      renderDetail(cellInfo(cell));
    });
  });
}

function renderDetail(info: ReturnType<typeof cellInfo>): void {
  if (!currentScan) return;
  const detail = el("detail-panel");
  const self = info.wt === info.mut;
  detail.innerHTML =
    `<h3>${currentScan.pdb_id} position ${info.position}</h3>` +
    `<p class="mutation">${info.wt} → ${info.mut}` +
    `${self ? " (wild type)" : ""}</p>` +
    `<p class="ddg">ΔΔG: <strong>${info.ddg.toFixed(4)}</strong> ${currentScan.units}</p>` +
    `<p class="verdict">${info.ddg > 0 ? "destabilizing" : "stabilizing"}` +
    ` (positive = destabilizing)</p>` +
    (pinned ? `<button id="unpin">unpin</button>` : "");
  const unpin = document.getElementById("unpin");
  if (unpin) unpin.addEventListener("click", () => {
    pinned = false;
    renderDetail(info);
  });
}

// ---------------------------------------------------------------------------
// structure viewer (wild type + optional uploaded variant)

interface ViewerState {
  structure: StructurePayload | null;
  camera: Camera;
}

const viewers: Record<string, ViewerState> = {
  wt: { structure: null, camera: resetCamera() },
  variant: { structure: null, camera: resetCamera() },
};

function paintViewer(which: "wt" | "variant"): void {
  const state = viewers[which];
  const host = el(`${which}-viewer`);
  if (!state.structure) {
    host.innerHTML = `<div class="placeholder-pane">no structure loaded</div>`;
    return;
  }
  host.innerHTML = renderStructure(state.structure, state.camera);
  const svg = host.querySelector("svg");
  if (!svg) return;
  let dragging = false;
  let last: [number, number] = [0, 0];
  svg.addEventListener("pointerdown", (ev) => {
    dragging = true;
    last = [ev.clientX, ev.clientY];
    svg.setPointerCapture(ev.pointerId);
  });
  svg.addEventListener("pointermove", (ev) => {
    if (!dragging) return;
    state.camera.yaw += (ev.clientX - last[0]) * 0.01;
    state.camera.pitch += (ev.clientY - last[1]) * 0.01;
    last = [ev.clientX, ev.clientY];
    paintViewer(which);
  });
  svg.addEventListener("pointerup", () => {
    dragging = false;
  });
  svg.addEventListener("wheel", (ev) => {
    ev.preventDefault();
    state.camera.zoom *= ev.deltaY < 0 ? 1.1 : 1 / 1.1;
    paintViewer(which);
  });
}

// ---------------------------------------------------------------------------
// page bootstrap: every panel loads (and fails) independently

async function loadProtein(id: string): Promise<void> {
  const heatmapPanel = el("heatmap-panel");
  heatmapPanel.innerHTML = `<div class="banner">computing scan…</div>`;
  try {
    wireHeatmap(await api.scan(id));
  } catch (err) {
    showError(heatmapPanel, err);
    heatmapPanel.querySelector(".retry")?.addEventListener("click", () => loadProtein(id));
  }
  try {
    viewers.wt.structure = await api.structure(id);
    viewers.wt.camera = resetCamera();
    paintViewer("wt");
  } catch (err) {
    showError(el("wt-viewer"), err);
  }
}

async function loadDashboard(): Promise<void> {
  const panels: Array<[string, () => Promise<string>]> = [
    ["summary-panel", async () => {
      const summary = await api.summary();
      return renderSummary(summary) + renderCountsGrid(summary);
    }],
    ["scatter-panel", async () => renderScatter(await api.scatter())],
    ["metrics-panel", async () => renderMetricsTable(await api.metrics())],
  ];
  await Promise.all(panels.map(async ([id, build]) => {
    const panel = el(id);
    try {
      panel.innerHTML = await build();
    } catch (err) {
      showError(panel, err);
      panel.querySelector(".retry")?.addEventListener("click", loadDashboard);
    }
  }));
}

async function boot(): Promise<void> {
  const selector = el<HTMLSelectElement>("protein-select");
  try {
    const proteins = await api.proteins();
    selector.innerHTML = proteins
      .map((p) => `<option value="${p.pdb_id}">${p.pdb_id} (${p.length} aa)</option>`)
      .join("");
    selector.addEventListener("change", () => loadProtein(selector.value));
    if (proteins.length) await loadProtein(proteins[0].pdb_id);
  } catch (err) {
    showError(el("heatmap-panel"), err);
  }
  await loadDashboard();

  el("reset-camera").addEventListener("click", () => {
    viewers.wt.camera = resetCamera();
    viewers.variant.camera = resetCamera();
    paintViewer("wt");
    paintViewer("variant");
  });
  el<HTMLInputElement>("variant-file").addEventListener("change", async (ev) => {
    const input = ev.target as HTMLInputElement;
    const file = input.files?.[0];
    if (!file) return;
    try {
      viewers.variant.structure = parsePdbTrace(await file.text());
      viewers.variant.camera = resetCamera();
      paintViewer("variant");
    } catch (err) {
      el("variant-viewer").innerHTML =
        `<div class="banner error">${(err as Error).message}</div>`;
    }
  });
  paintViewer("variant");
}

boot();
