/** CA-trace structure viewer: orbitable orthographic projection rendered
 * to SVG, with the chain colored blue at the first residue through red at
 * the last.  Pure geometry and rendering here; pointer wiring in main.ts.
 */

import { spectrumColor } from "./color.js";
import { StructurePayload } from "./types.js";

export interface Camera {
  yaw: number;   // radians around the vertical axis
  pitch: number; // radians around the horizontal axis
  zoom: number;  // pixels per angstrom
}

export const DEFAULT_CAMERA: Camera = { yaw: 0.6, pitch: -0.4, zoom: 9 };

export function resetCamera(): Camera {
  return { ...DEFAULT_CAMERA };
}

export const VIEW_W = 360;
export const VIEW_H = 360;

export interface TracePoint {
  x: number;
  y: number;
  depth: number;
  index: number;
  aa: string;
}

function rotate(p: number[], cam: Camera): [number, number, number] {
  const [x0, y0, z0] = p;
  const cy = Math.cos(cam.yaw);
  const sy = Math.sin(cam.yaw);
  const x1 = cy * x0 + sy * z0;
  const z1 = -sy * x0 + cy * z0;
  const cp = Math.cos(cam.pitch);
  const sp = Math.sin(cam.pitch);
  const y2 = cp * y0 - sp * z1;
  const z2 = sp * y0 + cp * z1;
  return [x1, y2, z2];
}

/** Project every residue with a CA atom into view coordinates. */
export function projectTrace(structure: StructurePayload, cam: Camera): TracePoint[] {
  const cas = structure.residues.filter((r) => r.ca !== null);
  if (!cas.length) return [];
  const center = [0, 1, 2].map(
    (k) => cas.reduce((acc, r) => acc + (r.ca as number[])[k], 0) / cas.length,
  );
  return cas.map((r) => {
    const ca = r.ca as number[];
    const [x, y, depth] = rotate(
      [ca[0] - center[0], ca[1] - center[1], ca[2] - center[2]], cam,
    );
    return {
      x: VIEW_W / 2 + x * cam.zoom,
      y: VIEW_H / 2 - y * cam.zoom,
      depth,
      index: r.index,
      aa: r.aa,
    };
  });
}

/** Render the CA trace: depth-sorted segments plus one circle per residue.
 * A single-residue chain renders one sphere and no trace segments. */
export function renderStructure(structure: StructurePayload, cam: Camera): string {
  const points = projectTrace(structure, cam);
  const L = structure.residues.length;
  const parts: string[] = [];
  parts.push(
    `<svg class="structure" xmlns="http://www.w3.org/2000/svg" ` +
    `width="${VIEW_W}" height="${VIEW_H}" viewBox="0 0 ${VIEW_W} ${VIEW_H}" ` +
    `data-pdb-id="${structure.pdb_id}">`,
  );
  if (!points.length) {
    parts.push(`<text class="placeholder" x="${VIEW_W / 2}" y="${VIEW_H / 2}" ` +
      `text-anchor="middle">no CA coordinates in this structure</text>`);
    parts.push("</svg>");
    return parts.join("\n");
  }
  const segments = [];
  for (let i = 0; i + 1 < points.length; i++) {
    // consecutive residues only; chain breaks leave a gap
    if (points[i + 1].index === points[i].index + 1) {
      segments.push({ a: points[i], b: points[i + 1] });
    }
  }
  segments.sort((s, t) => (s.a.depth + s.b.depth) - (t.a.depth + t.b.depth));
  for (const { a, b } of segments) {
    parts.push(
      `<line class="trace" x1="${a.x.toFixed(2)}" y1="${a.y.toFixed(2)}" ` +
      `x2="${b.x.toFixed(2)}" y2="${b.y.toFixed(2)}" ` +
      `stroke="${spectrumColor(a.index, L)}" stroke-width="2.4"/>`,
    );
  }
  const byDepth = [...points].sort((p, q) => p.depth - q.depth);
  for (const p of byDepth) {
    parts.push(
      `<circle class="residue" cx="${p.x.toFixed(2)}" cy="${p.y.toFixed(2)}" r="3.2" ` +
      `fill="${spectrumColor(p.index, L)}" data-index="${p.index}" data-aa="${p.aa}"/>`,
    );
  }
  parts.push("</svg>");
  return parts.join("\n");
}

/** Minimal PDB reader for user-supplied mutated-variant files: CA atoms of
 * the first chain encountered (or the requested one). */
export function parsePdbTrace(text: string, chain?: string): StructurePayload {
  const three2one: Record<string, string> = {
    ALA: "A", ARG: "R", ASN: "N", ASP: "D", CYS: "C", GLN: "Q", GLU: "E",
    GLY: "G", HIS: "H", ILE: "I", LEU: "L", LYS: "K", MET: "M", PHE: "F",
    PRO: "P", SER: "S", THR: "T", TRP: "W", TYR: "Y", VAL: "V",
  };
  const residues = [];
  let selected = chain ?? null;
  for (const line of text.split(/\r?\n/)) {
    if (!line.startsWith("ATOM")) continue;
    if (line.slice(12, 16).trim() !== "CA") continue;
    const lineChain = line[21];
    if (selected === null) selected = lineChain;
    if (lineChain !== selected) continue;
    const index = Number(line.slice(22, 26));
    const xyz = [line.slice(30, 38), line.slice(38, 46), line.slice(46, 54)]
      .map((s) => Number(s));
    if (xyz.some((v) => Number.isNaN(v)) || Number.isNaN(index)) {
      throw new Error("malformed ATOM record in uploaded file");
    }
    residues.push({
      index,
      aa: three2one[line.slice(17, 20).trim()] ?? "X",
      n: null, c: null, o: null,
      ca: xyz,
    });
  }
  if (!residues.length) throw new Error("no CA atoms found in uploaded file");
  residues.sort((a, b) => a.index - b.index);
  return { pdb_id: "uploaded", chain: selected ?? "?", residues,
           sequence: residues.map((r) => r.aa).join("") };
}
