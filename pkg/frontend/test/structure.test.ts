import { describe, expect, it } from "vitest";

import {
  DEFAULT_CAMERA,
  parsePdbTrace,
  projectTrace,
  renderStructure,
  resetCamera,
} from "../src/structure.js";
import type { StructurePayload } from "../src/types.js";
import { countMatches, fixture } from "./helpers.js";

const helix = fixture<StructurePayload>("structure_helix27.json");
const mini = fixture<StructurePayload>("structure_mini.json");

describe("CA-trace rendering from recorded payloads", () => {
  it("colors residue 1 blue and residue L red", () => {
    const svg = renderStructure(helix, resetCamera());
    const L = helix.residues.length;
    const first = svg.split("\n").find((ln) => ln.includes('data-index="1"'));
    const last = svg.split("\n").find((ln) => ln.includes(`data-index="${L}"`));
    expect(first).toContain('fill="#0000ff"');
    expect(last).toContain('fill="#ff0000"');
  });

  it("draws one circle per residue and one segment per consecutive pair", () => {
    const svg = renderStructure(helix, resetCamera());
    expect(countMatches(svg, /<circle class="residue"/g)).toBe(helix.residues.length);
    expect(countMatches(svg, /<line class="trace"/g)).toBe(helix.residues.length - 1);
  });

  it("renders a single-residue chain as one sphere with no trace", () => {
    const single: StructurePayload = {
      ...mini,
      sequence: "G",
      residues: [mini.residues[0]],
    };
    const svg = renderStructure(single, resetCamera());
    expect(countMatches(svg, /<circle class="residue"/g)).toBe(1);
    expect(countMatches(svg, /<line class="trace"/g)).toBe(0);
  });

  it("shows a placeholder when no coordinates are present", () => {
    const empty: StructurePayload = {
      ...mini,
      residues: mini.residues.map((r) => ({ ...r, ca: null })),
    };
    expect(renderStructure(empty, resetCamera())).toContain("no CA coordinates");
  });

  it("camera reset returns the deterministic default pose", () => {
    const cam = resetCamera();
    cam.yaw += 2.5;
    cam.zoom *= 4;
    const fresh = resetCamera();
    expect(fresh).toEqual(DEFAULT_CAMERA);
    expect(fresh).not.toBe(DEFAULT_CAMERA); // a copy, so mutation is safe
  });

  it("projection is deterministic for a fixed camera", () => {
    const a = projectTrace(helix, resetCamera());
    const b = projectTrace(helix, resetCamera());
    expect(a).toEqual(b);
  });

  it("orbiting changes the projection", () => {
    const before = projectTrace(helix, resetCamera());
    const rotated = projectTrace(helix, { ...resetCamera(), yaw: 2.0 });
    expect(before.map((p) => p.x)).not.toEqual(rotated.map((p) => p.x));
  });
});

describe("uploaded-variant PDB parsing", () => {
  const pdb = [
    "ATOM      1  N   GLY A   1       1.000   2.000   3.000  1.00  0.00",
    "ATOM      2  CA  GLY A   1       2.000   2.000   3.000  1.00  0.00",
    "ATOM      3  CA  ALA A   2       5.000   2.000   3.000  1.00  0.00",
    "ATOM      4  CA  VAL B   9       9.000   9.000   9.000  1.00  0.00",
    "END",
  ].join("\n");

  it("keeps CA atoms of the first chain and maps names to one-letter codes", () => {
    const parsed = parsePdbTrace(pdb);
    expect(parsed.sequence).toBe("GA");
    expect(parsed.chain).toBe("A");
    expect(parsed.residues[0].ca).toEqual([2.0, 2.0, 3.0]);
  });

  it("honors an explicit chain", () => {
    expect(parsePdbTrace(pdb, "B").sequence).toBe("V");
  });

  it("rejects files without CA atoms", () => {
    expect(() => parsePdbTrace("HEADER nothing\nEND\n")).toThrow(/no CA atoms/);
  });
});
