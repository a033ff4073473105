/** Thin fetch client for the scan-service endpoints. */

import {
  DatasetSummaryPayload,
  MetricsPayload,
  PredictResponse,
  ProteinSummary,
  ScanPayload,
  ScatterPayload,
  StructurePayload,
} from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, detail: string) {
    super(detail);
  }
}

async function getJson<T>(path: string): Promise<T> {
  const resp = await fetch(path);
  if (!resp.ok) {
    let detail = `${resp.status} on ${path}`;
    try {
      detail = (await resp.json()).detail ?? detail;
    } catch {
      /* non-JSON error body */
    }
    throw new ApiError(resp.status, detail);
  }
  return (await resp.json()) as T;
}

export const api = {
  proteins: () => getJson<ProteinSummary[]>("/api/proteins"),
  structure: (id: string) =>
    getJson<StructurePayload>(`/api/proteins/${encodeURIComponent(id)}/structure`),
  scan: (id: string) =>
    getJson<ScanPayload>(`/api/proteins/${encodeURIComponent(id)}/scan`),
  summary: () => getJson<DatasetSummaryPayload>("/api/dataset/summary"),
  scatter: () => getJson<ScatterPayload>("/api/analysis/embedding_scatter"),
  metrics: () => getJson<MetricsPayload>("/api/metrics"),
  predict: async (req: {
    pdb_id: string;
    chain: string;
    position: number;
    wt_aa: string;
    mut_aa: string;
  }): Promise<PredictResponse> => {
    const resp = await fetch("/api/predict", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(req),
    });
    if (!resp.ok) {
      const body = await resp.json().catch(() => ({ detail: `${resp.status}` }));
      throw new ApiError(resp.status, body.detail ?? `${resp.status}`);
    }
    return (await resp.json()) as PredictResponse;
  },
};
