/** Payload shapes of the scan-service HTTP API, mirrored field for field. */

export interface ProteinSummary {
  pdb_id: string;
  chain: string;
  length: number;
  sequence: string;
}

export interface ResiduePayload {
  index: number;
  aa: string;
  n: number[] | null;
  ca: number[] | null;
  c: number[] | null;
  o: number[] | null;
}

export interface StructurePayload {
  pdb_id: string;
  chain: string;
  sequence: string;
  residues: ResiduePayload[];
}

export interface ScanPayload {
  pdb_id: string;
  chain: string;
  length: number;
  wt_sequence: string;
  aa_order: string[];
  units: string;
  values: number[][];
}

export interface PredictResponse {
  ddg: number;
  units: string;
}

export interface DatasetSummaryPayload {
  n_records: number;
  n_train: number;
  n_val: number;
  dedup_fraction: Record<string, number>;
  substitution_counts: { aa_order: string[]; counts: number[][] };
}

export interface ScatterPoint {
  x: number;
  y: number;
  ddg: number;
  pdb_id: string;
  position: number;
  wt_aa: string;
  mut_aa: string;
}

export interface ScatterPayload {
  points: ScatterPoint[];
  explained_variance: number[];
}

export interface RegressionPayload {
  mse: number;
  rmse: number;
  r2: number;
  spearman: number;
  n: number;
}

export interface ClassificationPayload {
  accuracy: number;
  precision: number | null;
  recall: number | null;
  f1: number | null;
  tp: number;
  fp: number;
  tn: number;
  fn: number;
}

export interface MetricsPayload {
  variant: number;
  best_epoch: number;
  regression: RegressionPayload;
  classification: ClassificationPayload;
}
