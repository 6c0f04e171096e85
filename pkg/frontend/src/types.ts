/**
 * Wire types for the /v1 API. These mirror the service's JSON bodies
 * exactly; the UI never derives metric values of its own.
 */

export type Stage = "structural" | "domain_expert";
export type DecisionKind = "approved" | "rejected" | "revised";

export interface ReviewItem {
  item_id: string;
  draft_id: string;
  stage: Stage;
  criterion: string;
  round: number;
  category_id: string | null;
  status: string;
}

export interface QueuePage {
  items: ReviewItem[];
  page: number;
  limit: number;
  total: number;
}

export interface ValidationRecord {
  draft_id: string;
  state: string;
  round: number;
}

export interface DecisionResponse {
  item: ReviewItem;
  record: ValidationRecord;
}

export interface FeatureMap {
  [token: string]: number;
}

export interface TaxonomyCategory {
  id: string;
  name: string;
  description: string;
  demographic_note: string;
  expected_share?: number;
  features: FeatureMap;
}

export interface Taxonomy {
  draft_id: string;
  round: number;
  categories: TaxonomyCategory[];
  rationale: string;
  provenance: string;
  parent_draft_id: string | null;
}

export interface TaxonomyEnvelope {
  taxonomy: Taxonomy;
  validation: ValidationRecord | null;
}

export interface PerClassRow {
  precision: number | null;
  recall: number | null;
  f1: number | null;
  accuracy: number | null;
}

export interface AgreementReport {
  labels: string[];
  per_class: { [label: string]: PerClassRow };
  overall_accuracy: number;
  kappa: number | null;
  pearson_r: number | null;
  spearman_rho: number | null;
  n: number;
  note: string;
  confusion?: ConfusionPayload;
  text_table?: string;
}

export interface ConfusionPayload {
  labels: string[];
  counts: number[][];
  n?: number;
}

export interface RunInfo {
  run_id: string;
  phase: string;
  completed: string[];
  dataset_refs: { [key: string]: string };
}
