/** Wire types for the oracle service JSON API. */

export interface IterationRecord {
  iteration: number;
  tau: number;
  ndcg_pool: number;
  ndcg_full: number;
  pool_degenerate: boolean;
  full_degenerate: boolean;
  queried_ids: string[];
  n_labeled_normal: number;
  n_labeled_anomalous: number;
  n_synthetic: number;
  augmentation_skipped: boolean;
  wall_time: number;
}

export interface PoolSizes {
  labeled_normal: number;
  synthetic: number;
  unlabeled: number;
  known_anomalies: number;
}

export interface Telemetry {
  schema_version: number;
  iteration: number;
  tau: number | null;
  pool_sizes: PoolSizes;
  last_record: IterationRecord | null;
  history: IterationRecord[];
  checksum: string;
}

export interface PendingQuery {
  query_id: string;
  record_id: string;
  anomaly_score: number;
  uncertainty: number;
  top_attributes: string[];
  issued_at: number;
}

export interface RankingRow {
  rank: number;
  id: string;
  score: number;
  is_known_anomaly: boolean;
}

export type Label = 'normal' | 'anomalous';

/** Outcome of a label submission, mirroring the service status codes. */
export type SubmitOutcome =
  | { kind: 'ok' }
  | { kind: 'conflict' } // 409: already labeled
  | { kind: 'gone' } // 404: unknown or expired query
  | { kind: 'invalid' } // 400
  | { kind: 'network'; message: string };
