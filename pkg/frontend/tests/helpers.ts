import type { IterationRecord, PendingQuery, Telemetry } from '../src/types';

export function record(overrides: Partial<IterationRecord> = {}): IterationRecord {
  return {
    iteration: 1,
    tau: 3.2,
    ndcg_pool: 0.41,
    ndcg_full: 0.4,
    pool_degenerate: false,
    full_degenerate: false,
    queried_ids: ['p1', 'p2', 'p3'],
    n_labeled_normal: 3,
    n_labeled_anomalous: 0,
    n_synthetic: 0,
    augmentation_skipped: true,
    wall_time: 0.7,
    ...overrides,
  };
}

export function telemetry(overrides: Partial<Telemetry> = {}): Telemetry {
  return {
    schema_version: 1,
    iteration: 0,
    tau: null,
    pool_sizes: { labeled_normal: 40, synthetic: 0, unlabeled: 160, known_anomalies: 0 },
    last_record: null,
    history: [],
    checksum: 'x',
    ...overrides,
  };
}

export function query(id: string, overrides: Partial<PendingQuery> = {}): PendingQuery {
  return {
    query_id: id,
    record_id: `rec-${id}`,
    anomaly_score: 3.1,
    uncertainty: 0.05,
    top_attributes: ['attr1', 'attr4'],
    issued_at: 1700000000,
    ...overrides,
  };
}

type Responder = (input: string, init?: RequestInit) => Response | Promise<Response>;

/** fetch stub with per-path responders; unmatched paths 404.
 *
 * A key matches when the URL path ends with it or continues with a query
 * string, so '/api/queries' does not swallow '/api/queries/q1/label'. */
export function fakeFetch(routes: Record<string, Responder>) {
  const calls: Array<{ url: string; init?: RequestInit }> = [];
  const fn = async (input: string, init?: RequestInit): Promise<Response> => {
    calls.push({ url: input, init });
    for (const [key, responder] of Object.entries(routes)) {
      if (input.endsWith(key) || input.includes(`${key}?`)) {
        return responder(input, init);
      }
    }
    return json(404, { error: 'no route' });
  };
  return { fn, calls };
}

export function json(status: number, payload: unknown): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { 'Content-Type': 'application/json' },
  });
}
