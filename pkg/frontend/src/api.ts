/** Thin typed client for the oracle service. Every displayed value in the
 * console originates from one of these calls. */

import type { Label, PendingQuery, RankingRow, SubmitOutcome, Telemetry } from './types';

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  /** Telemetry snapshot; null while no run has published yet (404). */
  async state(): Promise<Telemetry | null> {
    const resp = await this.fetchFn(`${this.baseUrl}/api/state`);
    if (resp.status === 404) return null;
    if (!resp.ok) throw new Error(`state: http ${resp.status}`);
    return (await resp.json()) as Telemetry;
  }

  async queries(): Promise<PendingQuery[]> {
    const resp = await this.fetchFn(`${this.baseUrl}/api/queries`);
    if (!resp.ok) throw new Error(`queries: http ${resp.status}`);
    const payload = (await resp.json()) as { queries: PendingQuery[] };
    return payload.queries;
  }

  /** Ranking rows of a completed iteration; null if it is not available. */
  async ranking(iteration: number, limit?: number): Promise<RankingRow[] | null> {
    const suffix = limit === undefined ? '' : `&limit=${limit}`;
    const resp = await this.fetchFn(`${this.baseUrl}/api/ranking?iter=${iteration}${suffix}`);
    if (resp.status === 404) return null;
    if (!resp.ok) throw new Error(`ranking: http ${resp.status}`);
    const payload = (await resp.json()) as { rows: RankingRow[] };
    return payload.rows;
  }

  /** Submit one label; non-2xx statuses map to typed outcomes instead of
   * throwing, so the view model can roll back optimistic updates. */
  async submitLabel(queryId: string, label: Label): Promise<SubmitOutcome> {
    let resp: Response;
    try {
      resp = await this.fetchFn(
        `${this.baseUrl}/api/queries/${encodeURIComponent(queryId)}/label`,
        {
          method: 'POST',
          headers: { 'Content-Type': 'application/json' },
          body: JSON.stringify({ label }),
        },
      );
    } catch (err) {
      return { kind: 'network', message: err instanceof Error ? err.message : String(err) };
    }
    switch (resp.status) {
      case 200:
        return { kind: 'ok' };
      case 409:
        return { kind: 'conflict' };
      case 404:
        return { kind: 'gone' };
      case 400:
        return { kind: 'invalid' };
      default:
        return { kind: 'network', message: `http ${resp.status}` };
    }
  }
}
