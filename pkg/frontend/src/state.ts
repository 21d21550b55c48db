/** Console view model.
 *
 * Single source of truth for the three panes. Every number it exposes came
 * from a service payload; polls that fail flip the connection flag and mark
 * the retained snapshot stale instead of fabricating anything. Label
 * submissions are optimistic (row removed immediately, button disabled) and
 * roll back with an inline note on conflict, expiry, or network failure.
 */

import { ApiClient } from './api';
import type { Label, PendingQuery, RankingRow, Telemetry } from './types';

export const SUPPORTED_SCHEMA = 1;

export interface QueryNote {
  queryId: string;
  message: string;
}

export interface ViewState {
  connected: boolean;
  stale: boolean;
  schemaMismatch: number | null;
  telemetry: Telemetry | null;
  pendingQueries: PendingQuery[];
  rankingIteration: number | null;
  rankingRows: RankingRow[];
  inFlight: Set<string>;
  notes: QueryNote[];
}

export function initialState(): ViewState {
  return {
    connected: false,
    stale: false,
    schemaMismatch: null,
    telemetry: null,
    pendingQueries: [],
    rankingIteration: null,
    rankingRows: [],
    inFlight: new Set(),
    notes: [],
  };
}

export class Console {
  state: ViewState = initialState();

  constructor(
    private readonly api: ApiClient,
    private readonly rankingLimit = 25,
    private readonly onChange: (state: ViewState) => void = () => {},
  ) {}

  private emit(): void {
    this.onChange(this.state);
  }

  /** One poll: telemetry, pending queue, and the latest completed ranking. */
  async refresh(): Promise<void> {
    let telemetry: Telemetry | null;
    let pending: PendingQuery[];
    try {
      telemetry = await this.api.state();
      pending = await this.api.queries();
    } catch {
      this.state.connected = false;
      this.state.stale = this.state.telemetry !== null;
      this.emit();
      return;
    }
    this.state.connected = true;
    this.state.stale = false;
    if (telemetry && telemetry.schema_version !== SUPPORTED_SCHEMA) {
      this.state.schemaMismatch = telemetry.schema_version;
      this.emit();
      return;
    }
    this.state.schemaMismatch = null;
    this.state.telemetry = telemetry;
    // queries the user already acted on stay hidden until the service agrees
    this.state.pendingQueries = pending.filter((q) => !this.state.inFlight.has(q.query_id));
    if (telemetry && telemetry.iteration >= 1 && telemetry.iteration !== this.state.rankingIteration) {
      try {
        const rows = await this.api.ranking(telemetry.iteration, this.rankingLimit);
        if (rows) {
          this.state.rankingIteration = telemetry.iteration;
          this.state.rankingRows = rows;
        }
      } catch {
        // ranking is decoration; the poll as a whole already succeeded
      }
    }
    this.emit();
  }

  private restoreRow(row: PendingQuery, message: string): void {
    if (!this.state.pendingQueries.some((q) => q.query_id === row.query_id)) {
      this.state.pendingQueries.push(row);
      this.state.pendingQueries.sort((a, b) => a.uncertainty - b.uncertainty);
    }
    this.state.notes = this.state.notes
      .filter((n) => n.queryId !== row.query_id)
      .concat({ queryId: row.query_id, message });
  }

  /** Exactly-once from the console's perspective: a second click while the
   * first submission is unresolved is a no-op. */
  async submitLabel(queryId: string, label: Label): Promise<void> {
    if (this.state.inFlight.has(queryId)) return;
    const row = this.state.pendingQueries.find((q) => q.query_id === queryId);
    if (!row) return;
    this.state.inFlight.add(queryId);
    this.state.pendingQueries = this.state.pendingQueries.filter(
      (q) => q.query_id !== queryId,
    );
    this.state.notes = this.state.notes.filter((n) => n.queryId !== queryId);
    this.emit();
    const outcome = await this.api.submitLabel(queryId, label);
    this.state.inFlight.delete(queryId);
    switch (outcome.kind) {
      case 'ok':
        break;
      case 'conflict':
        this.restoreRow(row, 'already labeled elsewhere (conflict)');
        break;
      case 'gone':
        this.restoreRow(row, 'query expired on the service');
        break;
      case 'invalid':
        this.restoreRow(row, 'service rejected the label');
        break;
      case 'network':
        this.restoreRow(row, `submission failed (${outcome.message}); retry`);
        break;
    }
    this.emit();
  }
}
