/** DOM rendering for the three panes: labeling queue, current ranking, and
 * the nDCG history chart. Framework-free; every pane is rebuilt from the
 * view state on change. */

import { chartData, chartSvg } from './chart';
import type { ViewState } from './state';
import type { Label } from './types';

export type SubmitHandler = (queryId: string, label: Label) => void;

function el(tag: string, cls?: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderBanner(root: HTMLElement, state: ViewState): void {
  root.replaceChildren();
  if (!state.connected) {
    const banner = el('div', 'banner reconnect', 'service unreachable, retrying...');
    banner.dataset.testid = 'reconnect-banner';
    root.appendChild(banner);
  } else if (state.schemaMismatch !== null) {
    const banner = el(
      'div', 'banner schema',
      `service speaks schema ${state.schemaMismatch}, console expects 1`);
    banner.dataset.testid = 'schema-banner';
    root.appendChild(banner);
  } else if (state.stale) {
    const banner = el('div', 'banner stale', 'showing stale snapshot');
    banner.dataset.testid = 'stale-banner';
    root.appendChild(banner);
  }
}

export function renderStatus(root: HTMLElement, state: ViewState): void {
  root.replaceChildren();
  const t = state.telemetry;
  if (!t) {
    root.appendChild(el('div', 'status', 'no run published yet'));
    return;
  }
  const tau = t.tau === null ? 'n/a' : t.tau.toFixed(4);
  const line =
    `iteration ${t.iteration} | tau ${tau} | labeled ${t.pool_sizes.labeled_normal}` +
    ` (+${t.pool_sizes.synthetic} synthetic) | unlabeled ${t.pool_sizes.unlabeled}` +
    ` | confirmed anomalies ${t.pool_sizes.known_anomalies}`;
  const node = el('div', 'status', line);
  node.dataset.testid = 'status-line';
  node.dataset.iteration = String(t.iteration);
  root.appendChild(node);
}

export function renderQueue(root: HTMLElement, state: ViewState,
                            onSubmit: SubmitHandler): void {
  root.replaceChildren();
  root.appendChild(el('h2', undefined, 'labeling queue'));
  if (state.pendingQueries.length === 0 && state.inFlight.size === 0) {
    const empty = el('div', 'empty', 'queue empty, waiting for next iteration');
    empty.dataset.testid = 'queue-empty';
    root.appendChild(empty);
  }
  for (const note of state.notes) {
    const div = el('div', 'note', `${note.queryId}: ${note.message}`);
    div.dataset.testid = 'conflict-note';
    root.appendChild(div);
  }
  for (const q of state.pendingQueries) {
    const row = el('div', 'query-row');
    row.dataset.testid = 'queue-row';
    row.dataset.queryId = q.query_id;
    const body = el('div', 'query-body');
    body.appendChild(el('span', 'record', q.record_id));
    body.appendChild(el('span', 'score', `score ${q.anomaly_score.toFixed(4)}`));
    body.appendChild(el('span', 'uncertainty',
                        `|score-tau| ${q.uncertainty.toFixed(4)}`));
    const attrs = q.top_attributes.length
      ? q.top_attributes.join(', ')
      : '(no active attributes)';
    body.appendChild(el('span', 'attrs', attrs));
    row.appendChild(body);
    const buttons = el('div', 'query-buttons');
    (['normal', 'anomalous'] as Label[]).forEach((label) => {
      const button = el('button', `label-${label}`, label) as HTMLButtonElement;
      button.dataset.testid = `label-${label}`;
      button.disabled = state.inFlight.has(q.query_id);
      button.addEventListener('click', () => onSubmit(q.query_id, label));
      buttons.appendChild(button);
    });
    row.appendChild(buttons);
    root.appendChild(row);
  }
}

export function renderRanking(root: HTMLElement, state: ViewState): void {
  root.replaceChildren();
  root.appendChild(el('h2', undefined, 'ranked pool'));
  if (state.rankingIteration === null) {
    root.appendChild(el('div', 'empty', 'no completed iteration yet'));
    return;
  }
  root.appendChild(el('div', 'caption',
                      `iteration ${state.rankingIteration}, top ${state.rankingRows.length}`));
  const table = el('table', 'ranking') as HTMLTableElement;
  const head = el('tr');
  for (const title of ['rank', 'record', 'score', '']) {
    head.appendChild(el('th', undefined, title));
  }
  table.appendChild(head);
  for (const row of state.rankingRows) {
    const tr = el('tr', row.is_known_anomaly ? 'known-anomaly' : '');
    tr.dataset.testid = 'ranking-row';
    tr.appendChild(el('td', undefined, String(row.rank)));
    tr.appendChild(el('td', undefined, row.id));
    tr.appendChild(el('td', undefined, row.score.toFixed(4)));
    tr.appendChild(el('td', undefined, row.is_known_anomaly ? 'confirmed' : ''));
    table.appendChild(tr);
  }
  root.appendChild(table);
}

export function renderHistory(root: HTMLElement, state: ViewState): void {
  root.replaceChildren();
  root.appendChild(el('h2', undefined, 'nDCG history'));
  const history = state.telemetry?.history ?? [];
  if (history.length === 0) {
    root.appendChild(el('div', 'empty', 'no iterations recorded yet'));
    return;
  }
  const holder = el('div', 'chart');
  holder.innerHTML = chartSvg(chartData(history));
  root.appendChild(holder);
  const last = history[history.length - 1];
  root.appendChild(el('div', 'caption',
                      `latest: ndcg_full ${last.ndcg_full.toFixed(4)}, ` +
                      `tau ${last.tau.toFixed(4)}`));
}

export function renderAll(roots: {
  banner: HTMLElement; status: HTMLElement; queue: HTMLElement;
  ranking: HTMLElement; history: HTMLElement;
}, state: ViewState, onSubmit: SubmitHandler): void {
  renderBanner(roots.banner, state);
  renderStatus(roots.status, state);
  renderQueue(roots.queue, state, onSubmit);
  renderRanking(roots.ranking, state);
  renderHistory(roots.history, state);
}
