/** Entry point: wire the console to the page and poll once a second. */

import { ApiClient } from './api';
import { Console } from './state';
import { renderAll } from './render';

const POLL_MS = 1000;

function requireEl(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id} in index.html`);
  return node;
}

export function start(baseUrl: string = ''): () => void {
  const roots = {
    banner: requireEl('banner'),
    status: requireEl('status'),
    queue: requireEl('queue'),
    ranking: requireEl('ranking'),
    history: requireEl('history'),
  };
  const api = new ApiClient(baseUrl);
  const console_ = new Console(api, 25, (state) => {
    renderAll(roots, state, (queryId, label) => {
      void console_.submitLabel(queryId, label);
    });
  });
  void console_.refresh();
  const timer = setInterval(() => void console_.refresh(), POLL_MS);
  return () => clearInterval(timer);
}

if (typeof document !== 'undefined' && document.getElementById('queue')) {
  start();
}
