/** Browser bootstrap: connect the app shell to a running engine. */

import { ApiClient, FetchTransport } from './api.js';
import { App } from './app.js';

const SERVER = (window as unknown as { WEAVER_SERVER?: string }).WEAVER_SERVER ?? '';

async function boot() {
  const root = document.querySelector<HTMLElement>('#app');
  if (!root) throw new Error('missing #app root element');
  const app = new App(new ApiClient(new FetchTransport(SERVER)), root);
  await app.start();

  document.addEventListener('keydown', (event) => {
    // Tab inside a text editor triggers narrative generation
    if (event.key !== 'Tab') return;
    const editor = (event.target as HTMLElement | null)?.closest?.('[contenteditable]');
    if (!editor) return;
    event.preventDefault();
    const nodeId = (editor as HTMLElement).dataset.node;
    if (nodeId) void app.textNodes.get(nodeId)?.narrative.generate().then(() => app.redraw());
  });

  document.addEventListener('click', (event) => {
    const target = event.target as HTMLElement | null;
    const action = target?.dataset.action;
    const nodeId = target?.closest<HTMLElement>('[data-node-id]')?.dataset.nodeId;
    if (!action || !nodeId) return;
    if (action === 'checkout') void app.checkoutSelection(nodeId);
    if (action === 'recommend') {
      const selection = document.getSelection()?.toString() ?? '';
      if (selection) void app.recommendFor(nodeId, selection);
    }
  });
}

void boot();
