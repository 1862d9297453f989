/**
 * Entry point: mount the explorer on #app against the API base URL given
 * by the `?api=` query parameter (default http://127.0.0.1:8642).
 */

import { ApiClient } from './api.js';
import { ExplorerController } from './controller.js';

function apiBase(): string {
  const fromQuery = new URLSearchParams(window.location.search).get('api');
  return fromQuery ?? 'http://127.0.0.1:8642';
}

const root = document.getElementById('app');
if (!root) {
  throw new Error('missing #app element');
}
const controller = new ExplorerController(root, new ApiClient(apiBase()));
void controller.init();

declare global {
  interface Window {
    explorer: ExplorerController;
  }
}
window.explorer = controller;
