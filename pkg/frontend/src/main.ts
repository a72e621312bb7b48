import { Client } from './api.js';
import { App } from './ui.js';

const base = (window as unknown as { EQGAMES_API?: string }).EQGAMES_API
  ?? 'http://127.0.0.1:8000';
const root = document.getElementById('app');
if (!root) throw new Error('missing #app element');
new App(root, new Client(base));
