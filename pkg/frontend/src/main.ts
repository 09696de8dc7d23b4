import { Client } from './api.js';
import { App } from './app.js';

const root = document.getElementById('app');
if (!root) {
  throw new Error('missing #app element');
}
const app = new App(new Client(''), root);
void app.load();
