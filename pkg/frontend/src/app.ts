// DOM shell around the pure board state: columns in the top pane, the
// selected change's server-rendered unified diff in the bottom pane.

import { ApiError, Client } from './api.js';
import {
  BoardError,
  BoardState,
  addColumn,
  assignmentOf,
  boardFromDocuments,
  canSubmit,
  changeLabel,
  closeColumn,
  deleteColumn,
  groupConsecutiveSaves,
  kindIcon,
  markClean,
  moveChange,
  renameColumn,
  reopenColumn,
  selectChange,
  submitPayload,
} from './state.js';

export class App {
  private board: BoardState | null = null;
  private expanded = new Set<string>();

  constructor(
    private readonly client: Client,
    private readonly root: HTMLElement,
  ) {}

  async load(): Promise<void> {
    try {
      const [session, clustering] = await Promise.all([
        this.client.loadSession(),
        this.client.loadClustering(),
      ]);
      this.board = boardFromDocuments(session, clustering);
      this.render();
    } catch (error) {
      this.board = null;
      this.renderBlockingError(error);
    }
  }

  private apply(step: (board: BoardState) => BoardState): void {
    if (!this.board) {
      return;
    }
    try {
      this.board = step(this.board);
      this.render();
    } catch (error) {
      if (error instanceof BoardError) {
        this.flash(error.message);
      } else {
        throw error;
      }
    }
  }

  private async submit(): Promise<void> {
    if (!this.board || !canSubmit(this.board)) {
      return;
    }
    try {
      await this.client.submitClustering(submitPayload(this.board));
      this.board = markClean(this.board);
      this.render();
      this.flash('clustering saved', false);
    } catch (error) {
      const message = error instanceof ApiError
        ? `server rejected the clustering: ${error.message}`
        : String(error);
      this.flash(message);
    }
  }

  // -- rendering ------------------------------------------------------------

  private render(): void {
    if (!this.board) {
      return;
    }
    this.root.replaceChildren(
      this.renderToolbar(),
      this.renderBanner(),
      this.renderColumns(),
      this.renderDiffPane(),
    );
  }

  private renderToolbar(): HTMLElement {
    const bar = el('div', 'toolbar');
    const title = el('span', 'title');
    title.textContent = `review ${this.board!.changes.size} changes`;
    const add = button('add cluster', () => this.apply((b) => addColumn(b)));
    const submit = button(
      this.board!.dirty ? 'submit (edited)' : 'submit',
      () => void this.submit(),
    );
    submit.disabled = !canSubmit(this.board!);
    submit.classList.add('submit');
    bar.append(title, add, submit);
    return bar;
  }

  private renderBanner(): HTMLElement {
    const banner = el('div', 'banner');
    banner.id = 'banner';
    return banner;
  }

  private renderColumns(): HTMLElement {
    const wrap = el('div', 'columns');
    for (const column of this.board!.columns) {
      wrap.append(this.renderColumn(column.id));
    }
    return wrap;
  }

  private renderColumn(columnId: string): HTMLElement {
    const board = this.board!;
    const column = board.columns.find((c) => c.id === columnId)!;
    const box = el('section', column.open ? 'column' : 'column closed');

    const head = el('header');
    const name = document.createElement('input');
    name.value = column.title;
    name.title = 'cluster title';
    name.addEventListener('change', () =>
      this.apply((b) => renameColumn(b, column.id, name.value || column.id)),
    );
    head.append(name);
    head.append(
      column.open
        ? button('close', () => this.apply((b) => closeColumn(b, column.id)))
        : button('reopen', () => this.apply((b) => reopenColumn(b, column.id))),
    );
    if (column.changeIds.length === 0) {
      head.append(button('delete', () => this.apply((b) => deleteColumn(b, column.id))));
    }
    box.append(head);

    const body = el('div', 'items');
    body.addEventListener('dragover', (event) => {
      if (column.open) {
        event.preventDefault();
      }
    });
    body.addEventListener('drop', (event) => {
      event.preventDefault();
      const changeId = event.dataTransfer?.getData('text/change-id');
      if (changeId) {
        this.apply((b) => moveChange(b, changeId, column.id));
      }
    });
    for (const group of groupConsecutiveSaves(column.changeIds, board.changes)) {
      if (group.changeIds.length === 1) {
        body.append(this.renderItem(group.changeIds[0]!));
      } else {
        body.append(this.renderGroup(column.id, group.label, group.changeIds));
      }
    }
    box.append(body);
    return box;
  }

  private renderGroup(columnId: string, label: string, ids: string[]): HTMLElement {
    const key = `${columnId}:${label}:${ids[0]}`;
    const details = document.createElement('details');
    details.className = 'group';
    details.open = this.expanded.has(key);
    details.addEventListener('toggle', () => {
      if (details.open) {
        this.expanded.add(key);
      } else {
        this.expanded.delete(key);
      }
    });
    const summary = document.createElement('summary');
    summary.textContent = `${label} — ${ids.length} consecutive saves`;
    details.append(summary);
    for (const id of ids) {
      details.append(this.renderItem(id));
    }
    return details;
  }

  private renderItem(changeId: string): HTMLElement {
    const board = this.board!;
    const record = board.changes.get(changeId)!;
    const item = el('div', 'item');
    if (board.selectedChangeId === changeId) {
      item.classList.add('selected');
    }
    item.draggable = true;
    item.addEventListener('dragstart', (event) => {
      event.dataTransfer?.setData('text/change-id', changeId);
    });
    item.addEventListener('click', () =>
      this.apply((b) => selectChange(b, changeId)),
    );
    const icon = el('span', 'icon');
    icon.textContent = kindIcon(record.kind);
    const label = el('span', 'label');
    label.textContent = changeLabel(record);
    item.append(icon, label);
    return item;
  }

  private renderDiffPane(): HTMLElement {
    const pane = el('pre', 'diff');
    const board = this.board!;
    if (board.selectedChangeId) {
      const record = board.changes.get(board.selectedChangeId);
      pane.textContent = record?.diff || '(no difference rendered)';
    } else {
      pane.textContent = 'select a change to see its diff';
    }
    return pane;
  }

  private renderBlockingError(error: unknown): void {
    const banner = el('div', 'banner blocking');
    banner.textContent = `cannot load the session: ${
      error instanceof Error ? error.message : String(error)
    }`;
    this.root.replaceChildren(banner);
  }

  private flash(message: string, isError = true): void {
    const banner = this.root.querySelector('#banner');
    if (banner instanceof HTMLElement) {
      banner.textContent = message;
      banner.classList.toggle('error', isError);
    }
  }
}

function el(tag: string, className?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) {
    node.className = className;
  }
  return node;
}

function button(label: string, onClick: () => void): HTMLButtonElement {
  const node = document.createElement('button');
  node.textContent = label;
  node.addEventListener('click', onClick);
  return node;
}

export { assignmentOf };
