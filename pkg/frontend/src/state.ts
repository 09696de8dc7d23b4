// Pure board state for the cluster review UI.
//
// The board is always a partition of the session's change events: every
// change id sits in exactly one column. All operations return a fresh state
// and throw BoardError (leaving the input untouched) when they would break
// the partition, so drag-and-drop can never duplicate or lose a change.

export interface SessionRecord {
  type: 'change' | 'testRun';
  id: string;
  timestamp: number;
  kind?: string;
  className?: string;
  selector?: string;
  packageName?: string;
  diff?: string;
}

export interface SessionDocument {
  developerId: string;
  records: SessionRecord[];
}

export interface ClusteringRecord {
  changeId: string;
  clusterId: string;
}

export interface ClusteringDocument {
  records: ClusteringRecord[];
  titles?: Record<string, string>;
}

export interface Column {
  id: string;
  title: string;
  open: boolean;
  changeIds: string[];
}

export interface BoardState {
  columns: Column[];
  selectedChangeId: string | null;
  dirty: boolean;
  changes: Map<string, SessionRecord>;
}

export class BoardError extends Error {}

function changeRecords(session: SessionDocument): SessionRecord[] {
  return session.records.filter((r) => r.type === 'change');
}

export function boardFromDocuments(
  session: SessionDocument,
  clustering: ClusteringDocument,
): BoardState {
  const changes = new Map<string, SessionRecord>();
  for (const record of changeRecords(session)) {
    changes.set(record.id, record);
  }
  const assigned = new Map<string, string>();
  for (const { changeId, clusterId } of clustering.records) {
    if (!changes.has(changeId)) {
      throw new BoardError(`clustering references unknown change ${changeId}`);
    }
    if (assigned.has(changeId)) {
      throw new BoardError(`change ${changeId} assigned twice`);
    }
    assigned.set(changeId, clusterId);
  }
  for (const id of changes.keys()) {
    if (!assigned.has(id)) {
      throw new BoardError(`clustering is missing change ${id}`);
    }
  }
  const order: string[] = [];
  const byColumn = new Map<string, string[]>();
  // keep session entry order inside each column
  for (const record of changeRecords(session)) {
    const clusterId = assigned.get(record.id)!;
    if (!byColumn.has(clusterId)) {
      byColumn.set(clusterId, []);
      order.push(clusterId);
    }
    byColumn.get(clusterId)!.push(record.id);
  }
  const titles = clustering.titles ?? {};
  const columns = order.map((id) => ({
    id,
    title: titles[id] ?? id,
    open: true,
    changeIds: byColumn.get(id)!,
  }));
  return { columns, selectedChangeId: null, dirty: false, changes };
}

export function assertPartition(board: BoardState): void {
  const seen = new Set<string>();
  for (const column of board.columns) {
    for (const id of column.changeIds) {
      if (seen.has(id)) {
        throw new BoardError(`change ${id} appears in two columns`);
      }
      seen.add(id);
    }
  }
  for (const id of board.changes.keys()) {
    if (!seen.has(id)) {
      throw new BoardError(`change ${id} is unassigned`);
    }
  }
  if (seen.size !== board.changes.size) {
    throw new BoardError('board tracks ids outside the session');
  }
}

function cloneColumns(columns: Column[]): Column[] {
  return columns.map((c) => ({ ...c, changeIds: [...c.changeIds] }));
}

function findColumn(columns: Column[], id: string): Column {
  const column = columns.find((c) => c.id === id);
  if (!column) {
    throw new BoardError(`no such column ${id}`);
  }
  return column;
}

export function moveChange(
  board: BoardState,
  changeId: string,
  targetColumnId: string,
  position?: number,
): BoardState {
  const columns = cloneColumns(board.columns);
  const target = findColumn(columns, targetColumnId);
  if (!target.open) {
    throw new BoardError(`cluster ${target.title} is closed; reopen it first`);
  }
  const source = columns.find((c) => c.changeIds.includes(changeId));
  if (!source) {
    throw new BoardError(`no such change ${changeId}`);
  }
  source.changeIds = source.changeIds.filter((id) => id !== changeId);
  const at = position === undefined
    ? target.changeIds.length
    : Math.max(0, Math.min(position, target.changeIds.length));
  target.changeIds.splice(at, 0, changeId);
  const next = { ...board, columns, dirty: true };
  assertPartition(next);
  return next;
}

export function addColumn(board: BoardState, title?: string): BoardState {
  let n = board.columns.length + 1;
  while (board.columns.some((c) => c.id === `T${n}`)) {
    n += 1;
  }
  const id = `T${n}`;
  const column: Column = { id, title: title ?? id, open: true, changeIds: [] };
  return { ...board, columns: [...board.columns, column], dirty: true };
}

export function closeColumn(board: BoardState, columnId: string): BoardState {
  const columns = cloneColumns(board.columns);
  findColumn(columns, columnId).open = false;
  return { ...board, columns, dirty: true };
}

export function reopenColumn(board: BoardState, columnId: string): BoardState {
  const columns = cloneColumns(board.columns);
  findColumn(columns, columnId).open = true;
  return { ...board, columns, dirty: true };
}

export function renameColumn(
  board: BoardState,
  columnId: string,
  title: string,
): BoardState {
  const columns = cloneColumns(board.columns);
  findColumn(columns, columnId).title = title;
  return { ...board, columns, dirty: true };
}

// Deleting is only allowed for empty columns; anything else would orphan
// changes and break the partition.
export function deleteColumn(board: BoardState, columnId: string): BoardState {
  const column = findColumn(board.columns, columnId);
  if (column.changeIds.length > 0) {
    throw new BoardError(`cluster ${column.title} is not empty`);
  }
  const columns = board.columns.filter((c) => c.id !== columnId);
  return { ...board, columns, dirty: true };
}

export function selectChange(board: BoardState, changeId: string | null): BoardState {
  if (changeId !== null && !board.changes.has(changeId)) {
    throw new BoardError(`no such change ${changeId}`);
  }
  return { ...board, selectedChangeId: changeId };
}

export function canSubmit(board: BoardState): boolean {
  return board.changes.size > 0;
}

// Empty columns are dropped at submit time; they exist only while editing.
export function submitPayload(board: BoardState): ClusteringDocument {
  assertPartition(board);
  const records: ClusteringRecord[] = [];
  const titles: Record<string, string> = {};
  for (const column of board.columns) {
    if (column.changeIds.length === 0) {
      continue;
    }
    for (const changeId of column.changeIds) {
      records.push({ changeId, clusterId: column.id });
    }
    if (column.title !== column.id) {
      titles[column.id] = column.title;
    }
  }
  records.sort((a, b) => (a.changeId < b.changeId ? -1 : 1));
  return { records, titles };
}

export function markClean(board: BoardState): BoardState {
  const columns = board.columns.filter((c) => c.changeIds.length > 0);
  return { ...board, columns, dirty: false };
}

export function assignmentOf(document: ClusteringDocument): Map<string, string> {
  return new Map(document.records.map((r) => [r.changeId, r.clusterId]));
}

// ---------------------------------------------------------------------------
// Presentation helpers
// ---------------------------------------------------------------------------

export function changeLabel(record: SessionRecord): string {
  if (record.selector) {
    return `${record.className}>>${record.selector}`;
  }
  return record.className ?? record.id;
}

export function kindIcon(kind: string | undefined): string {
  switch (kind) {
    case 'class-added': return '⊕C';
    case 'class-modified': return '±C';
    case 'class-removed': return '⊖C';
    case 'method-added': return '⊕m';
    case 'method-modified': return '±m';
    case 'method-removed': return '⊖m';
    default: return '?';
  }
}

export interface ItemGroup {
  label: string;
  changeIds: string[];
}

// Consecutive saves of the same method stack under one expandable header.
// Grouping is presentation only: every change stays individually draggable.
export function groupConsecutiveSaves(
  changeIds: string[],
  changes: Map<string, SessionRecord>,
): ItemGroup[] {
  const groups: ItemGroup[] = [];
  for (const id of changeIds) {
    const record = changes.get(id);
    const label = record ? changeLabel(record) : id;
    const last = groups[groups.length - 1];
    if (last && last.label === label) {
      last.changeIds.push(id);
    } else {
      groups.push({ label, changeIds: [id] });
    }
  }
  return groups;
}
