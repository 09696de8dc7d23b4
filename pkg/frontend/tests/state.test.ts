import { describe, expect, it } from 'vitest';

import {
  BoardError,
  BoardState,
  ClusteringDocument,
  SessionDocument,
  addColumn,
  assertPartition,
  assignmentOf,
  boardFromDocuments,
  canSubmit,
  changeLabel,
  closeColumn,
  deleteColumn,
  groupConsecutiveSaves,
  markClean,
  moveChange,
  renameColumn,
  reopenColumn,
  submitPayload,
} from '../src/state.js';

function sessionOf(ids: string[], selectorOf?: (id: string) => string): SessionDocument {
  return {
    developerId: 'dev1',
    records: ids.map((id, index) => ({
      type: 'change' as const,
      id,
      timestamp: index,
      kind: 'method-modified',
      className: 'Point',
      selector: selectorOf ? selectorOf(id) : `sel${id}`,
      packageName: 'Geom',
      diff: `--- before\n+++ after\n ${id}`,
    })),
  };
}

function clusteringOf(assignment: Record<string, string>): ClusteringDocument {
  return {
    records: Object.entries(assignment).map(([changeId, clusterId]) => ({
      changeId,
      clusterId,
    })),
  };
}

function board3(): BoardState {
  return boardFromDocuments(
    sessionOf(['ch1', 'ch2', 'ch3']),
    clusteringOf({ ch1: 'T1', ch2: 'T1', ch3: 'T2' }),
  );
}

describe('loading', () => {
  it('puts three changes of one proposed cluster into one column', () => {
    const board = boardFromDocuments(
      sessionOf(['a', 'b', 'c']),
      clusteringOf({ a: 'T1', b: 'T1', c: 'T1' }),
    );
    expect(board.columns).toHaveLength(1);
    expect(board.columns[0]!.changeIds).toEqual(['a', 'b', 'c']);
    expect(board.dirty).toBe(false);
  });

  it('an empty session yields an empty board with submit disabled', () => {
    const board = boardFromDocuments({ developerId: 'dev1', records: [] }, { records: [] });
    expect(board.columns).toHaveLength(0);
    expect(canSubmit(board)).toBe(false);
  });

  it('rejects a clustering that misses a change', () => {
    expect(() =>
      boardFromDocuments(sessionOf(['a', 'b']), clusteringOf({ a: 'T1' })),
    ).toThrow(BoardError);
  });

  it('rejects a clustering with unknown or duplicated changes', () => {
    expect(() =>
      boardFromDocuments(sessionOf(['a']), clusteringOf({ a: 'T1', zz: 'T1' })),
    ).toThrow(/unknown change/);
    expect(() =>
      boardFromDocuments(sessionOf(['a']), {
        records: [
          { changeId: 'a', clusterId: 'T1' },
          { changeId: 'a', clusterId: 'T2' },
        ],
      }),
    ).toThrow(/assigned twice/);
  });

  it('applies persisted titles', () => {
    const board = boardFromDocuments(sessionOf(['a']), {
      records: [{ changeId: 'a', clusterId: 'T1' }],
      titles: { T1: 'parser work' },
    });
    expect(board.columns[0]!.title).toBe('parser work');
  });
});

describe('rearranging', () => {
  it('moves a change between columns', () => {
    const board = moveChange(board3(), 'ch3', 'T1');
    expect(board.columns.find((c) => c.id === 'T1')!.changeIds).toEqual([
      'ch1', 'ch2', 'ch3',
    ]);
    expect(board.columns.find((c) => c.id === 'T2')!.changeIds).toEqual([]);
    expect(board.dirty).toBe(true);
  });

  it('keeps a column emptied by moves until submit', () => {
    const board = moveChange(board3(), 'ch3', 'T1');
    expect(board.columns.map((c) => c.id)).toContain('T2');
    const cleaned = markClean(board);
    expect(cleaned.columns.map((c) => c.id)).not.toContain('T2');
  });

  it('adding a column twice yields two distinct empty columns', () => {
    const board = addColumn(addColumn(board3()));
    const ids = board.columns.map((c) => c.id);
    expect(new Set(ids).size).toBe(ids.length);
    expect(board.columns.filter((c) => c.changeIds.length === 0)).toHaveLength(2);
  });

  it('rejects moves to nonexistent columns and leaves state unchanged', () => {
    const board = board3();
    expect(() => moveChange(board, 'ch1', 'T9')).toThrow(/no such column/);
    expect(board.columns.find((c) => c.id === 'T1')!.changeIds).toEqual(['ch1', 'ch2']);
  });

  it('rejects moves into closed columns until reopened', () => {
    let board = closeColumn(board3(), 'T2');
    expect(() => moveChange(board, 'ch1', 'T2')).toThrow(/closed/);
    board = reopenColumn(board, 'T2');
    board = moveChange(board, 'ch1', 'T2');
    expect(board.columns.find((c) => c.id === 'T2')!.changeIds).toContain('ch1');
  });

  it('deletes only empty columns', () => {
    let board = addColumn(board3());
    const added = board.columns[board.columns.length - 1]!.id;
    board = deleteColumn(board, added);
    expect(board.columns.map((c) => c.id)).not.toContain(added);
    expect(() => deleteColumn(board, 'T1')).toThrow(/not empty/);
  });
});

describe('submitting', () => {
  it('an unmodified proposal round-trips exactly', () => {
    const proposal = clusteringOf({ ch1: 'T1', ch2: 'T1', ch3: 'T2' });
    const payload = submitPayload(
      boardFromDocuments(sessionOf(['ch1', 'ch2', 'ch3']), proposal),
    );
    expect(assignmentOf(payload)).toEqual(assignmentOf(proposal));
  });

  it('a single move changes exactly one assignment', () => {
    const before = submitPayload(board3());
    const after = submitPayload(moveChange(board3(), 'ch2', 'T2'));
    const beforeMap = assignmentOf(before);
    const afterMap = assignmentOf(after);
    const differing = [...beforeMap.keys()].filter(
      (k) => beforeMap.get(k) !== afterMap.get(k),
    );
    expect(differing).toEqual(['ch2']);
  });

  it('drops dangling empty columns from the payload', () => {
    const board = addColumn(board3());
    const payload = submitPayload(board);
    const clusters = new Set(payload.records.map((r) => r.clusterId));
    expect(clusters).toEqual(new Set(['T1', 'T2']));
  });

  it('carries user titles but not default ones', () => {
    const board = renameColumn(board3(), 'T1', 'fix the parser');
    expect(submitPayload(board).titles).toEqual({ T1: 'fix the parser' });
  });

  it('reloading its own payload is a fixpoint', () => {
    const edited = moveChange(addColumn(board3()), 'ch1', 'T2');
    const payload = submitPayload(edited);
    const reloaded = boardFromDocuments(sessionOf(['ch1', 'ch2', 'ch3']), payload);
    expect(assignmentOf(submitPayload(reloaded))).toEqual(assignmentOf(payload));
  });
});

describe('partition safety under scripted sequences', () => {
  // deterministic PRNG so failures are reproducible
  function mulberry32(seed: number): () => number {
    let a = seed >>> 0;
    return () => {
      a = (a + 0x6d2b79f5) | 0;
      let t = Math.imul(a ^ (a >>> 15), 1 | a);
      t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
      return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
    };
  }

  it('random drag/add/close/reopen/delete sequences never duplicate or drop a change', () => {
    for (let seed = 1; seed <= 20; seed += 1) {
      const rand = mulberry32(seed);
      const ids = Array.from({ length: 12 }, (_, k) => `ch${k}`);
      const assignment: Record<string, string> = {};
      ids.forEach((id, k) => {
        assignment[id] = `T${1 + (k % 3)}`;
      });
      let board = boardFromDocuments(sessionOf(ids), clusteringOf(assignment));
      const originalIds = [...board.changes.keys()].sort();

      for (let step = 0; step < 120; step += 1) {
        const op = Math.floor(rand() * 6);
        const columns = board.columns;
        const pick = <T>(xs: T[]): T | undefined =>
          xs[Math.floor(rand() * xs.length)];
        try {
          if (op === 0) {
            board = addColumn(board);
          } else if (op === 1) {
            const id = pick(ids)!;
            const target = pick(columns)?.id ?? 'T1';
            board = moveChange(board, id, target);
          } else if (op === 2) {
            board = closeColumn(board, pick(columns)?.id ?? 'T1');
          } else if (op === 3) {
            board = reopenColumn(board, pick(columns)?.id ?? 'T1');
          } else if (op === 4) {
            board = deleteColumn(board, pick(columns)?.id ?? 'T1');
          } else {
            board = renameColumn(board, pick(columns)?.id ?? 'T1', `task ${step}`);
          }
        } catch (error) {
          expect(error).toBeInstanceOf(BoardError);
        }
        assertPartition(board);
        const assigned = board.columns.flatMap((c) => c.changeIds).sort();
        expect(assigned).toEqual(originalIds);
      }
      // the final board always submits to a valid partition
      const payload = submitPayload(board);
      expect(payload.records.map((r) => r.changeId).sort()).toEqual(originalIds);
    }
  });
});

describe('presentation helpers', () => {
  it('labels changes as ClassName>>selector', () => {
    expect(
      changeLabel({
        type: 'change', id: 'x', timestamp: 0,
        className: 'Point', selector: 'scale:',
      }),
    ).toBe('Point>>scale:');
  });

  it('groups consecutive saves of the same method', () => {
    const session = sessionOf(['a', 'b', 'c', 'd'], (id) =>
      id === 'c' ? 'other' : 'same',
    );
    const board = boardFromDocuments(
      session,
      clusteringOf({ a: 'T1', b: 'T1', c: 'T1', d: 'T1' }),
    );
    const groups = groupConsecutiveSaves(
      board.columns[0]!.changeIds,
      board.changes,
    );
    expect(groups.map((g) => g.changeIds)).toEqual([['a', 'b'], ['c'], ['d']]);
  });
});
