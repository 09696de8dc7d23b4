// End-to-end check against the real serve subcommand: load the proposed
// clustering, submit corrections, and verify what gets persisted.

import { execFileSync, spawn, type ChildProcess } from 'node:child_process';
import { mkdtempSync, readFileSync, rmSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { Client } from '../src/api.js';
import {
  assignmentOf,
  boardFromDocuments,
  moveChange,
  submitPayload,
} from '../src/state.js';

const PYTHON = process.env.UNTANGLER_PYTHON ?? 'python3';

let work: string;
let server: ChildProcess | undefined;
let base = '';
let outPath = '';

function cli(...argv: string[]): void {
  execFileSync(PYTHON, ['-m', 'untangler.cli', ...argv], { stdio: 'pipe' });
}

function readPersisted(): Map<string, string> {
  const lines = readFileSync(outPath, 'utf-8').trim().split('\n');
  return new Map(
    lines.map((line) => {
      const record = JSON.parse(line) as { changeId: string; clusterId: string };
      return [record.changeId, record.clusterId];
    }),
  );
}

beforeAll(async () => {
  work = mkdtempSync(join(tmpdir(), 'review-ui-'));
  const session = join(work, 'session.jsonl');
  const truth = join(work, 'truth.jsonl');
  const data = join(work, 'pairs.csv');
  const model = join(work, 'model.json');
  outPath = join(work, 'corrected.jsonl');
  cli('simulate', '--tasks', '3', '--changes-per-task', '4:6',
      '--interleave-prob', '0.0', '--intra-gap', '1:4', '--inter-gap', '400:800',
      '--seed', '17', '--out', session, '--truth', truth);
  cli('featurize', '--session', session, '--truth', truth, '--out', data);
  cli('train', '--data', data, '--classifier', 'forest', '--trees', '25',
      '--seed', '18', '--out', model);

  server = spawn(PYTHON, [
    '-m', 'untangler.cli', 'serve', '--session', session, '--model', model,
    '--out', outPath, '--port', '0',
  ]);
  base = await new Promise<string>((resolve, reject) => {
    const timer = setTimeout(() => reject(new Error('server did not start')), 20000);
    let buffered = '';
    server!.stdout!.on('data', (chunk: Buffer) => {
      buffered += chunk.toString();
      const match = buffered.match(/http:\/\/[\d.]+:(\d+)/);
      if (match) {
        clearTimeout(timer);
        resolve(`http://127.0.0.1:${match[1]}`);
      }
    });
    server!.on('exit', (code) => reject(new Error(`server exited with ${code}`)));
  });
}, 60000);

afterAll(() => {
  server?.kill();
  if (work) {
    rmSync(work, { recursive: true, force: true });
  }
});

describe('review flow against the serve endpoints', () => {
  it('loads a board whose items carry labels and diffs', async () => {
    const client = new Client(base);
    const [session, clustering] = await Promise.all([
      client.loadSession(),
      client.loadClustering(),
    ]);
    const board = boardFromDocuments(session, clustering);
    expect(board.changes.size).toBeGreaterThan(0);
    expect(board.columns.length).toBeGreaterThan(0);
    const first = board.changes.values().next().value!;
    expect(first.diff).toBeTruthy();
    expect(first.className).toBeTruthy();
  });

  it('submitting the unmodified proposal persists an equal clustering', async () => {
    const client = new Client(base);
    const clustering = await client.loadClustering();
    const board = boardFromDocuments(await client.loadSession(), clustering);
    await client.submitClustering(submitPayload(board));
    expect(readPersisted()).toEqual(assignmentOf({ records: clustering.records }));
  });

  it('a single move changes exactly one persisted assignment', async () => {
    const client = new Client(base);
    const clustering = await client.loadClustering();
    const board = boardFromDocuments(await client.loadSession(), clustering);
    const source = board.columns.find((c) => c.changeIds.length > 1)!;
    const target = board.columns.find((c) => c.id !== source.id)!;
    const moved = source.changeIds[0]!;
    await client.submitClustering(submitPayload(moveChange(board, moved, target.id)));
    const persisted = readPersisted();
    const original = assignmentOf({ records: clustering.records });
    const differing = [...original.keys()].filter(
      (k) => original.get(k) !== persisted.get(k),
    );
    expect(differing).toEqual([moved]);
    expect(persisted.get(moved)).toBe(target.id);
  });

  it('rejects a partial clustering and keeps the previous file', async () => {
    const client = new Client(base);
    const before = readPersisted();
    await expect(
      client.submitClustering({ records: [{ changeId: 'ch00001', clusterId: 'T1' }] }),
    ).rejects.toThrow(/without a cluster/);
    expect(readPersisted()).toEqual(before);
  });

  it('exposes pair scores for explaining merges', async () => {
    const client = new Client(base);
    const session = await client.loadSession();
    const changes = session.records.filter((r) => r.type === 'change');
    const probability = await client.score(changes[0]!.id, changes[1]!.id);
    expect(probability).toBeGreaterThanOrEqual(0);
    expect(probability).toBeLessThanOrEqual(1);
  });
});
