// Live smoke test: boots the real tutoring service and walks the client
// API through profile -> pretest far enough to prove the wiring. Skipped
// when the service binary is not on PATH.

import { spawn, spawnSync, type ChildProcess } from 'node:child_process';
import { mkdtempSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { TutorApi } from '../src/api.js';

const TEACHER = 'smoke-teacher';
const PORT = 8743 + (process.pid % 100);
const BASE = `http://127.0.0.1:${PORT}`;

const serveAvailable = spawnSync('adaptutor-serve', ['--help']).status === 0;

let server: ChildProcess | null = null;

async function waitForHealth(timeoutMs = 15000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const response = await fetch(`${BASE}/health`);
      if (response.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 200));
  }
  throw new Error('service did not come up in time');
}

describe.skipIf(!serveAvailable)('live service smoke', () => {
  beforeAll(async () => {
    const records = mkdtempSync(join(tmpdir(), 'adaptutor-smoke-'));
    server = spawn(
      'adaptutor-serve',
      [
        '--bind', `127.0.0.1:${PORT}`,
        '--records', records,
        '--teacher-token', TEACHER,
        '--seed', '7',
      ],
      { cwd: join(__dirname, '..', '..'), stdio: 'ignore' },
    );
    await waitForHealth();
  }, 20000);

  afterAll(() => {
    server?.kill();
  });

  it('serves health with pack and rulebook ids', async () => {
    const response = await fetch(`${BASE}/health`);
    const body = await response.json();
    expect(body.status).toBe('ok');
    expect(body.pack_id).toBe('demo-computing');
  });

  it('walks profile -> pretest -> hint through the typed client', async () => {
    const tokenResponse = await fetch(`${BASE}/teacher/learners/smokey/token`, {
      headers: { Authorization: `Bearer ${TEACHER}` },
    });
    const { token } = await tokenResponse.json();

    const api = new TutorApi(BASE, token, 'smokey');
    const instrument = await api.instrument();
    expect(instrument.items.length).toBe(20);

    const responses: Record<string, number> = {};
    for (const item of instrument.items) {
      const high = item.style === 'CA';
      responses[item.id] = item.reverse_scored ? (high ? 1 : 4) : high ? 5 : 2;
    }
    const profiled = await api.submitProfile(responses);
    expect(profiled.dominant_style).toBe('CA');
    expect(profiled.state.stage).toBe('ConceptPretest');

    const snapshot = await api.state();
    expect(snapshot.state.stage).toBe('ConceptPretest');
    expect(snapshot.state.concept).toBe('hardware');

    const issued = await api.beginTest('hardware', 'pretest');
    expect(issued.questions.length).toBeGreaterThan(0);
    for (const question of issued.questions) {
      for (const choice of question.choices) {
        expect(choice).not.toHaveProperty('correct');
        expect(choice).not.toHaveProperty('misconception_tag');
      }
    }

    const hint = await api.hint(issued.test_id, issued.questions[0].id);
    expect(hint.hint.length).toBeGreaterThan(0);
    expect(hint.remaining_budget).toBe(issued.hint_budget - 1);

    const inbox = await api.inbox();
    expect(inbox.messages).toEqual([]);
  }, 20000);
});
