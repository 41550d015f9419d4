// View-state mapping: each session stage owns exactly one primary view.

import type { SessionState, Stage } from './api.js';

export type ViewName = 'questionnaire' | 'test' | 'lesson' | 'dashboard' | 'inbox';

// The five knowledge band labels the dashboard may render, in rank order.
export const BAND_LABELS = ['Weak', 'Average', 'Good', 'Very good', 'Excellent'] as const;
export type BandLabel = (typeof BAND_LABELS)[number];

export function isBandLabel(value: string): value is BandLabel {
  return (BAND_LABELS as readonly string[]).includes(value);
}

const PRIMARY_VIEW: Record<Stage, ViewName> = {
  AwaitingProfile: 'questionnaire',
  ConceptPretest: 'test',
  ConceptLearning: 'lesson',
  ConceptPosttest: 'test',
  CourseComplete: 'dashboard',
};

export function primaryViewFor(state: SessionState): ViewName {
  return PRIMARY_VIEW[state.stage];
}

export function testPhaseFor(state: SessionState): 'pretest' | 'posttest' | null {
  if (state.stage === 'ConceptPretest') return 'pretest';
  if (state.stage === 'ConceptPosttest') return 'posttest';
  return null;
}

// In-flight test answers and hint budget; lives only while the tab does.
// Reloads rebuild everything from GET /state (the server re-issues the same
// test instance), so the token is the only durable client state.
export interface TestViewState {
  testId: string;
  concept: string;
  phase: 'pretest' | 'posttest';
  index: number;
  answers: Record<string, string>;
  hintBudget: number;
  hints: Record<string, string[]>;
}

export function allAnswered(view: TestViewState, questionIds: string[]): boolean {
  return questionIds.every((id) => view.answers[id] !== undefined);
}
