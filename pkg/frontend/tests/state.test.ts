import { describe, expect, it } from 'vitest';

import type { Stage } from '../src/api.js';
import {
  allAnswered,
  BAND_LABELS,
  isBandLabel,
  primaryViewFor,
  testPhaseFor,
} from '../src/state.js';

describe('primaryViewFor', () => {
  it('maps every stage to exactly one view', () => {
    const expected: Record<Stage, string> = {
      AwaitingProfile: 'questionnaire',
      ConceptPretest: 'test',
      ConceptLearning: 'lesson',
      ConceptPosttest: 'test',
      CourseComplete: 'dashboard',
    };
    for (const [stage, view] of Object.entries(expected)) {
      expect(primaryViewFor({ stage: stage as Stage, concept: null })).toBe(view);
    }
  });
});

describe('testPhaseFor', () => {
  it('derives the phase from the stage', () => {
    expect(testPhaseFor({ stage: 'ConceptPretest', concept: 'c' })).toBe('pretest');
    expect(testPhaseFor({ stage: 'ConceptPosttest', concept: 'c' })).toBe('posttest');
    expect(testPhaseFor({ stage: 'ConceptLearning', concept: 'c' })).toBeNull();
  });
});

describe('band labels', () => {
  it('accepts exactly the five knowledge level names', () => {
    expect(BAND_LABELS).toEqual(['Weak', 'Average', 'Good', 'Very good', 'Excellent']);
    for (const label of BAND_LABELS) expect(isBandLabel(label)).toBe(true);
    expect(isBandLabel('Amazing')).toBe(false);
    expect(isBandLabel('VeryGood')).toBe(false);
  });
});

describe('allAnswered', () => {
  const view = {
    testId: 't',
    concept: 'c',
    phase: 'pretest' as const,
    index: 0,
    answers: { q1: 'a' },
    hintBudget: 2,
    hints: {},
  };

  it('requires an answer for every question', () => {
    expect(allAnswered(view, ['q1'])).toBe(true);
    expect(allAnswered(view, ['q1', 'q2'])).toBe(false);
  });
});
