// Typed client for the tutoring service. All requests carry the learner's
// bearer token; errors are normalized into ApiError with the server's
// {code, message, detail} body.

export type Stage =
  | 'AwaitingProfile'
  | 'ConceptPretest'
  | 'ConceptLearning'
  | 'ConceptPosttest'
  | 'CourseComplete';

export interface SessionState {
  stage: Stage;
  concept: string | null;
}

export interface InstrumentItem {
  id: string;
  prompt: string;
  style: string;
  reverse_scored: boolean;
}

export interface Instrument {
  id: string;
  scale_min: number;
  scale_max: number;
  items: InstrumentItem[];
}

export interface Choice {
  id: string;
  body: string;
}

export interface TestQuestion {
  id: string;
  body: string;
  section: string;
  level: string;
  dimension: string;
  points: number;
  choices: Choice[];
  hints_available: number;
}

export interface IssuedTest {
  test_id: string;
  concept: string;
  phase: 'pretest' | 'posttest';
  hint_budget: number;
  questions: TestQuestion[];
}

export interface GradeReport {
  raw_score: number;
  band: string;
  per_dimension: Record<string, number>;
  per_section: Record<string, number>;
  misconceptions: string[];
  hint_penalty_applied: number;
}

export interface SubmitResult {
  report: GradeReport;
  flow: string;
  phase: string;
  concept: string;
  state: SessionState;
  correct_choices?: Record<string, string>;
}

export interface ResolvedLink {
  kind: 'concept' | 'external';
  target: string;
  href: string;
}

export interface ContentBlock {
  kind: string;
  body: string;
  links: ResolvedLink[];
}

export interface LessonContent {
  concept: string;
  title: string;
  variant_style: string;
  blocks: ContentBlock[];
}

export interface ConceptProgress {
  concept: string;
  title: string;
  band: string | null;
  attempts: number;
  removed: boolean;
}

export interface StateResponse {
  state: SessionState;
  concept: { id: string; title: string } | null;
  profiled: boolean;
  progress: ConceptProgress[];
}

export interface Message {
  id: string;
  to: string;
  channel: string;
  body: string;
  read: boolean;
  timestamp: number;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
    public detail: unknown = {},
  ) {
    super(message);
  }
}

export class TutorApi {
  constructor(
    private baseUrl: string,
    private token: string,
    private learnerId: string,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await fetch(`${this.baseUrl}${path}`, {
      method,
      headers: {
        Authorization: `Bearer ${this.token}`,
        ...(body !== undefined ? { 'Content-Type': 'application/json' } : {}),
      },
      body: body !== undefined ? JSON.stringify(body) : undefined,
    });
    const text = await response.text();
    const payload = text ? JSON.parse(text) : {};
    if (!response.ok) {
      throw new ApiError(
        response.status,
        payload.code ?? 'http_error',
        payload.message ?? response.statusText,
        payload.detail,
      );
    }
    return payload as T;
  }

  health(): Promise<{ status: string; pack_id: string; rulebook_id: string }> {
    return this.request('GET', '/health');
  }

  instrument(): Promise<Instrument> {
    return this.request('GET', '/instrument');
  }

  state(): Promise<StateResponse> {
    return this.request('GET', `/learners/${this.learnerId}/state`);
  }

  submitProfile(responses: Record<string, number>): Promise<{
    style_vector: Record<string, number>;
    dominant_style: string;
    state: SessionState;
  }> {
    return this.request('POST', `/learners/${this.learnerId}/profile`, { responses });
  }

  beginTest(conceptId: string, phase: 'pretest' | 'posttest'): Promise<IssuedTest> {
    return this.request(
      'POST',
      `/learners/${this.learnerId}/concepts/${conceptId}/${phase}`,
    );
  }

  submitAnswers(testId: string, answers: Record<string, string>): Promise<SubmitResult> {
    return this.request('POST', `/learners/${this.learnerId}/tests/${testId}/answers`, {
      answers,
    });
  }

  content(conceptId: string): Promise<LessonContent> {
    return this.request('GET', `/learners/${this.learnerId}/concepts/${conceptId}/content`);
  }

  hint(testId: string, questionId: string): Promise<{ hint: string; remaining_budget: number }> {
    return this.request(
      'POST',
      `/learners/${this.learnerId}/tests/${testId}/questions/${questionId}/hint`,
    );
  }

  inbox(): Promise<{ messages: Message[] }> {
    return this.request('GET', `/learners/${this.learnerId}/inbox`);
  }

  markRead(messageId: string): Promise<Message> {
    return this.request('POST', `/learners/${this.learnerId}/inbox/${messageId}/read`);
  }
}
