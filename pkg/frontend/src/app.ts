// App shell: connects the API client to the views. One primary view is
// mounted per session state; every mutation waits for the server before the
// view refreshes (no optimistic UI). Errors become dismissable notices.

import { ApiError, TutorApi, type IssuedTest } from './api.js';
import { primaryViewFor, testPhaseFor, type TestViewState } from './state.js';
import {
  renderDashboard,
  renderInbox,
  renderLesson,
  renderNotice,
  renderQuestionnaire,
  renderTest,
} from './views.js';

interface AppConfig {
  baseUrl: string;
  learnerId: string;
  token: string;
}

export class App {
  private api: TutorApi;
  private view: HTMLElement;
  private notices: HTMLElement;
  private profileDraft: Record<string, number> = {};
  private test: { issued: IssuedTest; view: TestViewState } | null = null;
  private showInbox = false;

  constructor(root: HTMLElement, config: AppConfig) {
    this.api = new TutorApi(config.baseUrl, config.token, config.learnerId);
    this.notices = document.createElement('div');
    this.notices.className = 'notices';
    this.view = document.createElement('main');
    this.view.id = 'view';
    const inboxToggle = document.createElement('button');
    inboxToggle.className = 'inbox-toggle';
    inboxToggle.textContent = 'Inbox';
    inboxToggle.addEventListener('click', () => {
      this.showInbox = !this.showInbox;
      void this.refresh();
    });
    root.append(this.notices, inboxToggle, this.view);
  }

  notify(message: string): void {
    const notice = renderNotice(message);
    notice.addEventListener('click', () => notice.remove());
    this.notices.appendChild(notice);
    setTimeout(() => notice.remove(), 6000);
  }

  private async guard<T>(work: () => Promise<T>): Promise<T | undefined> {
    try {
      return await work();
    } catch (error) {
      if (error instanceof ApiError) {
        this.notify(`${error.code}: ${error.message}`);
      } else {
        this.notify(String(error));
      }
      return undefined;
    }
  }

  async refresh(): Promise<void> {
    if (this.showInbox) {
      const inbox = await this.guard(() => this.api.inbox());
      if (inbox) {
        this.mount(
          renderInbox(inbox.messages, (id) => {
            void this.guard(() => this.api.markRead(id)).then(() => this.refresh());
          }),
        );
      }
      return;
    }

    const snapshot = await this.guard(() => this.api.state());
    if (!snapshot) return;
    const state = snapshot.state;

    switch (primaryViewFor(state)) {
      case 'questionnaire': {
        const instrument = await this.guard(() => this.api.instrument());
        if (!instrument) return;
        this.mount(
          renderQuestionnaire(instrument, this.profileDraft, {
            onAnswer: (itemId, value) => {
              this.profileDraft[itemId] = value;
              void this.refresh();
            },
            onSubmit: () => {
              void this.guard(() => this.api.submitProfile(this.profileDraft)).then(
                () => this.refresh(),
              );
            },
          }),
        );
        break;
      }
      case 'test': {
        const phase = testPhaseFor(state)!;
        const concept = state.concept!;
        if (
          !this.test ||
          this.test.view.concept !== concept ||
          this.test.view.phase !== phase
        ) {
          const issued = await this.guard(() => this.api.beginTest(concept, phase));
          if (!issued) return;
          this.test = {
            issued,
            view: {
              testId: issued.test_id,
              concept,
              phase,
              index: 0,
              answers: {},
              hintBudget: issued.hint_budget,
              hints: {},
            },
          };
        }
        this.mountTest();
        break;
      }
      case 'lesson': {
        const content = await this.guard(() => this.api.content(state.concept!));
        if (!content) return;
        this.mount(
          renderLesson(content, {
            onNavigateConcept: (target) => {
              // The engine serves content for the active concept only; a
              // denied hop surfaces as a notice with the server's reason.
              void this.api
                .content(target)
                .then(() => this.refresh())
                .catch((error) =>
                  this.notify(
                    error instanceof ApiError
                      ? `Not yet available: ${error.message}`
                      : String(error),
                  ),
                );
            },
            onStartPosttest: () => {
              void this.guard(() => this.api.beginTest(state.concept!, 'posttest')).then(
                (issued) => {
                  if (issued) {
                    this.test = {
                      issued,
                      view: {
                        testId: issued.test_id,
                        concept: state.concept!,
                        phase: 'posttest',
                        index: 0,
                        answers: {},
                        hintBudget: issued.hint_budget,
                        hints: {},
                      },
                    };
                  }
                  return this.refresh();
                },
              );
            },
          }),
        );
        break;
      }
      case 'dashboard': {
        this.mount(renderDashboard(snapshot.progress, state.stage === 'CourseComplete'));
        break;
      }
    }
  }

  private mountTest(): void {
    if (!this.test) return;
    const { issued, view } = this.test;
    this.mount(
      renderTest(issued, view, {
        onAnswer: (questionId, choiceId) => {
          view.answers[questionId] = choiceId;
          this.mountTest();
        },
        onNavigate: (delta) => {
          view.index = Math.min(
            issued.questions.length - 1,
            Math.max(0, view.index + delta),
          );
          this.mountTest();
        },
        onHint: (questionId) => {
          void this.api
            .hint(view.testId, questionId)
            .then((result) => {
              view.hintBudget = result.remaining_budget;
              (view.hints[questionId] ??= []).push(result.hint);
              this.mountTest();
            })
            .catch((error) => {
              if (error instanceof ApiError && error.status === 409) {
                view.hintBudget = 0; // exhausted: disable the control
                this.mountTest();
              }
              this.notify(error instanceof ApiError ? error.message : String(error));
            });
        },
        onSubmit: () => {
          void this.guard(() =>
            this.api.submitAnswers(view.testId, view.answers),
          ).then((result) => {
            if (result) {
              this.test = null;
              this.notify(
                `Scored ${result.report.raw_score.toFixed(1)} (${result.report.band})`,
              );
            }
            return this.refresh();
          });
        },
      }),
    );
  }

  private mount(element: HTMLElement): void {
    this.view.replaceChildren(element);
  }
}

export function boot(): void {
  const root = document.getElementById('app');
  if (!root) return;
  const params = new URLSearchParams(window.location.search);
  const stored = {
    baseUrl: params.get('api') ?? localStorage.getItem('adaptutor.api') ?? 'http://127.0.0.1:8000',
    learnerId: params.get('learner') ?? localStorage.getItem('adaptutor.learner') ?? '',
    token: params.get('token') ?? localStorage.getItem('adaptutor.token') ?? '',
  };

  if (!stored.learnerId || !stored.token) {
    const form = document.createElement('form');
    form.className = 'connect';
    form.innerHTML = `
      <h2>Connect to your tutor</h2>
      <label>Service URL <input name="api" value="${stored.baseUrl}"></label>
      <label>Learner id <input name="learner" value="${stored.learnerId}"></label>
      <label>Token <input name="token" value=""></label>
      <button type="submit">Connect</button>`;
    form.addEventListener('submit', (event) => {
      event.preventDefault();
      const data = new FormData(form);
      localStorage.setItem('adaptutor.api', String(data.get('api')));
      localStorage.setItem('adaptutor.learner', String(data.get('learner')));
      localStorage.setItem('adaptutor.token', String(data.get('token')));
      window.location.search = '';
    });
    root.replaceChildren(form);
    return;
  }

  const app = new App(root, stored);
  void app.refresh();
}

if (typeof document !== 'undefined' && document.getElementById('app')) {
  boot();
}
