// DOM render functions, one per primary view. Each returns a detached
// element the app mounts into #view; no view writes outside its element.

import type {
  ConceptProgress,
  Instrument,
  IssuedTest,
  LessonContent,
  Message,
} from './api.js';
import { allAnswered, isBandLabel, type TestViewState } from './state.js';

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export interface QuestionnaireHandlers {
  onAnswer(itemId: string, value: number): void;
  onSubmit(): void;
}

export function renderQuestionnaire(
  instrument: Instrument,
  draft: Record<string, number>,
  handlers: QuestionnaireHandlers,
): HTMLElement {
  const root = el('section', 'view view-questionnaire');
  root.appendChild(el('h2', 'view-title', 'How do you learn best?'));
  const form = el('form');
  form.addEventListener('submit', (event) => event.preventDefault());

  for (const item of instrument.items) {
    const row = el('fieldset', 'item');
    row.dataset.item = item.id;
    row.appendChild(el('legend', 'prompt', item.prompt));
    const scale = el('div', 'likert');
    for (let v = instrument.scale_min; v <= instrument.scale_max; v++) {
      const label = el('label');
      const input = el('input');
      input.type = 'radio';
      input.name = item.id;
      input.value = String(v);
      input.checked = draft[item.id] === v;
      input.addEventListener('change', () => handlers.onAnswer(item.id, v));
      label.appendChild(input);
      label.appendChild(document.createTextNode(String(v)));
      scale.appendChild(label);
    }
    row.appendChild(scale);
    form.appendChild(row);
  }

  const submit = el('button', 'submit-profile', 'Start learning');
  submit.type = 'submit';
  submit.disabled = instrument.items.some((item) => draft[item.id] === undefined);
  submit.addEventListener('click', () => {
    if (!submit.disabled) handlers.onSubmit();
  });
  form.appendChild(submit);
  root.appendChild(form);
  return root;
}

export interface TestHandlers {
  onAnswer(questionId: string, choiceId: string): void;
  onHint(questionId: string): void;
  onNavigate(delta: number): void;
  onSubmit(): void;
}

export function renderTest(
  issued: IssuedTest,
  view: TestViewState,
  handlers: TestHandlers,
): HTMLElement {
  const root = el('section', 'view view-test');
  const question = issued.questions[view.index];
  root.appendChild(
    el('h2', 'view-title', `${issued.phase === 'pretest' ? 'Pre-test' : 'Post-test'}: ${issued.concept}`),
  );
  root.appendChild(
    el('div', 'progress', `Question ${view.index + 1} of ${issued.questions.length}`),
  );

  const card = el('article', 'question');
  card.dataset.question = question.id;
  card.appendChild(el('p', 'question-body', question.body));

  const choices = el('div', 'choices');
  for (const choice of question.choices) {
    const label = el('label', 'choice');
    const input = el('input');
    input.type = 'radio';
    input.name = question.id;
    input.value = choice.id;
    input.checked = view.answers[question.id] === choice.id;
    input.addEventListener('change', () => handlers.onAnswer(question.id, choice.id));
    label.appendChild(input);
    label.appendChild(document.createTextNode(choice.body));
    choices.appendChild(label);
  }
  card.appendChild(choices);

  const hints = view.hints[question.id] ?? [];
  if (hints.length) {
    const list = el('ul', 'hints');
    for (const hint of hints) list.appendChild(el('li', 'hint', hint));
    card.appendChild(list);
  }

  const hintButton = el('button', 'hint-button', `Hint (${view.hintBudget} left)`);
  hintButton.type = 'button';
  hintButton.disabled = view.hintBudget <= 0;
  hintButton.addEventListener('click', () => handlers.onHint(question.id));
  card.appendChild(hintButton);
  root.appendChild(card);

  const nav = el('div', 'test-nav');
  const back = el('button', 'nav-back', 'Back');
  back.type = 'button';
  back.disabled = view.index === 0;
  back.addEventListener('click', () => handlers.onNavigate(-1));
  nav.appendChild(back);

  if (view.index < issued.questions.length - 1) {
    const next = el('button', 'nav-next', 'Next');
    next.type = 'button';
    next.addEventListener('click', () => handlers.onNavigate(1));
    nav.appendChild(next);
  } else {
    const submit = el('button', 'submit-test', 'Submit answers');
    submit.type = 'button';
    submit.disabled = !allAnswered(view, issued.questions.map((q) => q.id));
    submit.addEventListener('click', () => handlers.onSubmit());
    nav.appendChild(submit);
  }
  root.appendChild(nav);
  return root;
}

export interface LessonHandlers {
  onNavigateConcept(target: string): void;
  onStartPosttest(): void;
}

export function renderLesson(content: LessonContent, handlers: LessonHandlers): HTMLElement {
  const root = el('section', 'view view-lesson');
  root.appendChild(el('h2', 'view-title', content.title));
  root.appendChild(el('div', 'variant-tag', `Presented for style ${content.variant_style}`));

  for (const block of content.blocks) {
    const wrapper = el('div', `block block-${block.kind}`);
    if (block.kind === 'image-ref') {
      wrapper.appendChild(el('p', 'media-ref', `[image: ${block.body}]`));
    } else if (block.kind === 'video-ref') {
      wrapper.appendChild(el('p', 'media-ref', `[video: ${block.body}]`));
    } else {
      wrapper.appendChild(el('p', 'block-body', block.body));
    }
    if (block.links.length) {
      const list = el('ul', 'links');
      for (const link of block.links) {
        const item = el('li');
        const anchor = el('a', `link link-${link.kind}`, link.target);
        anchor.href = link.href;
        if (link.kind === 'concept') {
          anchor.addEventListener('click', (event) => {
            event.preventDefault();
            handlers.onNavigateConcept(link.target);
          });
        } else {
          anchor.target = '_blank';
        }
        item.appendChild(anchor);
        list.appendChild(item);
      }
      wrapper.appendChild(list);
    }
    root.appendChild(wrapper);
  }

  const done = el('button', 'start-posttest', 'I am ready for the post-test');
  done.type = 'button';
  done.addEventListener('click', () => handlers.onStartPosttest());
  root.appendChild(done);
  return root;
}

export function renderDashboard(
  progress: ConceptProgress[],
  complete: boolean,
): HTMLElement {
  const root = el('section', 'view view-dashboard');
  root.appendChild(
    el('h2', 'view-title', complete ? 'Course complete' : 'Your progress'),
  );
  const list = el('ul', 'concepts');
  for (const row of progress) {
    const item = el('li', 'concept-row');
    item.appendChild(el('span', 'concept-title', row.title));
    const label = row.band ?? 'Not attempted';
    if (row.band !== null && !isBandLabel(row.band)) {
      throw new Error(`unknown band label from server: ${row.band}`);
    }
    const chip = el('span', `band-chip band-${(row.band ?? 'none').replace(' ', '-')}`, label);
    item.appendChild(chip);
    item.appendChild(el('span', 'attempts', `attempts: ${row.attempts}`));
    list.appendChild(item);
  }
  root.appendChild(list);
  return root;
}

export function renderInbox(
  messages: Message[],
  onRead: (messageId: string) => void,
): HTMLElement {
  const root = el('section', 'view view-inbox');
  root.appendChild(el('h2', 'view-title', 'Messages'));
  if (!messages.length) {
    root.appendChild(el('p', 'empty', 'No messages yet.'));
    return root;
  }
  const list = el('ul', 'messages');
  for (const message of messages) {
    const item = el('li', message.read ? 'message read' : 'message unread');
    item.dataset.message = message.id;
    item.appendChild(el('p', 'message-body', message.body));
    if (!message.read) {
      const mark = el('button', 'mark-read', 'Mark read');
      mark.type = 'button';
      mark.addEventListener('click', () => onRead(message.id));
      item.appendChild(mark);
    }
    list.appendChild(item);
  }
  root.appendChild(list);
  return root;
}

export function renderNotice(message: string): HTMLElement {
  const notice = el('div', 'notice', message);
  return notice;
}
