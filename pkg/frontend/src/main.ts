/**
 * DOM wiring for the annotation page: run picker, task card with slider
 * (step 0.05) and 0/1 hotkeys, per-bin progress, completion screen.
 */

import { BinProgress, HttpApiClient, TaskView } from './api.js';
import { AnnotationSession, SCORE_MAX, SCORE_MIN, SCORE_STEP } from './session.js';

const api = new HttpApiClient();

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const runSelect = el<HTMLSelectElement>('run-select');
const annotatorInput = el<HTMLInputElement>('annotator-id');
const startButton = el<HTMLButtonElement>('start');
const setupCard = el<HTMLDivElement>('setup');
const taskCard = el<HTMLDivElement>('task-card');
const doneCard = el<HTMLDivElement>('done-card');
const errorBox = el<HTMLDivElement>('error-box');
const tokensView = el<HTMLDivElement>('tokens');
const binView = el<HTMLDivElement>('bin-info');
const slider = el<HTMLInputElement>('score');
const scoreLabel = el<HTMLSpanElement>('score-label');
const submitButton = el<HTMLButtonElement>('submit');
const progressText = el<HTMLDivElement>('progress-text');
const binProgressList = el<HTMLUListElement>('bin-progress');

slider.min = String(SCORE_MIN);
slider.max = String(SCORE_MAX);
slider.step = String(SCORE_STEP);

let session: AnnotationSession | null = null;

async function populateRuns(): Promise<void> {
  const runs = await api.runs();
  runSelect.innerHTML = '';
  for (const run of runs) {
    const option = document.createElement('option');
    option.value = run.run_id;
    option.textContent = `${run.run_id} (${run.tasks} tasks)`;
    runSelect.appendChild(option);
  }
  startButton.disabled = runs.length === 0;
}

function renderTask(task: TaskView): void {
  tokensView.textContent = task.display;
  if (task.bin_label !== undefined) {
    const z = task.z !== undefined ? `  z = ${task.z}` : '';
    binView.textContent = `bin ${task.bin_label}${z}`;
    binView.hidden = false;
  } else {
    binView.hidden = true; // blind mode
  }
  progressText.textContent =
    `${task.progress.done} / ${task.progress.total} tasks scored`;
}

function renderBinProgress(byBin: Record<string, BinProgress>): void {
  binProgressList.innerHTML = '';
  for (const [bin, p] of Object.entries(byBin)) {
    const item = document.createElement('li');
    item.textContent = `bin ${bin}: ${p.done}/${p.total} (quota ${p.quota})`;
    binProgressList.appendChild(item);
  }
}

function showError(message: string | null): void {
  errorBox.hidden = message === null;
  errorBox.textContent = message ?? '';
}

async function refresh(): Promise<void> {
  if (!session) return;
  const view = session.view();
  slider.value = String(session.control.value);
  scoreLabel.textContent = session.control.value.toFixed(2);
  showError(view.error);
  submitButton.textContent = view.phase === 'retrying' ? 'Retry' : 'Submit';
  taskCard.hidden = view.task === null;
  doneCard.hidden = view.phase !== 'done';
  if (view.task) {
    renderTask(view.task);
    renderBinProgress(await api.progress(view.task.run_id));
  }
}

startButton.addEventListener('click', async () => {
  const run = runSelect.value;
  const annotator = annotatorInput.value.trim() || 'anonymous';
  session = new AnnotationSession(api, run, annotator);
  setupCard.hidden = true;
  await session.start();
  await refresh();
});

slider.addEventListener('input', () => {
  if (!session) return;
  session.setScore(Number(slider.value));
  scoreLabel.textContent = session.control.value.toFixed(2);
});

submitButton.addEventListener('click', async () => {
  if (!session) return;
  await session.submitCurrent();
  await refresh();
});

document.addEventListener('keydown', async (event) => {
  if (!session) return;
  // don't steal digits typed into text fields (the slider is fine)
  if (event.target instanceof HTMLInputElement && event.target.type !== 'range') {
    return;
  }
  if (event.key === '0' || event.key === '1') {
    event.preventDefault();
    await session.hotkey(event.key);
    await refresh();
  }
});

populateRuns().catch((err) => showError(String(err)));
