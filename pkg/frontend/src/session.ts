/**
 * Annotation session state machine, kept free of DOM concerns so the
 * submit-equals-visible-state invariant is testable without a browser.
 *
 * Guarantees:
 *  - a submission payload is always built from the score control state at
 *    submit time (never recomputed or defaulted);
 *  - at most one unacknowledged submission is queued; a transient failure
 *    keeps it queued for retry and the session does not advance;
 *  - a 204 from the next-task endpoint ends the session (completion
 *    screen); a 4xx submit failure surfaces the task id.
 */

import { ApiClient, ApiError, Submission, TaskView } from './api.js';

export const SCORE_MIN = 0;
export const SCORE_MAX = 1;
export const SCORE_STEP = 0.05;

/** Clamp to [0, 1] and snap to the 0.05 control step. */
export function clampScore(value: number): number {
  const clamped = Math.min(SCORE_MAX, Math.max(SCORE_MIN, value));
  // snap via integer percent to dodge float drift (0.6, not 0.6000000000000001)
  return (Math.round(clamped / SCORE_STEP) * 5) / 100;
}

export interface ScoreControl {
  value: number;
}

export function buildSubmission(
  task: TaskView,
  annotatorId: string,
  control: ScoreControl,
): Submission {
  return {
    task_id: task.task_id,
    annotator_id: annotatorId,
    score: control.value,
  };
}

export type Phase = 'idle' | 'annotating' | 'retrying' | 'done' | 'error';

export interface SessionView {
  phase: Phase;
  task: TaskView | null;
  error: string | null;
  submitted: number;
}

export class AnnotationSession {
  readonly control: ScoreControl = { value: 0.5 };
  private task: TaskView | null = null;
  private pending: Submission | null = null;
  private phase: Phase = 'idle';
  private error: string | null = null;
  private submitted = 0;

  constructor(
    private readonly api: ApiClient,
    private readonly run: string,
    private readonly annotatorId: string,
  ) {}

  view(): SessionView {
    return {
      phase: this.phase,
      task: this.task,
      error: this.error,
      submitted: this.submitted,
    };
  }

  /** The unacknowledged submission, if any (length <= 1 by construction). */
  get unacknowledged(): Submission | null {
    return this.pending;
  }

  setScore(value: number): void {
    this.control.value = clampScore(value);
  }

  async start(): Promise<SessionView> {
    await this.loadNext();
    return this.view();
  }

  private async loadNext(): Promise<void> {
    this.error = null;
    const task = await this.api.nextTask(this.run, this.annotatorId);
    if (task === null) {
      this.task = null;
      this.phase = 'done';
      return;
    }
    this.task = task;
    this.control.value = 0.5;
    this.phase = 'annotating';
  }

  /** Submit exactly what the control shows; advance only on acknowledgment. */
  async submitCurrent(): Promise<SessionView> {
    if (this.pending !== null) {
      return this.retry();
    }
    if (this.task === null) return this.view();
    const submission = buildSubmission(this.task, this.annotatorId, this.control);
    await this.send(submission);
    return this.view();
  }

  /** Re-send the queued submission after a transient failure. */
  async retry(): Promise<SessionView> {
    if (this.pending === null) return this.view();
    const submission = this.pending;
    await this.send(submission);
    return this.view();
  }

  /** Hotkeys "0"/"1" move the visible control, then submit it. */
  async hotkey(key: string): Promise<SessionView> {
    if (this.phase !== 'annotating' && this.phase !== 'retrying') {
      return this.view();
    }
    if (key === '0') this.setScore(0);
    else if (key === '1') this.setScore(1);
    else return this.view();
    return this.submitCurrent();
  }

  private async send(submission: Submission): Promise<void> {
    try {
      await this.api.submit(submission);
    } catch (err) {
      if (err instanceof ApiError && err.transient) {
        this.pending = submission;
        this.phase = 'retrying';
        this.error = 'submission not acknowledged yet; will retry';
        return;
      }
      this.phase = 'error';
      this.error =
        err instanceof ApiError
          ? `task ${submission.task_id}: ${err.message}`
          : String(err);
      return;
    }
    this.pending = null;
    this.submitted += 1;
    await this.loadNext();
  }
}
