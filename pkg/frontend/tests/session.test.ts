import { describe, expect, it } from 'vitest';

import {
  ApiClient,
  ApiError,
  BinProgress,
  BinSummary,
  RunInfo,
  Submission,
  SubmitResult,
  TaskView,
} from '../src/api.js';
import {
  AnnotationSession,
  buildSubmission,
  clampScore,
  SCORE_STEP,
} from '../src/session.js';

function makeTask(id: string, bin = 0): TaskView {
  return {
    task_id: id,
    run_id: 'run',
    display: '1 2 3',
    tokens: [1, 2, 3],
    progress: { done: 0, total: 3 },
    bin,
    bin_label: `[${bin}, ${bin + 1})`,
    z: bin + 0.5,
  };
}

/** In-memory service double that records every accepted submission. */
class FakeApi implements ApiClient {
  accepted: Submission[] = [];
  failNextSubmits = 0;
  failStatus = 0; // 0 = network failure

  constructor(private queue: TaskView[]) {}

  async runs(): Promise<RunInfo[]> {
    return [{ run_id: 'run', tasks: this.queue.length }];
  }

  async nextTask(): Promise<TaskView | null> {
    return this.queue[this.accepted.length] ?? null;
  }

  async submit(submission: Submission): Promise<SubmitResult> {
    if (this.failNextSubmits > 0) {
      this.failNextSubmits -= 1;
      throw new ApiError(this.failStatus, 'injected failure');
    }
    this.accepted.push(submission);
    return { ...submission, ts: 'ts' };
  }

  async progress(): Promise<Record<string, BinProgress>> {
    return {};
  }

  async summary(): Promise<BinSummary[]> {
    return [];
  }
}

describe('clampScore', () => {
  it('clamps into [0, 1]', () => {
    expect(clampScore(-3)).toBe(0);
    expect(clampScore(2)).toBe(1);
  });

  it('snaps to the 0.05 control step without float drift', () => {
    expect(clampScore(0.333)).toBe(0.35);
    expect(clampScore(0.7000000001)).toBe(0.7);
    for (let tick = 0; tick <= 20; tick++) {
      const snapped = clampScore(tick * SCORE_STEP + 0.001);
      expect(Math.round(snapped / SCORE_STEP)).toBe(tick);
    }
  });
});

describe('submission payloads', () => {
  it('always equal the visible control state at submit time', async () => {
    const api = new FakeApi([makeTask('t1'), makeTask('t2')]);
    const session = new AnnotationSession(api, 'run', 'alice');
    await session.start();

    session.setScore(0.35);
    expect(buildSubmission(makeTask('t1'), 'alice', session.control).score)
      .toBe(session.control.value);
    await session.submitCurrent();
    expect(api.accepted[0]).toEqual({
      task_id: 't1',
      annotator_id: 'alice',
      score: 0.35,
    });

    // moving the slider after loading the next task changes the next
    // payload only
    session.setScore(0.9);
    await session.submitCurrent();
    expect(api.accepted[1]!.score).toBe(0.9);
  });

  it('hotkey submissions equal slider submissions', async () => {
    const viaHotkey = new FakeApi([makeTask('t1')]);
    const hotkeySession = new AnnotationSession(viaHotkey, 'run', 'a');
    await hotkeySession.start();
    await hotkeySession.hotkey('1');

    const viaSlider = new FakeApi([makeTask('t1')]);
    const sliderSession = new AnnotationSession(viaSlider, 'run', 'a');
    await sliderSession.start();
    sliderSession.setScore(1.0);
    await sliderSession.submitCurrent();

    expect(viaHotkey.accepted).toEqual(viaSlider.accepted);
    expect(viaHotkey.accepted[0]!.score).toBe(1.0);
  });

  it('hotkey 0 submits exactly 0', async () => {
    const api = new FakeApi([makeTask('t1')]);
    const session = new AnnotationSession(api, 'run', 'a');
    await session.start();
    await session.hotkey('0');
    expect(api.accepted[0]!.score).toBe(0);
  });

  it('ignores non-hotkey keys', async () => {
    const api = new FakeApi([makeTask('t1')]);
    const session = new AnnotationSession(api, 'run', 'a');
    await session.start();
    await session.hotkey('x');
    expect(api.accepted).toHaveLength(0);
    expect(session.view().phase).toBe('annotating');
  });
});

describe('session lifecycle', () => {
  it('shows the completion screen immediately for an empty run', async () => {
    const session = new AnnotationSession(new FakeApi([]), 'run', 'a');
    const view = await session.start();
    expect(view.phase).toBe('done');
    expect(view.task).toBeNull();
  });

  it('advances through tasks and finishes', async () => {
    const api = new FakeApi([makeTask('t1'), makeTask('t2')]);
    const session = new AnnotationSession(api, 'run', 'a');
    await session.start();
    await session.hotkey('1');
    expect(session.view().phase).toBe('annotating');
    const view = await session.hotkey('0');
    expect(view.phase).toBe('done');
    expect(view.submitted).toBe(2);
  });

  it('resets the control to 0.5 for each new task', async () => {
    const api = new FakeApi([makeTask('t1'), makeTask('t2')]);
    const session = new AnnotationSession(api, 'run', 'a');
    await session.start();
    session.setScore(1.0);
    await session.submitCurrent();
    expect(session.control.value).toBe(0.5);
  });
});

describe('failure handling', () => {
  it('queues at most one unacknowledged submission and retries it', async () => {
    const api = new FakeApi([makeTask('t1'), makeTask('t2')]);
    api.failNextSubmits = 2; // two transient failures, then success
    const session = new AnnotationSession(api, 'run', 'a');
    await session.start();
    session.setScore(0.6);

    let view = await session.submitCurrent();
    expect(view.phase).toBe('retrying');
    expect(session.unacknowledged).not.toBeNull();

    // a second submit while unacknowledged retries; it must not create a
    // second queued submission or change the payload
    session.setScore(0.1); // slider moves must NOT rewrite the queued payload
    view = await session.submitCurrent();
    expect(view.phase).toBe('retrying');
    expect(session.unacknowledged!.score).toBe(0.6);

    view = await session.retry();
    expect(view.phase).toBe('annotating');
    expect(session.unacknowledged).toBeNull();
    expect(api.accepted).toEqual([
      { task_id: 't1', annotator_id: 'a', score: 0.6 },
    ]);
  });

  it('surfaces 4xx submit failures with the task id', async () => {
    const api = new FakeApi([makeTask('t1')]);
    api.failNextSubmits = 1;
    api.failStatus = 404;
    const session = new AnnotationSession(api, 'run', 'a');
    await session.start();
    const view = await session.submitCurrent();
    expect(view.phase).toBe('error');
    expect(view.error).toContain('t1');
  });
});

describe('round trip to the hand-computed bin mean', () => {
  it('three scores through the session average to (0.2 + 0.5 + 1.0)/3', async () => {
    const tasks = [makeTask('t1', 4), makeTask('t2', 4), makeTask('t3', 4)];
    const api = new FakeApi(tasks);
    const session = new AnnotationSession(api, 'run', 'alice');
    await session.start();
    for (const score of [0.2, 0.5, 1.0]) {
      session.setScore(score);
      await session.submitCurrent();
    }
    expect(session.view().phase).toBe('done');
    const mean =
      api.accepted.reduce((acc, s) => acc + s.score, 0) / api.accepted.length;
    expect(mean).toBeCloseTo((0.2 + 0.5 + 1.0) / 3, 12);
  });
});
