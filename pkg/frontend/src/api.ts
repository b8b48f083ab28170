/**
 * Typed client for the annotation service HTTP API.
 *
 * Endpoints consumed (and nothing else):
 *   GET  /api/runs
 *   GET  /api/tasks/next?annotator=ID&run=RID   (204 when none pending)
 *   POST /api/annotations
 *   GET  /api/progress?run=RID
 *   GET  /api/summary?run=RID
 */

export interface RunInfo {
  run_id: string;
  tasks: number;
}

export interface TaskView {
  task_id: string;
  run_id: string;
  display: string;
  tokens: number[];
  progress: { done: number; total: number };
  /** absent when the service runs in blind mode */
  bin?: number;
  bin_label?: string;
  z?: number;
}

export interface Submission {
  task_id: string;
  annotator_id: string;
  score: number;
}

export interface SubmitResult extends Submission {
  ts: string;
}

export interface BinProgress {
  done: number;
  total: number;
  quota: number;
}

export interface BinSummary {
  bin: number;
  bin_label: string;
  mean: number;
  std: number | null;
  n_tasks: number;
  n_records: number;
}

/** Non-2xx response; status 0 marks transport-level (retryable) failures. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = 'ApiError';
  }

  get transient(): boolean {
    return this.status === 0 || this.status >= 500;
  }
}

export interface ApiClient {
  runs(): Promise<RunInfo[]>;
  nextTask(run: string, annotator: string): Promise<TaskView | null>;
  submit(submission: Submission): Promise<SubmitResult>;
  progress(run: string): Promise<Record<string, BinProgress>>;
  summary(run: string): Promise<BinSummary[]>;
}

type FetchFn = typeof fetch;

export class HttpApiClient implements ApiClient {
  constructor(
    private readonly baseUrl: string = '',
    private readonly fetchFn: FetchFn = globalThis.fetch.bind(globalThis),
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    let response: Response;
    try {
      response = await this.fetchFn(this.baseUrl + path, init);
    } catch (err) {
      throw new ApiError(0, `network failure: ${String(err)}`);
    }
    if (!response.ok && response.status !== 204) {
      let detail = response.statusText;
      try {
        const body = await response.json();
        if (body && typeof body.detail === 'string') detail = body.detail;
      } catch {
        /* non-JSON error body; keep the status text */
      }
      throw new ApiError(response.status, detail);
    }
    return response;
  }

  async runs(): Promise<RunInfo[]> {
    return (await this.request('/api/runs')).json();
  }

  async nextTask(run: string, annotator: string): Promise<TaskView | null> {
    const query = new URLSearchParams({ annotator, run });
    const response = await this.request(`/api/tasks/next?${query}`);
    if (response.status === 204) return null;
    return response.json();
  }

  async submit(submission: Submission): Promise<SubmitResult> {
    const response = await this.request('/api/annotations', {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(submission),
    });
    return response.json();
  }

  async progress(run: string): Promise<Record<string, BinProgress>> {
    const query = new URLSearchParams({ run });
    return (await this.request(`/api/progress?${query}`)).json();
  }

  async summary(run: string): Promise<BinSummary[]> {
    const query = new URLSearchParams({ run });
    return (await this.request(`/api/summary?${query}`)).json();
  }
}
