// Typed client for the play service JSON API. This is the only place the
// frontend talks to the network; every view update is derived from a
// response returned here (the client holds no game logic of its own).

export interface TaskSummary {
  index: number;
  domain: string;
  difficulty: string;
  done: boolean;
  outcome: string | null;
  action_count: number | null;
}

export interface ActionItem {
  name: string;
  used: boolean;
}

export interface ObservationEntry {
  action: string;
  observation: string;
}

export interface CurrentTask {
  index: number;
  domain: string;
  difficulty: string;
  truths: string[];
  actions: ActionItem[];
  observations: ObservationEntry[];
  action_count: number;
}

export interface SessionView {
  session_id: string;
  participant_id: string;
  finished: boolean;
  tasks: TaskSummary[];
  total_actions: number;
  current?: CurrentTask;
}

export interface BookView {
  task_index: number;
  book: string;
  preamble: string;
}

export interface ActionResult {
  action: string;
  observation: string;
  action_count: number;
  task_index: number;
}

export interface Earnings {
  base: number;
  success_component: number;
  action_penalty: number;
  total: number;
}

export interface PredictResult {
  task_index: number;
  correct: boolean;
  outcome: string;
  finished: boolean;
  next_task_index: number | null;
  running_score: Earnings;
}

export interface Score {
  completed: boolean;
  tasks_done: number;
  success_rate: number;
  action_count: number;
  earnings: Earnings;
  low_quality: boolean | null;
}

/** Service-reported failure; `code` carries the server's error name verbatim. */
export class ApiError extends Error {
  constructor(
    readonly code: string,
    readonly detail: string,
    readonly status: number,
  ) {
    super(`${code}: ${detail}`);
    this.name = "ApiError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class PlayApi {
  constructor(
    private readonly baseUrl: string,
    private readonly token: string,
    private readonly fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers: {
        "Content-Type": "application/json",
        Authorization: `Bearer ${this.token}`,
      },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload: unknown = await response.json().catch(() => ({}));
    if (!response.ok) {
      const err = payload as { error?: string; detail?: string };
      throw new ApiError(
        err.error ?? `HTTP ${response.status}`,
        err.detail ?? "",
        response.status,
      );
    }
    return payload as T;
  }

  createSession(participantId: string, requestId?: string): Promise<SessionView> {
    return this.request("POST", "/sessions", {
      participant_id: participantId,
      request_id: requestId,
    });
  }

  getSession(sessionId: string): Promise<SessionView> {
    return this.request("GET", `/sessions/${sessionId}`);
  }

  getBook(sessionId: string): Promise<BookView> {
    return this.request("GET", `/sessions/${sessionId}/book`);
  }

  postAction(sessionId: string, action: string, requestId: string): Promise<ActionResult> {
    return this.request("POST", `/sessions/${sessionId}/action`, {
      action,
      request_id: requestId,
    });
  }

  postPredict(sessionId: string, truth: string, requestId: string): Promise<PredictResult> {
    return this.request("POST", `/sessions/${sessionId}/predict`, {
      truth,
      request_id: requestId,
    });
  }

  getScore(sessionId: string): Promise<Score> {
    return this.request("GET", `/sessions/${sessionId}/score`);
  }
}
