// Session controller: owns the API client, holds the latest server state,
// and re-renders the page from it. All mutations flow through submitMove,
// which serializes requests (one in flight per session), tags each user
// gesture with a fresh idempotency id, and reuses that id verbatim when
// the user retries after a transport failure. The view is only ever
// updated from a server response - nothing is optimistic.

import { ApiError, PlayApi } from "./api.js";
import type { PredictResult, Score, SessionView } from "./api.js";
import {
  renderActionMenu,
  renderBookPane,
  renderError,
  renderFinalScore,
  renderObservationFeed,
  renderTaskStrip,
  renderTruthMenu,
  renderVerdict,
} from "./render.js";

export type Move =
  | { kind: "action"; name: string }
  | { kind: "predict"; truth: string };

interface PendingRetry {
  move: Move;
  requestId: string;
}

export class SessionController {
  private view: SessionView | null = null;
  private book: string | null = null;
  private score: Score | null = null;
  private lastVerdict: PredictResult | null = null;
  private errorMessage: string | null = null;
  private pendingRetry: PendingRetry | null = null;
  private busy = false;
  private gestureCounter = 0;
  private readonly gesturePrefix = `ui-${Date.now().toString(36)}-${Math.floor(
    Math.random() * 1e9,
  ).toString(36)}`;

  constructor(
    private readonly api: PlayApi,
    private readonly root: Element,
  ) {}

  get sessionId(): string {
    if (!this.view) throw new Error("no session yet");
    return this.view.session_id;
  }

  get currentView(): SessionView | null {
    return this.view;
  }

  get displayedScore(): Score | null {
    return this.score;
  }

  nextRequestId(): string {
    this.gestureCounter += 1;
    return `${this.gesturePrefix}-${this.gestureCounter}`;
  }

  async start(participantId: string): Promise<void> {
    this.view = await this.api.createSession(participantId, this.nextRequestId());
    await this.syncBook();
    this.render();
  }

  async attach(sessionId: string): Promise<void> {
    this.view = await this.api.getSession(sessionId);
    await this.syncBook();
    if (this.view.finished) this.score = await this.api.getScore(sessionId);
    this.render();
  }

  private async syncBook(): Promise<void> {
    this.book = null;
    if (this.view && !this.view.finished) {
      const book = await this.api.getBook(this.view.session_id);
      this.book = book.book;
    }
  }

  async refresh(): Promise<void> {
    if (!this.view) return;
    this.view = await this.api.getSession(this.view.session_id);
    await this.syncBook();
    if (this.view.finished && !this.score) {
      this.score = await this.api.getScore(this.view.session_id);
    }
    this.render();
  }

  takeAction(name: string): Promise<boolean> {
    return this.submitMove({ kind: "action", name });
  }

  predict(truth: string): Promise<boolean> {
    return this.submitMove({ kind: "predict", truth });
  }

  /**
   * Submit one move. Returns false when the gesture was dropped because a
   * request is already in flight (this is what debounces double-clicks:
   * the second click never leaves the client).
   */
  async submitMove(move: Move, requestId?: string): Promise<boolean> {
    if (this.busy || !this.view || this.view.finished) return false;
    const id = requestId ?? this.nextRequestId();
    this.busy = true;
    this.errorMessage = null;
    this.render();
    try {
      if (move.kind === "action") {
        await this.api.postAction(this.view.session_id, move.name, id);
        // canonical state comes from the server, not from local bookkeeping
        this.view = await this.api.getSession(this.view.session_id);
      } else {
        const verdict = await this.api.postPredict(this.view.session_id, move.truth, id);
        this.lastVerdict = verdict;
        this.view = await this.api.getSession(this.view.session_id);
        await this.syncBook();
        if (verdict.finished) {
          this.score = await this.api.getScore(this.view.session_id);
        }
      }
      this.pendingRetry = null;
    } catch (error) {
      if (error instanceof ApiError) {
        // surface the service error verbatim; no retry for logical errors
        this.errorMessage = error.code + (error.detail ? `: ${error.detail}` : "");
        this.pendingRetry = null;
      } else {
        this.errorMessage = `transport failure: ${String(error)}`;
        this.pendingRetry = { move, requestId: id };
      }
    } finally {
      this.busy = false;
    }
    this.render();
    return true;
  }

  /** Re-send the failed move with its original idempotency id. */
  retryPending(): Promise<boolean> {
    const pending = this.pendingRetry;
    if (!pending) return Promise.resolve(false);
    return this.submitMove(pending.move, pending.requestId);
  }

  render(): void {
    if (!this.view) return;
    const view = this.view;
    const left = renderBookPane(this.book, view);
    const rightParts: string[] = [renderTaskStrip(view)];
    if (this.errorMessage) {
      rightParts.push(renderError(this.errorMessage, this.pendingRetry !== null));
    }
    if (view.finished && this.score) {
      rightParts.push(renderFinalScore(this.score));
    } else {
      if (this.lastVerdict) {
        rightParts.push(renderVerdict(this.lastVerdict.outcome, this.lastVerdict.correct));
      }
      rightParts.push(renderActionMenu(view, this.busy));
      rightParts.push(renderObservationFeed(view));
      rightParts.push(renderTruthMenu(view, this.busy));
    }
    this.root.innerHTML =
      `<div class="pane pane-book">${left}</div>` +
      `<div class="pane pane-play">${rightParts.join("\n")}</div>`;
    this.bindHandlers();
  }

  private bindHandlers(): void {
    for (const button of this.root.querySelectorAll<HTMLButtonElement>(".action-btn")) {
      button.addEventListener("click", () => {
        void this.takeAction(button.dataset.action ?? "");
      });
    }
    for (const button of this.root.querySelectorAll<HTMLButtonElement>(".truth-btn")) {
      button.addEventListener("click", () => {
        void this.predict(button.dataset.truth ?? "");
      });
    }
    const retry = this.root.querySelector<HTMLButtonElement>(".retry-btn");
    if (retry) {
      retry.addEventListener("click", () => {
        void this.retryPending();
      });
    }
  }
}
