// Session state machine for the participant flow. Phases only move forward:
// consent -> demographics -> trial -> done.

export type Phase = "consent" | "demographics" | "trial" | "done";

const PHASE_ORDER: Phase[] = ["consent", "demographics", "trial", "done"];

export class UiSessionState {
  readonly sessionId: string;
  readonly total: number;
  phase: Phase = "consent";
  position = 0;
  answerDraft = "";

  constructor(sessionId: string, total: number) {
    if (total < 0) {
      throw new Error("total must be non-negative");
    }
    this.sessionId = sessionId;
    this.total = total;
  }

  advanceTo(next: Phase): void {
    if (PHASE_ORDER.indexOf(next) < PHASE_ORDER.indexOf(this.phase)) {
      throw new Error(`cannot move backwards from ${this.phase} to ${next}`);
    }
    this.phase = next;
  }

  /** Jump to a trial position (used when resuming a session). */
  resumeAt(position: number): void {
    if (position < 0 || position > this.total) {
      throw new Error(`position ${position} out of range 0..${this.total}`);
    }
    this.advanceTo(position >= this.total ? "done" : "trial");
    this.position = Math.min(position, this.total);
  }

  /** Advance past a submitted trial; flips to done after the last one. */
  completeTrial(): void {
    if (this.phase !== "trial") {
      throw new Error(`no trial in progress during ${this.phase}`);
    }
    this.position += 1;
    this.answerDraft = "";
    if (this.position >= this.total) {
      this.advanceTo("done");
    }
  }

  get completionCode(): string {
    return this.sessionId.replace(/[^a-zA-Z0-9]/g, "").slice(0, 8).toUpperCase();
  }
}

/** Strip everything but letters and digits (the answer field accepts only these). */
export function sanitizeAnswer(raw: string): string {
  return raw.replace(/[^a-zA-Z0-9]/g, "");
}
