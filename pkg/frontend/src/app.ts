// Participant flow: consent, demographics, then one-play trials.

import { ApiError, ExperimentApi, ExperimentMeta } from "./api.js";
import { AudioPlayer } from "./player.js";
import { UiSessionState, sanitizeAnswer } from "./state.js";

const DEMOGRAPHIC_FIELDS: Array<{ key: string; label: string }> = [
  { key: "age_range", label: "Age range" },
  { key: "gender", label: "Gender" },
  { key: "hearing_difficulty", label: "Hearing difficulty (yes/no)" },
  { key: "native_language", label: "Native language" },
  { key: "listening_device", label: "Headphones or speakers" },
];

interface TrialFlags {
  playRequested: boolean;
  playbackEnded: boolean;
}

export class ListenerApp {
  state: UiSessionState | null = null;
  meta: ExperimentMeta | null = null;
  /** Last in-flight user action; tests await this after clicking. */
  lastAction: Promise<void> = Promise.resolve();

  private trial: TrialFlags = { playRequested: false, playbackEnded: false };

  constructor(
    private root: HTMLElement,
    private api: ExperimentApi,
    private player: AudioPlayer,
    private storage: Pick<Storage, "getItem" | "setItem">
  ) {}

  async start(experimentId: string): Promise<void> {
    this.meta = await this.api.experimentMeta(experimentId);
    const storageKey = `mcvlab-session-${experimentId}`;
    let sessionId = this.storage.getItem(storageKey);
    let progress = null;
    if (sessionId) {
      try {
        progress = await this.api.progress(sessionId);
      } catch {
        sessionId = null; // stale session; start fresh
      }
    }
    if (!sessionId || !progress) {
      const created = await this.api.createSession(experimentId);
      sessionId = created.session_id;
      this.storage.setItem(storageKey, sessionId);
      progress = await this.api.progress(sessionId);
    }

    this.state = new UiSessionState(sessionId, progress.total);
    if (progress.consent_given) {
      this.state.advanceTo("demographics");
    }
    if (progress.demographics_submitted) {
      const position = firstUnanswered(progress.answered_positions, progress.total);
      this.state.resumeAt(position);
      // A played-but-unanswered recording cannot be replayed; go straight to
      // the answer box.
      if (this.state.phase === "trial" && position < progress.next_position) {
        this.trial = { playRequested: true, playbackEnded: true };
      }
    }
    this.render();
  }

  // -- actions ---------------------------------------------------------------

  giveConsent(): Promise<void> {
    return this.act(async () => {
      await this.api.giveConsent(this.mustState().sessionId);
      this.mustState().advanceTo("demographics");
    });
  }

  submitDemographics(fields: Record<string, string>): Promise<void> {
    return this.act(async () => {
      const nonEmpty: Record<string, string> = {};
      for (const [key, value] of Object.entries(fields)) {
        if (value.trim()) {
          nonEmpty[key] = value.trim();
        }
      }
      await this.api.submitDemographics(this.mustState().sessionId, nonEmpty);
      const state = this.mustState();
      state.advanceTo(state.total > 0 ? "trial" : "done");
    });
  }

  playCurrent(): Promise<void> {
    return this.act(async () => {
      const state = this.mustState();
      if (this.trial.playRequested) {
        return; // client-side one-play guard; never re-request audio
      }
      this.trial.playRequested = true;
      this.render();
      const result = await this.api.fetchAudio(state.sessionId, state.position);
      if (result.kind === "audio") {
        await this.player.play(result.blob);
      }
      // On 409 the recording was already delivered once; allow answering.
      this.trial.playbackEnded = true;
    });
  }

  submitAnswer(): Promise<void> {
    return this.act(async () => {
      const state = this.mustState();
      if (!this.trial.playbackEnded) {
        throw new Error("listen to the recording before answering");
      }
      await this.api.submitAnswer(state.sessionId, state.position, state.answerDraft);
      state.completeTrial();
      this.trial = { playRequested: false, playbackEnded: false };
    });
  }

  private act(fn: () => Promise<void>): Promise<void> {
    const action = fn()
      .catch((err) => this.showError(err))
      .then(() => this.render());
    this.lastAction = action;
    return action;
  }

  private mustState(): UiSessionState {
    if (!this.state) {
      throw new Error("app not started");
    }
    return this.state;
  }

  private showError(err: unknown): void {
    const message =
      err instanceof ApiError ? `${err.message} (${err.code})` : String(err);
    const box = this.root.querySelector<HTMLElement>("#error-box");
    if (box) {
      box.textContent = message;
      box.hidden = false;
    }
  }

  // -- rendering ---------------------------------------------------------------

  render(): void {
    const state = this.mustState();
    switch (state.phase) {
      case "consent":
        this.renderConsent();
        break;
      case "demographics":
        this.renderDemographics();
        break;
      case "trial":
        this.renderTrial();
        break;
      case "done":
        this.renderDone();
        break;
    }
  }

  private shell(title: string, body: string): void {
    this.root.innerHTML = `
      <main class="screen">
        <h1>Listening study</h1>
        <h2>${escapeHtml(title)}</h2>
        <div id="error-box" class="error" hidden></div>
        ${body}
      </main>`;
  }

  private renderConsent(): void {
    this.shell(
      "Consent",
      `
      <p>You will hear a series of short radio-style recordings, each spoken
      once. After each one, type the license plate you heard. Your answers and
      the optional background details you provide are stored for research
      analysis. Close this page at any time to stop participating.</p>
      <label class="consent-row">
        <input type="checkbox" id="consent-check" /> I have read the above and
        agree to take part.
      </label>
      <button id="consent-button" disabled>Continue</button>`
    );
    const check = this.query<HTMLInputElement>("#consent-check");
    const button = this.query<HTMLButtonElement>("#consent-button");
    check.addEventListener("change", () => {
      button.disabled = !check.checked;
    });
    button.addEventListener("click", () => void this.giveConsent());
  }

  private renderDemographics(): void {
    const rows = DEMOGRAPHIC_FIELDS.map(
      ({ key, label }) => `
      <label class="field-row">${escapeHtml(label)}
        <input type="text" data-demo-key="${key}" />
      </label>`
    ).join("");
    this.shell(
      "About you",
      `
      <p>These optional details help interpret the results.</p>
      ${rows}
      <button id="demographics-button">Start the trials</button>`
    );
    this.query<HTMLButtonElement>("#demographics-button").addEventListener("click", () => {
      const fields: Record<string, string> = {};
      this.root.querySelectorAll<HTMLInputElement>("input[data-demo-key]").forEach((input) => {
        fields[input.dataset.demoKey as string] = input.value;
      });
      void this.submitDemographics(fields);
    });
  }

  private renderTrial(): void {
    const state = this.mustState();
    const { playRequested, playbackEnded } = this.trial;
    this.shell(
      `Recording ${state.position + 1} of ${state.total}`,
      `
      <p>Press play, listen carefully (each recording plays only once), then
      type the license plate you heard.</p>
      <button id="play-button" ${playRequested ? "disabled" : ""}>
        ${playRequested ? "Played" : "Play recording"}
      </button>
      <label class="field-row">Your answer
        <input type="text" id="answer-input" autocomplete="off"
               value="${escapeHtml(state.answerDraft)}" />
      </label>
      <button id="submit-button" ${playbackEnded ? "" : "disabled"}>Submit answer</button>`
    );
    const play = this.query<HTMLButtonElement>("#play-button");
    const input = this.query<HTMLInputElement>("#answer-input");
    const submit = this.query<HTMLButtonElement>("#submit-button");

    play.addEventListener("click", () => void this.playCurrent());
    input.addEventListener("input", () => {
      const clean = sanitizeAnswer(input.value);
      if (clean !== input.value) {
        input.value = clean;
      }
      state.answerDraft = clean;
    });
    submit.addEventListener("click", () => void this.submitAnswer());
  }

  private renderDone(): void {
    const state = this.mustState();
    this.shell(
      "All done",
      `
      <p>Thank you! All ${state.total} recordings are complete.</p>
      <p>Your completion code:</p>
      <p class="code" id="completion-code">${escapeHtml(state.completionCode)}</p>`
    );
  }

  private query<T extends Element>(selector: string): T {
    const el = this.root.querySelector<T>(selector);
    if (!el) {
      throw new Error(`missing element: ${selector}`);
    }
    return el;
  }
}

function firstUnanswered(answered: number[], total: number): number {
  const done = new Set(answered);
  let position = 0;
  while (position < total && done.has(position)) {
    position += 1;
  }
  return position;
}

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}
