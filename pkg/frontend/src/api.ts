// Thin typed client for the experiment service JSON API.

export interface ApiFailure {
  status: number;
  code: string;
  message: string;
}

export class ApiError extends Error {
  status: number;
  code: string;

  constructor(failure: ApiFailure) {
    super(failure.message);
    this.status = failure.status;
    this.code = failure.code;
  }
}

export interface ExperimentMeta {
  id: string;
  lead_sentence: string;
  total: number;
}

export interface SessionProgress {
  session_id: string;
  experiment_id: string;
  total: number;
  next_position: number;
  consent_given: boolean;
  demographics_submitted: boolean;
  answered_positions: number[];
  done: boolean;
}

export type AudioResult =
  | { kind: "audio"; blob: Blob; recordingId: string | null }
  | { kind: "already-played" };

export class ExperimentApi {
  constructor(private baseUrl: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await fetch(this.baseUrl + path, init);
    if (!resp.ok) {
      throw new ApiError(await parseFailure(resp));
    }
    return (await resp.json()) as T;
  }

  private post<T>(path: string, body?: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body ?? {}),
    });
  }

  experimentMeta(experimentId: string): Promise<ExperimentMeta> {
    return this.request(`/api/experiments/${encodeURIComponent(experimentId)}`);
  }

  createSession(experimentId: string): Promise<{ session_id: string; total: number }> {
    return this.post(`/api/experiments/${encodeURIComponent(experimentId)}/sessions`);
  }

  progress(sessionId: string): Promise<SessionProgress> {
    return this.request(`/api/sessions/${encodeURIComponent(sessionId)}`);
  }

  giveConsent(sessionId: string): Promise<SessionProgress> {
    return this.post(`/api/sessions/${encodeURIComponent(sessionId)}/consent`);
  }

  submitDemographics(
    sessionId: string,
    fields: Record<string, string>
  ): Promise<SessionProgress> {
    return this.post(`/api/sessions/${encodeURIComponent(sessionId)}/demographics`, fields);
  }

  /** Fetch one trial's audio; the server delivers each position exactly once. */
  async fetchAudio(sessionId: string, position: number): Promise<AudioResult> {
    const resp = await fetch(
      `${this.baseUrl}/api/sessions/${encodeURIComponent(sessionId)}/recordings/${position}/audio`
    );
    if (resp.status === 409) {
      return { kind: "already-played" };
    }
    if (!resp.ok) {
      throw new ApiError(await parseFailure(resp));
    }
    return {
      kind: "audio",
      blob: await resp.blob(),
      recordingId: resp.headers.get("x-recording-id"),
    };
  }

  submitAnswer(
    sessionId: string,
    position: number,
    text: string
  ): Promise<{ recording_id: string; normalized_plate: string }> {
    return this.post(
      `/api/sessions/${encodeURIComponent(sessionId)}/recordings/${position}/answer`,
      { text }
    );
  }
}

async function parseFailure(resp: Response): Promise<ApiFailure> {
  try {
    const body = (await resp.json()) as { code?: string; message?: string };
    return {
      status: resp.status,
      code: body.code ?? "error",
      message: body.message ?? resp.statusText,
    };
  } catch {
    return { status: resp.status, code: "error", message: resp.statusText };
  }
}
