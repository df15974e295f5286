/** Thin typed client for the explanation service; no interpretation happens here. */

import type {
  ExplainRequest,
  ExplanationJson,
  ModelInfo,
  SessionView,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ServiceError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

export class ServiceClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(
    path: string,
    body?: unknown,
    signal?: AbortSignal,
  ): Promise<T> {
    const init: RequestInit = { signal };
    if (body !== undefined) {
      init.method = "POST";
      init.headers = { "Content-Type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      let detail = `${response.status}`;
      try {
        const doc = await response.json();
        if (doc && typeof doc.error === "string") detail = doc.error;
      } catch {
        /* non-JSON error body; keep the status text */
      }
      throw new ServiceError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  health(): Promise<{ status: string }> {
    return this.request("/health");
  }

  model(): Promise<ModelInfo> {
    return this.request("/model");
  }

  predict(x: number[], mode?: string): Promise<{ y: number[] }> {
    return this.request("/predict", { x, mode });
  }

  explain(body: ExplainRequest, signal?: AbortSignal): Promise<ExplanationJson> {
    return this.request("/explain", body, signal);
  }

  openSession(theta?: number, thetaDot?: number): Promise<SessionView> {
    return this.request("/session", {
      env: "pendulum",
      theta: theta ?? null,
      theta_dot: thetaDot ?? null,
    });
  }

  step(sessionId: string, torque: number | null, auto: boolean): Promise<SessionView> {
    return this.request(`/session/${sessionId}/step`, { torque, auto });
  }

  setState(sessionId: string, theta: number, thetaDot: number): Promise<SessionView> {
    return this.request(`/session/${sessionId}/set_state`, {
      theta,
      theta_dot: thetaDot,
    });
  }
}
