// Thin client over the decision service REST endpoints.
import { parseSessionView, parseWhatIf, SessionView, WhatIf } from "./schema";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface ServiceError {
  code: string;
  message: string;
  status: number;
}

async function asJson(resp: Response): Promise<unknown> {
  const body = await resp.json().catch(() => ({}));
  if (!resp.ok) {
    const err = body as { code?: string; message?: string };
    throw {
      code: err.code ?? "http-error",
      message: err.message ?? `HTTP ${resp.status}`,
      status: resp.status,
    } satisfies ServiceError;
  }
  return body;
}

export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchFn: FetchLike = (...a) => fetch(...a),
  ) {}

  async createSession(config: Record<string, unknown>): Promise<SessionView> {
    const resp = await this.fetchFn(`${this.baseUrl}/sessions`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(config),
    });
    return parseSessionView(await asJson(resp));
  }

  async getSession(id: string): Promise<SessionView> {
    const resp = await this.fetchFn(`${this.baseUrl}/sessions/${id}`);
    return parseSessionView(await asJson(resp));
  }

  /** Accept the pending recommendation or override with a level 1..4. */
  async step(id: string, choice: "recommended" | number): Promise<SessionView> {
    const resp = await this.fetchFn(`${this.baseUrl}/sessions/${id}/step`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ action: choice }),
    });
    return parseSessionView(await asJson(resp));
  }

  async whatif(id: string): Promise<WhatIf> {
    const resp = await this.fetchFn(`${this.baseUrl}/sessions/${id}/whatif`);
    return parseWhatIf(await asJson(resp));
  }
}

export function stepBody(choice: "recommended" | number): string {
  return JSON.stringify({ action: choice });
}
