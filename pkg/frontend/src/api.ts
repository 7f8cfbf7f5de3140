/**
 * Typed client for the entropool session API.
 *
 * Every mutation quotes the revision it last saw; the server answers 409
 * when that is stale, which surfaces here as StaleRevisionError so callers
 * can refetch and decide -- the client never retries a mutation silently.
 */

import {
  ApiError,
  FrontierRequest,
  FrontierResponse,
  HistogramResponse,
  InfeasibleViewsError,
  SessionCreated,
  SessionInfo,
  SolveResponse,
  StaleRevisionError,
  StatisticsResponse,
  ViewJson,
} from './types.js';

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? undefined : { 'content-type': 'application/json' },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (response.status === 409) {
      const payload = await response.json().catch(() => ({ detail: 'revision conflict' }));
      throw new StaleRevisionError(String(payload.detail ?? 'revision conflict'));
    }
    if (response.status === 422) {
      const payload = await response.json().catch(() => ({ detail: 'infeasible' }));
      throw new InfeasibleViewsError(String(payload.detail ?? 'infeasible'));
    }
    if (!response.ok) {
      const text = await response.text().catch(() => '');
      throw new ApiError(response.status, text);
    }
    return (await response.json()) as T;
  }

  health(): Promise<{ status: string }> {
    return this.request('GET', '/health');
  }

  createSession(factorNames: string[], data: number[][], prior?: number[]): Promise<SessionCreated> {
    return this.request('POST', '/sessions', {
      factor_names: factorNames,
      data,
      prior: prior ?? null,
    });
  }

  describe(sessionId: string): Promise<SessionInfo> {
    return this.request('GET', `/sessions/${sessionId}`);
  }

  putViews(
    sessionId: string,
    userId: string,
    revision: number,
    overallConfidence: number,
    views: ViewJson[],
  ): Promise<{ revision: number }> {
    return this.request('PUT', `/sessions/${sessionId}/views/${userId}`, {
      revision,
      overall_confidence: overallConfidence,
      views,
    });
  }

  solve(sessionId: string, revision: number): Promise<SolveResponse> {
    return this.request('POST', `/sessions/${sessionId}/solve`, { revision });
  }

  statistics(sessionId: string): Promise<StatisticsResponse> {
    return this.request('GET', `/sessions/${sessionId}/statistics`);
  }

  histogram(sessionId: string, column: string, bins = 50): Promise<HistogramResponse> {
    const params = new URLSearchParams({ column, bins: String(bins) });
    return this.request('GET', `/sessions/${sessionId}/histogram?${params}`);
  }

  computeFrontier(
    sessionId: string,
    revision: number,
    request: FrontierRequest,
  ): Promise<{ revision: number }> {
    return this.request('POST', `/sessions/${sessionId}/frontier`, {
      revision,
      ...request,
    });
  }

  frontier(sessionId: string): Promise<FrontierResponse> {
    return this.request('GET', `/sessions/${sessionId}/frontier`);
  }
}
