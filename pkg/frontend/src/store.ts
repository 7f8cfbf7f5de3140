/**
 * Session state held by the workbench.
 *
 * Single source of truth rules: every number on screen comes from the last
 * API payload stored here, and every payload is stamped with the revision
 * it was computed at.  Mutations are funneled through one gate (at most a
 * single in-flight mutation); a 409 triggers a refetch of the session
 * descriptor and surfaces to the caller, never a silent overwrite.  There
 * is no optimistic state: between a mutating call and the refreshed
 * payloads the store reports `solving`.
 */

import { ApiClient } from './api.js';
import {
  FrontierRequest,
  FrontierResponse,
  HistogramResponse,
  SessionInfo,
  StaleRevisionError,
  StatisticsResponse,
  ViewJson,
} from './types.js';

export type Listener = () => void;

export class SessionStore {
  private revision = 0;
  private info: SessionInfo | null = null;
  private statistics: StatisticsResponse | null = null;
  private histograms = new Map<string, HistogramResponse>();
  private frontier: FrontierResponse | null = null;
  private mutationInFlight = false;
  private solving = false;
  private listeners = new Set<Listener>();
  private warning: string | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly sessionId: string,
  ) {}

  subscribe(listener: Listener): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  get currentRevision(): number {
    return this.revision;
  }

  get isSolving(): boolean {
    return this.solving;
  }

  get lastWarning(): string | null {
    return this.warning;
  }

  get sessionInfo(): SessionInfo | null {
    return this.info;
  }

  get stats(): StatisticsResponse | null {
    return this.statistics;
  }

  get frontierData(): FrontierResponse | null {
    return this.frontier;
  }

  histogramFor(column: string): HistogramResponse | null {
    return this.histograms.get(column) ?? null;
  }

  /** Drop any payload computed at an older revision than the store's. */
  private dropStale(): void {
    if (this.statistics && this.statistics.revision !== this.revision) {
      this.statistics = null;
    }
    for (const [column, payload] of this.histograms) {
      if (payload.revision !== this.revision) this.histograms.delete(column);
    }
    if (this.frontier && this.frontier.revision !== this.revision) {
      this.frontier = null;
    }
  }

  async refresh(): Promise<void> {
    this.info = await this.api.describe(this.sessionId);
    this.revision = this.info.revision;
    this.dropStale();
    this.notify();
  }

  async refreshStatistics(): Promise<StatisticsResponse> {
    const payload = await this.api.statistics(this.sessionId);
    this.statistics = payload;
    this.revision = Math.max(this.revision, payload.revision);
    this.notify();
    return payload;
  }

  async refreshHistogram(column: string, bins = 50): Promise<HistogramResponse> {
    const payload = await this.api.histogram(this.sessionId, column, bins);
    this.histograms.set(column, payload);
    this.notify();
    return payload;
  }

  async refreshFrontier(): Promise<FrontierResponse> {
    const payload = await this.api.frontier(this.sessionId);
    this.frontier = payload;
    this.notify();
    return payload;
  }

  private async mutate<T extends { revision: number }>(
    action: (revision: number) => Promise<T>,
  ): Promise<T> {
    if (this.mutationInFlight) {
      throw new Error('another mutation is already in flight for this session');
    }
    this.mutationInFlight = true;
    this.solving = true;
    this.notify();
    try {
      const result = await action(this.revision);
      this.revision = result.revision;
      this.dropStale();
      return result;
    } catch (error) {
      if (error instanceof StaleRevisionError) {
        await this.refresh(); // pick up the winning writer's revision
      }
      throw error;
    } finally {
      this.mutationInFlight = false;
      this.solving = false;
      this.notify();
    }
  }

  putViews(userId: string, overallConfidence: number, views: ViewJson[]) {
    return this.mutate((revision) =>
      this.api.putViews(this.sessionId, userId, revision, overallConfidence, views));
  }

  solve() {
    return this.mutate((revision) => this.api.solve(this.sessionId, revision));
  }

  computeFrontier(request: FrontierRequest) {
    return this.mutate((revision) =>
      this.api.computeFrontier(this.sessionId, revision, request));
  }

  setWarning(message: string | null): void {
    this.warning = message;
    this.notify();
  }
}
