/**
 * Frontier explorer: what-if toggles per view, revision-guarded replot.
 *
 * Toggling a view off re-submits the filtered view list, re-solves and
 * recomputes the frontier.  Each replot is keyed to the revision that
 * produced it, so with two rapid toggles the final plot always reflects
 * the final revision (the stale run loses the revision race and its 409
 * surfaces as a refetch).  An infeasible toggle keeps the previous curve
 * and records a warning instead.
 */

import { SessionStore } from './store.js';
import {
  FrontierPointJson,
  FrontierRequest,
  FrontierResponse,
  InfeasibleViewsError,
  ViewJson,
} from './types.js';

export interface ToggleableView {
  userId: string;
  overallConfidence: number;
  view: ViewJson;
  enabled: boolean;
}

export class FrontierExplorer {
  private views: ToggleableView[] = [];
  private lastGood: FrontierResponse | null = null;

  constructor(
    private readonly store: SessionStore,
    private readonly request: FrontierRequest,
  ) {}

  loadViews(users: Record<string, { overall_confidence: number; views: ViewJson[] }>): void {
    this.views = [];
    for (const [userId, payload] of Object.entries(users)) {
      for (const view of payload.views) {
        this.views.push({
          userId,
          overallConfidence: payload.overall_confidence,
          view,
          enabled: true,
        });
      }
    }
  }

  get toggles(): readonly ToggleableView[] {
    return this.views;
  }

  get currentCurve(): FrontierResponse | null {
    return this.lastGood;
  }

  /** Per-user view lists with only the enabled views retained. */
  enabledByUser(): Map<string, { confidence: number; views: ViewJson[] }> {
    const byUser = new Map<string, { confidence: number; views: ViewJson[] }>();
    for (const toggle of this.views) {
      if (!byUser.has(toggle.userId)) {
        byUser.set(toggle.userId, {
          confidence: toggle.overallConfidence,
          views: [],
        });
      }
      if (toggle.enabled) {
        byUser.get(toggle.userId)!.views.push(toggle.view);
      }
    }
    return byUser;
  }

  /** Re-submit enabled views, solve, recompute and fetch the frontier. */
  async resolveAndPlot(): Promise<FrontierResponse> {
    try {
      for (const [userId, group] of this.enabledByUser()) {
        await this.store.putViews(userId, group.confidence, group.views);
      }
      await this.store.solve();
      await this.store.computeFrontier(this.request);
    } catch (error) {
      if (error instanceof InfeasibleViewsError) {
        // keep the previous curve; the toggle combination is unsolvable
        this.store.setWarning(error.message);
        if (this.lastGood) return this.lastGood;
      }
      throw error;
    }
    const curve = await this.store.refreshFrontier();
    // revision guard: only adopt a curve computed at the store's revision
    if (curve.revision === this.store.currentRevision) {
      this.lastGood = curve;
      this.store.setWarning(null);
    }
    return this.lastGood ?? curve;
  }

  async toggle(index: number, enabled: boolean): Promise<FrontierResponse> {
    this.views[index].enabled = enabled;
    return this.resolveAndPlot();
  }
}

/** Polyline for the (cvar, expected_pnl) curve plus per-point weight labels. */
export function frontierSvg(points: FrontierPointJson[],
                            width = 420, height = 200): string {
  if (points.length === 0) {
    return `<svg viewBox="0 0 ${width} ${height}"><text x="10" y="20">no frontier</text></svg>`;
  }
  const xs = points.map((p) => p.cvar);
  const ys = points.map((p) => p.expected_pnl);
  const xMin = Math.min(...xs, 0);
  const xMax = Math.max(...xs, 1e-9);
  const yMin = Math.min(...ys, 0);
  const yMax = Math.max(...ys, 1e-9);
  const sx = (v: number) => ((v - xMin) / (xMax - xMin || 1)) * (width - 20) + 10;
  const sy = (v: number) => height - (((v - yMin) / (yMax - yMin || 1)) * (height - 20) + 10);
  const path = points
    .map((p, i) => `${i === 0 ? 'M' : 'L'}${sx(p.cvar).toFixed(1)},${sy(p.expected_pnl).toFixed(1)}`)
    .join(' ');
  const markers = points
    .map((p) =>
      `<circle cx="${sx(p.cvar).toFixed(1)}" cy="${sy(p.expected_pnl).toFixed(1)}" r="3"` +
      ` data-lambda="${p.lambda}"/>`)
    .join('');
  return `<svg viewBox="0 0 ${width} ${height}">` +
    `<path d="${path}" fill="none" stroke="#cc5500"/>${markers}</svg>`;
}
