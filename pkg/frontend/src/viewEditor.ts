/**
 * View entry form model: client-side validation mirroring the server schema.
 *
 * A draft cannot be submitted while invalid; the submit payload is built
 * only from validated drafts.  Server-side 422s (infeasible view sets) are
 * reported back onto the draft that triggered them, leaving the session
 * untouched.
 */

import { Direction, TargetMode, ViewJson, ViewKind } from './types.js';

export interface SentimentPreset {
  label: string;
  kappa: number;
}

/** Conventional qualitative strengths mapped to kappa multipliers. */
export const SENTIMENT_PRESETS: SentimentPreset[] = [
  { label: 'very bearish', kappa: -2 },
  { label: 'bearish', kappa: -1 },
  { label: 'bullish', kappa: 1 },
  { label: 'very bullish', kappa: 2 },
];

const KINDS_WITH_TARGET: ViewKind[] = [
  'MeanLocation',
  'MedianLocation',
  'VolatilityStd',
  'VolatilityQuantileRange',
  'CorrelationStress',
  'TailCodependence',
];

const LEVEL_KINDS: ViewKind[] = [
  'VolatilityQuantileRange',
  'QuantileTail',
  'TailCodependence',
];

export class ViewDraft {
  kind: ViewKind = 'MeanLocation';
  columns: string[] = [''];
  direction: Direction = '=';
  targetMode: TargetMode = 'Absolute';
  targetValue = 0;
  hasTarget = true;
  level: number[] = [];
  /** slider value in [0, 1]; rendered as a percentage in the form */
  confidence = 1;
  /** set from a server 422 after submit; cleared on the next edit */
  serverRejection: string | null = null;

  applyPreset(preset: SentimentPreset): void {
    this.targetMode = 'KappaSigma';
    this.targetValue = preset.kappa;
    this.hasTarget = true;
    this.serverRejection = null;
  }

  touch(): void {
    this.serverRejection = null;
  }

  validationErrors(): string[] {
    const errors: string[] = [];
    const named = this.columns.filter((c) => c.trim().length > 0);
    if (named.length === 0) {
      errors.push('at least one column expression is required');
    }
    if (this.kind === 'Ranking') {
      if (named.length < 2) {
        errors.push('ranking views need at least two columns');
      }
      if (this.hasTarget) {
        errors.push('ranking views take no target');
      }
    }
    if (this.kind === 'CorrelationStress') {
      if (named.length !== 2) {
        errors.push('correlation stress views take exactly two columns');
      }
      if (this.targetMode !== 'Absolute') {
        errors.push('correlation targets are absolute');
      } else if (this.targetValue < -1 || this.targetValue > 1) {
        errors.push('correlation target must lie in [-1, 1]');
      }
      if (this.direction !== '=') {
        errors.push('correlation stress views must be equalities');
      }
    }
    if (KINDS_WITH_TARGET.includes(this.kind) && this.kind !== 'Ranking' && !this.hasTarget
        && this.kind !== 'QuantileTail') {
      errors.push(`${this.kind} views need a target`);
    }
    if (this.targetMode === 'QuantileShift' && Math.abs(this.targetValue) >= 2.5) {
      errors.push('quantile-shift kappa must satisfy |kappa| < 2.5');
    }
    if (LEVEL_KINDS.includes(this.kind)) {
      if (this.level.length === 0) {
        errors.push(`${this.kind} views need a level`);
      } else if (this.kind === 'QuantileTail'
          && (this.level[0] <= 0 || this.level[0] >= 1)) {
        errors.push('tail level must lie in (0, 1)');
      } else if (this.kind === 'VolatilityQuantileRange'
          && (this.level[0] <= 0 || this.level[0] >= 0.5)) {
        errors.push('range half-width must lie in (0, 1/2)');
      }
    }
    if (this.confidence < 0 || this.confidence > 1) {
      errors.push('confidence must lie in [0, 1]');
    }
    return errors;
  }

  get submittable(): boolean {
    return this.validationErrors().length === 0;
  }

  toViewJson(): ViewJson {
    if (!this.submittable) {
      throw new Error(`draft is invalid: ${this.validationErrors().join('; ')}`);
    }
    const view: ViewJson = {
      kind: this.kind,
      columns: this.columns.filter((c) => c.trim().length > 0),
      direction: this.direction,
      confidence: this.confidence,
    };
    if (this.hasTarget && this.kind !== 'Ranking') {
      view.target = { mode: this.targetMode, value: this.targetValue };
    }
    if (this.level.length === 1) {
      view.level = this.level[0];
    } else if (this.level.length > 1) {
      view.level = [...this.level];
    }
    return view;
  }
}

/** Rebuild form drafts from the server's view JSON (session reload). */
export function draftFromViewJson(view: ViewJson): ViewDraft {
  const draft = new ViewDraft();
  draft.kind = view.kind;
  draft.columns = [...view.columns];
  draft.direction = view.direction;
  draft.confidence = view.confidence ?? 1;
  if (view.target) {
    draft.hasTarget = true;
    draft.targetMode = view.target.mode;
    draft.targetValue = view.target.value;
  } else {
    draft.hasTarget = false;
  }
  if (view.level !== undefined) {
    draft.level = Array.isArray(view.level) ? [...view.level] : [view.level];
  }
  return draft;
}
