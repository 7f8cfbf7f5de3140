/**
 * Wire types for the entropool HTTP API.
 *
 * These mirror the server's JSON schemas exactly; the workbench never
 * computes statistics locally, so everything it displays flows through
 * these payloads.
 */

export type ViewKind =
  | 'MeanLocation'
  | 'MedianLocation'
  | 'Ranking'
  | 'VolatilityStd'
  | 'VolatilityQuantileRange'
  | 'CorrelationStress'
  | 'QuantileTail'
  | 'TailCodependence';

export type Direction = '<=' | '=' | '>=';

export type TargetMode =
  | 'Absolute'
  | 'KappaSigma'
  | 'QuantileShift'
  | 'ReferenceMultiple';

export interface TargetJson {
  mode: TargetMode;
  value: number;
}

export interface ViewJson {
  kind: ViewKind;
  columns: string[];
  direction: Direction;
  target?: TargetJson;
  order?: number;
  level?: number | number[];
  confidence?: number;
}

export interface SessionCreated {
  session_id: string;
  revision: number;
}

export interface SessionInfo {
  session_id: string;
  revision: number;
  factor_names: string[];
  n_scenarios: number;
  users: Record<string, { overall_confidence: number; views: ViewJson[] }>;
  solved: boolean;
  frontier_computed: boolean;
}

export interface ColumnStats {
  mean: number;
  std: number;
  median: number;
  quantiles: Record<string, number>;
}

export interface StatisticsResponse {
  revision: number;
  solved: boolean;
  columns: Array<{ name: string; prior: ColumnStats; posterior: ColumnStats }>;
}

export interface HistogramResponse {
  revision: number;
  solved: boolean;
  column: string;
  edges: number[];
  prior_mass: number[];
  posterior_mass: number[];
}

export interface SolveResponse {
  revision: number;
  users: Record<string, { converged: boolean; iterations: number }>;
}

export interface ContractJson {
  underlying_id: string;
  strike: number;
  expiry: number;
  risk_free: number;
  smile_alpha: number;
  smile_beta: number;
  current_underlying: number;
  current_atm_vol: number;
  horizon: number;
  underlying_factor: string;
  vol_factor: string;
}

export interface FrontierPointJson {
  lambda: number;
  weights: number[];
  expected_pnl: number;
  cvar: number;
}

export interface FrontierResponse {
  revision: number;
  computed: boolean;
  instrument_ids: string[] | null;
  points: FrontierPointJson[];
}

export interface FrontierRequest {
  book: ContractJson[];
  gamma: number;
  lambdas: number[];
  position_cap: number;
}

export class StaleRevisionError extends Error {
  constructor(public readonly serverDetail: string) {
    super(`stale revision: ${serverDetail}`);
  }
}

export class InfeasibleViewsError extends Error {
  constructor(public readonly serverDetail: string) {
    super(`views rejected by the solver: ${serverDetail}`);
  }
}

export class ApiError extends Error {
  constructor(public readonly status: number, detail: string) {
    super(`API error ${status}: ${detail}`);
  }
}
