/**
 * Pure rendering of API payloads into display strings and SVG markup.
 *
 * Everything here is a function of a server payload; nothing is computed
 * from raw scenarios on the client.  Keeping these pure makes them
 * testable in node without a DOM.
 */

import { HistogramResponse, StatisticsResponse } from './types.js';

/** Display precision shared by the tables and the round-trip tests. */
export const DISPLAY_DIGITS = 6;

export function formatNumber(value: number): string {
  if (!Number.isFinite(value)) return '-';
  return value.toPrecision(DISPLAY_DIGITS);
}

export interface StatsRow {
  name: string;
  priorMean: string;
  posteriorMean: string;
  priorStd: string;
  posteriorStd: string;
  priorMedian: string;
  posteriorMedian: string;
}

export function statsRows(payload: StatisticsResponse): StatsRow[] {
  return payload.columns.map((column) => ({
    name: column.name,
    priorMean: formatNumber(column.prior.mean),
    posteriorMean: formatNumber(column.posterior.mean),
    priorStd: formatNumber(column.prior.std),
    posteriorStd: formatNumber(column.posterior.std),
    priorMedian: formatNumber(column.prior.median),
    posteriorMedian: formatNumber(column.posterior.median),
  }));
}

export function statsTableHtml(payload: StatisticsResponse): string {
  const header =
    '<tr><th>factor</th><th>prior mean</th><th>posterior mean</th>' +
    '<th>prior std</th><th>posterior std</th>' +
    '<th>prior median</th><th>posterior median</th></tr>';
  const rows = statsRows(payload)
    .map((row) =>
      `<tr><td>${row.name}</td><td>${row.priorMean}</td>` +
      `<td>${row.posteriorMean}</td><td>${row.priorStd}</td>` +
      `<td>${row.posteriorStd}</td><td>${row.priorMedian}</td>` +
      `<td>${row.posteriorMedian}</td></tr>`)
    .join('');
  const badge = payload.solved ? '' : ' <em>(not solved: posterior = prior)</em>';
  return `<div data-revision="${payload.revision}">` +
    `<h3>statistics${badge}</h3><table>${header}${rows}</table></div>`;
}

/** Overlaid prior/posterior histogram as inline SVG (masses from the API). */
export function histogramSvg(payload: HistogramResponse,
                             width = 560, height = 180): string {
  const { edges, prior_mass: prior, posterior_mass: posterior } = payload;
  const bins = prior.length;
  const peak = Math.max(...prior, ...posterior, 1e-12);
  const x0 = edges[0];
  const span = edges[edges.length - 1] - x0 || 1;
  const bars: string[] = [];
  for (let i = 0; i < bins; i += 1) {
    const left = ((edges[i] - x0) / span) * width;
    const right = ((edges[i + 1] - x0) / span) * width;
    const w = Math.max(right - left, 0.5);
    const hPrior = (prior[i] / peak) * (height - 10);
    const hPost = (posterior[i] / peak) * (height - 10);
    bars.push(
      `<rect class="prior" x="${left.toFixed(2)}" y="${(height - hPrior).toFixed(2)}"` +
      ` width="${w.toFixed(2)}" height="${hPrior.toFixed(2)}" fill="#8899aa66"/>`);
    bars.push(
      `<rect class="posterior" x="${left.toFixed(2)}" y="${(height - hPost).toFixed(2)}"` +
      ` width="${w.toFixed(2)}" height="${hPost.toFixed(2)}" fill="#cc550088"/>`);
  }
  return `<svg viewBox="0 0 ${width} ${height}" data-column="${payload.column}"` +
    ` data-revision="${payload.revision}">${bars.join('')}</svg>`;
}

/** True when the prior and posterior masses agree bin by bin (display tol). */
export function overlaysCoincide(payload: HistogramResponse,
                                 tolerance = 1e-12): boolean {
  return payload.prior_mass.every(
    (mass, i) => Math.abs(mass - payload.posterior_mass[i]) <= tolerance);
}
