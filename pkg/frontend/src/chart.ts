/** nDCG history chart: raw and smoothed ndcg_full series plus the
 * per-iteration threshold, rendered as a dependency-free SVG. Degenerate
 * iterations (anomaly-free pool convention) are marked. */

import { gaussianSmooth } from './smoothing';
import type { IterationRecord } from './types';

export interface ChartData {
  iterations: number[];
  raw: number[];
  smooth: number[];
  tau: number[];
  degenerate: boolean[];
}

export function chartData(history: IterationRecord[]): ChartData {
  const iterations = history.map((r) => r.iteration);
  const raw = history.map((r) => r.ndcg_full);
  return {
    iterations,
    raw,
    smooth: raw.length ? gaussianSmooth(raw) : [],
    tau: history.map((r) => r.tau),
    degenerate: history.map((r) => r.full_degenerate || r.pool_degenerate),
  };
}

const WIDTH = 560;
const HEIGHT = 220;
const PAD = 28;

function x(i: number, n: number): number {
  if (n <= 1) return WIDTH / 2;
  return PAD + (i * (WIDTH - 2 * PAD)) / (n - 1);
}

function y(value: number): number {
  return HEIGHT - PAD - value * (HEIGHT - 2 * PAD);
}

function polyline(values: number[], cls: string): string {
  if (values.length === 1) {
    return `<circle class="${cls}" cx="${x(0, 1)}" cy="${y(values[0])}" r="4"/>`;
  }
  const points = values.map((v, i) => `${x(i, values.length)},${y(v)}`).join(' ');
  return `<polyline class="${cls}" fill="none" points="${points}"/>`;
}

/** SVG markup for the history pane; pure function of the chart data. */
export function chartSvg(data: ChartData): string {
  const n = data.raw.length;
  const parts: string[] = [
    `<svg data-testid="history-chart" viewBox="0 0 ${WIDTH} ${HEIGHT}" ` +
      `xmlns="http://www.w3.org/2000/svg">`,
    `<line class="axis" x1="${PAD}" y1="${y(0)}" x2="${WIDTH - PAD}" y2="${y(0)}"/>`,
    `<line class="axis" x1="${PAD}" y1="${y(0)}" x2="${PAD}" y2="${y(1)}"/>`,
  ];
  if (n > 0) {
    parts.push(polyline(data.raw, 'series-raw'));
    if (n > 1) parts.push(polyline(data.smooth, 'series-smooth'));
    data.raw.forEach((v, i) => {
      parts.push(
        `<circle class="point-raw" data-iteration="${data.iterations[i]}" ` +
          `cx="${x(i, n)}" cy="${y(v)}" r="2.5"/>`,
      );
      if (data.degenerate[i]) {
        parts.push(
          `<circle class="point-degenerate" data-testid="degenerate-marker" ` +
            `cx="${x(i, n)}" cy="${y(v)}" r="6"/>`,
        );
      }
    });
  }
  parts.push('</svg>');
  return parts.join('');
}
