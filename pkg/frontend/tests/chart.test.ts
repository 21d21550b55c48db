import { describe, expect, it } from 'vitest';

import { chartData, chartSvg } from '../src/chart';
import { gaussianSmooth } from '../src/smoothing';
import { record } from './helpers';

const FIXTURE = [
  record({ iteration: 1, ndcg_full: 0.34, tau: 3.1 }),
  record({ iteration: 2, ndcg_full: 0.41, tau: 3.0 }),
  record({ iteration: 3, ndcg_full: 0.55, tau: 2.8 }),
  record({ iteration: 4, ndcg_full: 0.52, tau: 2.9, full_degenerate: true }),
  record({ iteration: 5, ndcg_full: 0.67, tau: 2.7 }),
];

describe('chartData', () => {
  it('mirrors the history fixture exactly', () => {
    const data = chartData(FIXTURE);
    expect(data.iterations).toEqual([1, 2, 3, 4, 5]);
    expect(data.raw).toEqual([0.34, 0.41, 0.55, 0.52, 0.67]);
    expect(data.tau).toEqual([3.1, 3.0, 2.8, 2.9, 2.7]);
    expect(data.smooth).toEqual(gaussianSmooth([0.34, 0.41, 0.55, 0.52, 0.67]));
    expect(data.degenerate).toEqual([false, false, false, true, false]);
  });

  it('handles an empty history', () => {
    const data = chartData([]);
    expect(data.raw).toEqual([]);
    expect(data.smooth).toEqual([]);
  });
});

describe('chartSvg', () => {
  it('renders a single point as one marker without smoothing artifacts', () => {
    const svg = chartSvg(chartData([record({ iteration: 1, ndcg_full: 0.5 })]));
    expect(svg).toContain('circle');
    expect(svg).not.toContain('polyline');
  });

  it('marks degenerate iterations', () => {
    const svg = chartSvg(chartData(FIXTURE));
    const markers = svg.match(/data-testid="degenerate-marker"/g) ?? [];
    expect(markers).toHaveLength(1);
  });

  it('draws raw and smoothed series for longer histories', () => {
    const svg = chartSvg(chartData(FIXTURE));
    expect(svg).toContain('series-raw');
    expect(svg).toContain('series-smooth');
    const points = svg.match(/class="point-raw"/g) ?? [];
    expect(points).toHaveLength(FIXTURE.length);
  });
});
