/** Discrete Gaussian smoothing matching the engine's report smoother:
 * kernel truncated at 3*sigma, renormalized where it overhangs the series
 * boundary. A constant series passes through unchanged and a single point
 * is returned as-is. */

export function gaussianSmooth(series: number[], sigma = 2.0): number[] {
  if (series.length === 0) throw new Error('cannot smooth an empty series');
  if (sigma <= 0) throw new Error(`sigma must be positive, got ${sigma}`);
  const radius = Math.ceil(3 * sigma);
  const weights: number[] = [];
  for (let m = -radius; m <= radius; m++) {
    weights.push(Math.exp(-(m * m) / (2 * sigma * sigma)));
  }
  const n = series.length;
  const out: number[] = [];
  for (let i = 0; i < n; i++) {
    const lo = Math.max(0, i - radius);
    const hi = Math.min(n - 1, i + radius);
    let total = 0;
    let acc = 0;
    for (let j = lo; j <= hi; j++) {
      const w = weights[j - i + radius];
      total += w;
      acc += w * series[j];
    }
    out.push(acc / total);
  }
  return out;
}
