// Chart data assembly: reshape server responses into uPlot's aligned
// column form. Values are copied, never recomputed, so what the chart
// renders is exactly what the server returned.

import type { SimulateResponse } from "./api.js";

export interface ChartData {
  title: string;
  labels: string[]; // one per value column
  columns: number[][]; // columns[0] is time, columns[i>0] matches labels[i-1]
}

export function shareChart(resp: SimulateResponse, prefix = ""): ChartData {
  const { times, shares } = resp.trajectory;
  const columns: number[][] = [times.slice()];
  const labels: string[] = [];
  resp.segments.forEach((name, i) => {
    labels.push(prefix ? `${prefix} ${name}` : name);
    columns.push(shares.map((row) => row[i]));
  });
  return { title: "market share", labels, columns };
}

export function competitivenessChart(resp: SimulateResponse): ChartData {
  const series = resp.series;
  const columns: number[][] = [series.t.slice()];
  const labels: string[] = [];
  for (const name of resp.segments) {
    labels.push(name);
    columns.push(series.market_mod[name].slice());
  }
  return { title: "modified competitiveness", labels, columns };
}

export function allocationChart(resp: SimulateResponse): ChartData {
  const series = resp.series;
  const columns: number[][] = [series.t.slice()];
  const labels: string[] = [];
  for (const name of resp.segments) {
    labels.push(name);
    columns.push(series.h_market[name].slice());
  }
  return { title: "demand allocation", labels, columns };
}

/**
 * Flow decomposition for one segment: obsolescence out, refresh in, new
 * entrants in. Rate rows describe the step they advance, so the last
 * recorded state has no row and the time column is one entry shorter.
 */
export function flowChart(resp: SimulateResponse, segment: string): ChartData {
  const i = resp.segments.indexOf(segment);
  if (i < 0) throw new Error(`unknown segment ${segment}`);
  const t = resp.trajectory.times;
  const pick = (rows: number[][]) => rows.map((row) => row[i]);
  return {
    title: `flows: ${segment}`,
    labels: ["obsolescence out", "refresh in", "new entrants in"],
    columns: [
      t.slice(0, t.length - 1),
      pick(resp.trajectory.rate_od),
      pick(resp.trajectory.rate_rd),
      pick(resp.trajectory.rate_bnd),
    ],
  };
}

/** Overlay runs on one time axis; series are labeled by run. */
export function overlayShareCharts(
  runs: { label: string; resp: SimulateResponse }[],
): ChartData {
  if (runs.length === 0) return { title: "market share", labels: [], columns: [[]] };
  const base = shareChart(runs[0].resp, runs[0].label);
  for (const run of runs.slice(1)) {
    const next = shareChart(run.resp, run.label);
    if (next.columns[0].length !== base.columns[0].length) {
      throw new Error("pinned runs disagree on the time grid");
    }
    base.labels.push(...next.labels);
    base.columns.push(...next.columns.slice(1));
  }
  return base;
}
