// uPlot mounting. This is the only module that touches the chart library;
// data assembly lives in charts.ts so it stays testable without a DOM.

import uPlot from "./vendor/uPlot.esm.js";
import type { ChartData } from "./charts.js";

const PALETTE = [
  "#2965cc", "#d13913", "#29a634", "#8f398f", "#d99e0b",
  "#00b3a4", "#db2c6f", "#9bbf30", "#96622d", "#7157d9",
];

export function renderChart(el: HTMLElement, chart: ChartData): uPlot {
  el.replaceChildren();
  const series: uPlot.Series[] = [{ label: "t" }];
  chart.labels.forEach((label, i) => {
    series.push({
      label,
      stroke: PALETTE[i % PALETTE.length],
      width: 1.5,
      dash: i >= PALETTE.length ? [6, 4] : undefined,
    });
  });
  const opts: uPlot.Options = {
    title: chart.title,
    width: Math.max(360, el.clientWidth || 640),
    height: 240,
    series,
    scales: { x: { time: false } },
    axes: [{ label: "t" }, {}],
    cursor: { sync: { key: "whatif" } },
  };
  return new uPlot(opts, chart.columns as uPlot.AlignedData, el);
}
