// The charts must plot exactly what the server returned: the data columns
// handed to the plotting layer are compared against the canned service
// responses value for value, with strict equality. Fixtures were captured
// from the real service (table1 at its default wta=0.3 and at wta=1).

import { describe, expect, it } from "vitest";

import type { SimulateResponse } from "../src/api.js";
import {
  allocationChart, competitivenessChart, flowChart, overlayShareCharts,
  shareChart,
} from "../src/charts.js";
import { table1Default, table1FullWta } from "./helpers.js";

// ten spot-check indices spread over the 101 recorded states
const SPOTS = [0, 10, 25, 40, 50, 60, 75, 85, 95, 100];

const fixtures: [string, SimulateResponse][] = [
  ["wta=0.3", table1Default()],
  ["wta=1", table1FullWta()],
];

describe.each(fixtures)("chart data equals the server response (%s)", (_, resp) => {
  it("share chart matches trajectory.shares at every spot", () => {
    const chart = shareChart(resp);
    expect(chart.labels).toEqual(resp.segments);
    for (const idx of SPOTS) {
      expect(chart.columns[0][idx]).toBe(resp.trajectory.times[idx]);
      resp.segments.forEach((_name, seg) => {
        expect(chart.columns[1 + seg][idx]).toBe(resp.trajectory.shares[idx][seg]);
      });
    }
  });

  it("competitiveness chart matches series.market_mod", () => {
    const chart = competitivenessChart(resp);
    for (const idx of SPOTS) {
      expect(chart.columns[0][idx]).toBe(resp.series.t[idx]);
      resp.segments.forEach((name, seg) => {
        expect(chart.columns[1 + seg][idx]).toBe(resp.series.market_mod[name][idx]);
      });
    }
  });

  it("allocation chart matches series.h_market", () => {
    const chart = allocationChart(resp);
    for (const idx of SPOTS) {
      resp.segments.forEach((name, seg) => {
        expect(chart.columns[1 + seg][idx]).toBe(resp.series.h_market[name][idx]);
      });
    }
  });

  it("flow chart matches the rate arrays", () => {
    for (const [seg, name] of resp.segments.entries()) {
      const chart = flowChart(resp, name);
      expect(chart.columns[0]).toHaveLength(resp.trajectory.times.length - 1);
      for (const idx of SPOTS.filter((i) => i < chart.columns[0].length)) {
        expect(chart.columns[1][idx]).toBe(resp.trajectory.rate_od[idx][seg]);
        expect(chart.columns[2][idx]).toBe(resp.trajectory.rate_rd[idx][seg]);
        expect(chart.columns[3][idx]).toBe(resp.trajectory.rate_bnd[idx][seg]);
      }
    }
  });
});

describe("pinned-run overlay", () => {
  it("keeps every run's values exact on a shared time axis", () => {
    const a = table1Default();
    const b = table1FullWta();
    const chart = overlayShareCharts([
      { label: "base", resp: a },
      { label: "concentrated", resp: b },
    ]);
    expect(chart.labels).toHaveLength(a.segments.length + b.segments.length);
    expect(chart.labels[0]).toBe("base D1");
    expect(chart.labels[3]).toBe("concentrated D1");
    for (const idx of SPOTS) {
      expect(chart.columns[1][idx]).toBe(a.trajectory.shares[idx][0]);
      expect(chart.columns[4][idx]).toBe(b.trajectory.shares[idx][0]);
    }
  });

  it("full wta concentrates inflow on one segment per step in the fixture", () => {
    // sanity on the canned data itself: the step-function regime is visible
    const resp = table1FullWta();
    for (const idx of SPOTS.filter((i) => i < resp.trajectory.rate_rd.length)) {
      const inflows = resp.segments.map((_name, seg) =>
        resp.trajectory.rate_rd[idx][seg] + resp.trajectory.rate_bnd[idx][seg]);
      expect(inflows.filter((v) => v !== 0)).toHaveLength(1);
    }
  });
});
