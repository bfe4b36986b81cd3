import { describe, expect, it } from "vitest";

import { checkOverride, checkOverrides, checkPanelCell } from "../src/validate.js";

// [path, value, ok] triples walking each bound from both sides.
const boundary: [string, unknown, boolean][] = [
  ["behavior.wta", 0, true],
  ["behavior.wta", 1, true],
  ["behavior.wta", -1e-9, false],
  ["behavior.wta", 1.000001, false],
  ["behavior.stickiness", 0, true],
  ["behavior.stickiness", 1, true],
  ["behavior.stickiness", -0.5, false],
  ["behavior.decay", 0, true],
  ["behavior.decay", 50, true],
  ["behavior.decay", 50.01, false],
  ["behavior.gamma", -0.001, true],
  ["behavior.gamma", -1e6, true],
  ["behavior.gamma", 0, false], // upper bound is open
  ["behavior.gamma", 0.5, false],
  ["behavior.c", 0, true],
  ["behavior.c", 1e9, true],
  ["behavior.c", -1e-9, false],
  ["behavior.softmax_temperature", 1e-9, true],
  ["behavior.softmax_temperature", 0, false], // lower bound is open
  ["behavior.softmax_temperature", -1, false],
];

describe("numeric bounds", () => {
  it.each(boundary)("%s = %s -> ok=%s", (path, value, ok) => {
    const msg = checkOverride(path, value);
    if (ok) {
      expect(msg).toBeNull();
    } else {
      expect(msg).toBeTruthy();
    }
  });

  it("rejects non-finite numbers everywhere", () => {
    expect(checkOverride("behavior.wta", Number.NaN)).toBeTruthy();
    expect(checkOverride("behavior.decay", Infinity)).toBeTruthy();
    expect(checkOverride("behavior.gamma", -Infinity)).toBeTruthy();
    expect(checkOverride("new_customers.rate", Infinity)).toBeTruthy();
    expect(checkOverride("integrator.dt", Infinity)).toBeTruthy();
    expect(checkOverride("integrator.horizon", Number.NaN)).toBeTruthy();
  });

  it("rejects non-numeric values for numeric paths", () => {
    expect(checkOverride("behavior.wta", "0.5")).toBeTruthy();
    expect(checkOverride("behavior.decay", null)).toBeTruthy();
  });
});

describe("enum paths", () => {
  it("accepts each known allocator", () => {
    for (const name of ["ratio", "softmax", "redistribution"]) {
      expect(checkOverride("behavior.allocator", name)).toBeNull();
    }
  });

  it("rejects unknown allocators, including near-misses", () => {
    expect(checkOverride("behavior.allocator", "wta")).toBeTruthy();
    expect(checkOverride("behavior.allocator", "Softmax")).toBeTruthy();
    expect(checkOverride("behavior.allocator", "")).toBeTruthy();
  });

  it("covers modifier order and refresh mode", () => {
    expect(checkOverride("behavior.modifier_order", "wta_only")).toBeNull();
    expect(checkOverride("behavior.modifier_order", "both")).toBeTruthy();
    expect(checkOverride("behavior.refresh_mode", "pairwise_matrix")).toBeNull();
    expect(checkOverride("behavior.refresh_mode", "matrix")).toBeTruthy();
  });

  it("obsolescence flag must be a boolean", () => {
    expect(checkOverride("behavior.obsolescence_uses_modified", true)).toBeNull();
    expect(checkOverride("behavior.obsolescence_uses_modified", "true")).toBeTruthy();
  });
});

describe("integrator and inflow paths", () => {
  it("dt must be positive, horizon non-negative", () => {
    expect(checkOverride("integrator.dt", 0.05)).toBeNull();
    expect(checkOverride("integrator.dt", 0)).toBeTruthy();
    expect(checkOverride("integrator.horizon", 0)).toBeNull();
    expect(checkOverride("integrator.horizon", -1)).toBeTruthy();
  });

  it("method is euler or rk4 only", () => {
    expect(checkOverride("integrator.method", "rk4")).toBeNull();
    expect(checkOverride("integrator.method", "rk2")).toBeTruthy();
  });

  it("new customer rate cannot be negative", () => {
    expect(checkOverride("new_customers.rate", 0)).toBeNull();
    expect(checkOverride("new_customers.rate", -0.1)).toBeTruthy();
  });
});

describe("panel cells against the scenario scale", () => {
  const scale = { s_min: 1, s_max: 10 };

  it("accepts values on and inside the scale", () => {
    expect(checkPanelCell(1, scale)).toBeNull();
    expect(checkPanelCell(10, scale)).toBeNull();
    expect(checkPanelCell(5.5, scale)).toBeNull();
  });

  it("rejects values outside the scale or non-numeric", () => {
    expect(checkPanelCell(0.999, scale)).toBeTruthy();
    expect(checkPanelCell(10.001, scale)).toBeTruthy();
    expect(checkPanelCell("7", scale)).toBeTruthy();
  });

  it("checkOverrides applies the scale to imp and perf paths", () => {
    const problems = checkOverrides(
      { "panel.imp.0.0.0": 11, "panel.perf.1.2.0": 3 },
      scale,
    );
    expect(problems).toHaveLength(1);
    expect(problems[0].path).toBe("panel.imp.0.0.0");
  });
});

describe("checkOverrides aggregation", () => {
  it("returns one problem per bad path and none for good ones", () => {
    const problems = checkOverrides({
      "behavior.wta": 2,
      "behavior.gamma": 0,
      "behavior.stickiness": 0.4,
      "behavior.allocator": "ratio",
    });
    const paths = problems.map((p) => p.path).sort();
    expect(paths).toEqual(["behavior.gamma", "behavior.wta"]);
  });

  it("passes unknown paths through for the server to judge", () => {
    expect(checkOverrides({ "panel.times": [1, 2, 3] })).toHaveLength(0);
  });

  it("empty overrides validate trivially", () => {
    expect(checkOverrides({})).toHaveLength(0);
  });
});
