// Client-side mirror of the server's value domains. Anything failing here
// must never turn into a network request; anything passing may still be
// rejected server-side (the server owns the full schema).

export interface Problem {
  path: string;
  message: string;
}

interface NumericBound {
  lower: number;
  upper: number;
  lowerOpen?: boolean;
  upperOpen?: boolean;
}

const BEHAVIOR_BOUNDS: Record<string, NumericBound> = {
  "behavior.wta": { lower: 0, upper: 1 },
  "behavior.stickiness": { lower: 0, upper: 1 },
  "behavior.decay": { lower: 0, upper: 50 },
  "behavior.gamma": { lower: -Infinity, upper: 0, upperOpen: true },
  "behavior.c": { lower: 0, upper: Infinity },
  "behavior.softmax_temperature": { lower: 0, upper: Infinity, lowerOpen: true },
  "behavior.diag_bias": { lower: 0, upper: 1 },
};

const BEHAVIOR_ENUMS: Record<string, string[]> = {
  "behavior.allocator": ["ratio", "softmax", "redistribution"],
  "behavior.modifier_order": [
    "none", "wta_only", "psychology_only",
    "wta_then_psychology", "psychology_then_wta",
  ],
  "behavior.refresh_mode": ["market_vector", "pairwise_matrix"],
};

function boundText(bound: NumericBound): string {
  const lo = `${bound.lowerOpen ? "(" : "["}${bound.lower}`;
  const hi = `${bound.upper}${bound.upperOpen ? ")" : "]"}`;
  return `${lo}, ${hi}`;
}

function checkNumeric(value: unknown, bound: NumericBound): string | null {
  // non-finite values do not survive JSON serialization
  if (typeof value !== "number" || !Number.isFinite(value)) {
    return "must be a finite number";
  }
  const belowLower = bound.lowerOpen ? value <= bound.lower : value < bound.lower;
  const aboveUpper = bound.upperOpen ? value >= bound.upper : value > bound.upper;
  if (belowLower || aboveUpper) {
    return `must lie in ${boundText(bound)}, got ${value}`;
  }
  return null;
}

/** Validate one dotted-path override; null when acceptable. */
export function checkOverride(path: string, value: unknown): string | null {
  const bound = BEHAVIOR_BOUNDS[path];
  if (bound) return checkNumeric(value, bound);
  const allowed = BEHAVIOR_ENUMS[path];
  if (allowed) {
    if (typeof value !== "string" || !allowed.includes(value)) {
      return `must be one of ${allowed.join(", ")}`;
    }
    return null;
  }
  if (path === "behavior.obsolescence_uses_modified") {
    return typeof value === "boolean" ? null : "must be true or false";
  }
  if (path === "new_customers.rate") {
    if (typeof value !== "number" || !Number.isFinite(value) || value < 0) {
      return "must be a number >= 0";
    }
    return null;
  }
  if (path.startsWith("panel.imp.") || path.startsWith("panel.perf.")) {
    // score-scale cells; the caller supplies the scenario's scale
    return null;
  }
  if (path === "integrator.dt") {
    if (typeof value !== "number" || !Number.isFinite(value) || !(value > 0)) {
      return "must be a number > 0";
    }
    return null;
  }
  if (path === "integrator.horizon") {
    if (typeof value !== "number" || !Number.isFinite(value) || !(value >= 0)) {
      return "must be a number >= 0";
    }
    return null;
  }
  if (path === "integrator.method") {
    return value === "euler" || value === "rk4" ? null : "must be euler or rk4";
  }
  return null; // unknown paths are the server's call
}

/** Validate a panel-cell override against the scenario's score scale. */
export function checkPanelCell(
  value: unknown, scale: { s_min: number; s_max: number },
): string | null {
  return checkNumeric(value, { lower: scale.s_min, upper: scale.s_max });
}

export function checkOverrides(
  overrides: Record<string, unknown>,
  scale?: { s_min: number; s_max: number },
): Problem[] {
  const problems: Problem[] = [];
  for (const [path, value] of Object.entries(overrides)) {
    let message = checkOverride(path, value);
    if (message === null && scale
        && (path.startsWith("panel.imp.") || path.startsWith("panel.perf."))) {
      message = checkPanelCell(value, scale);
    }
    if (message !== null) problems.push({ path, message });
  }
  return problems;
}

/** Slider metadata for the behavior controls; bounds match the server. */
export interface SliderSpec {
  path: string;
  label: string;
  min: number;
  max: number;
  step: number;
}

export const BEHAVIOR_SLIDERS: SliderSpec[] = [
  { path: "behavior.wta", label: "winner-take-all", min: 0, max: 1, step: 0.01 },
  { path: "behavior.stickiness", label: "stickiness", min: 0, max: 1, step: 0.01 },
  { path: "behavior.decay", label: "obsolescence rate", min: 0, max: 50, step: 0.1 },
  { path: "behavior.gamma", label: "resistance slope", min: -10, max: -0.01, step: 0.01 },
  { path: "behavior.c", label: "resistance floor", min: 0, max: 2, step: 0.01 },
];

export const ALLOCATORS = BEHAVIOR_ENUMS["behavior.allocator"];
