// Page wiring: controls on the left, charts on the right. All state lives
// in UiSession; the DOM is re-rendered from it after every change.

import { Client, RequestFailed, SimulateResponse } from "./api.js";
import {
  allocationChart, competitivenessChart, flowChart, overlayShareCharts,
  shareChart,
} from "./charts.js";
import { renderChart } from "./mount.js";
import { OverridesInvalid, UiSession } from "./session.js";
import { ALLOCATORS, BEHAVIOR_SLIDERS, Problem } from "./validate.js";

const session = new UiSession(new Client(""));

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function fieldError(path: string, message: string | null): boolean {
  const row = document.querySelector<HTMLElement>(`[data-path="${path}"]`);
  if (!row) return false;
  const slot = row.querySelector<HTMLElement>(".error");
  if (!slot) return false;
  slot.textContent = message ?? "";
  return true;
}

function clearErrors(): void {
  document.querySelectorAll<HTMLElement>(".error").forEach((slot) => {
    slot.textContent = "";
  });
  const global = el<HTMLElement>("global-error");
  global.hidden = true;
  global.textContent = "";
}

function showProblems(problems: Problem[]): void {
  const unplaced: string[] = [];
  for (const problem of problems) {
    if (!fieldError(problem.path, problem.message)) {
      unplaced.push(problem.path ? `${problem.path}: ${problem.message}` : problem.message);
    }
  }
  if (unplaced.length > 0) {
    const global = el<HTMLElement>("global-error");
    global.hidden = false;
    global.textContent = unplaced.join("\n");
  }
}

function numberRow(path: string, label: string, min: number, max: number,
                   step: number, initial: number): HTMLElement {
  const row = document.createElement("div");
  row.className = "field";
  row.dataset.path = path;

  const caption = document.createElement("label");
  caption.textContent = label;
  const value = document.createElement("span");
  value.className = "value";
  value.textContent = String(initial);
  caption.append(" ", value);

  const slider = document.createElement("input");
  slider.type = "range";
  slider.min = String(min);
  slider.max = String(max);
  slider.step = String(step);
  slider.value = String(initial);

  const exact = document.createElement("input");
  exact.type = "number";
  exact.step = String(step);
  exact.value = String(initial);

  const error = document.createElement("span");
  error.className = "error";

  const apply = (raw: string) => {
    const parsed = Number(raw);
    value.textContent = raw;
    session.setOverride(path, parsed);
    const problems = session.validatePending();
    fieldError(path, problems.find((p) => p.path === path)?.message ?? null);
  };
  slider.addEventListener("input", () => {
    exact.value = slider.value;
    apply(slider.value);
  });
  exact.addEventListener("input", () => {
    slider.value = exact.value;
    apply(exact.value);
  });

  row.append(caption, slider, exact, error);
  return row;
}

function buildControls(): void {
  const detail = session.detail;
  if (!detail) return;
  const behavior = detail.scenario.behavior;

  const sliders = el<HTMLElement>("sliders");
  sliders.replaceChildren();
  for (const spec of BEHAVIOR_SLIDERS) {
    const field = spec.path.split(".")[1];
    const initial = Number(behavior[field] ?? 0);
    sliders.append(numberRow(spec.path, spec.label, spec.min, spec.max,
                             spec.step, initial));
  }

  const allocator = el<HTMLSelectElement>("allocator-select");
  allocator.replaceChildren();
  for (const name of ALLOCATORS) {
    const option = document.createElement("option");
    option.value = name;
    option.textContent = name;
    allocator.append(option);
  }
  allocator.value = String(behavior.allocator);
  allocator.onchange = () => {
    session.setOverride("behavior.allocator", allocator.value);
  };

  const nc = el<HTMLInputElement>("nc-rate");
  const ncTree = detail.scenario.new_customers as { rate?: unknown };
  if (typeof ncTree.rate === "number") {
    nc.disabled = false;
    nc.value = String(ncTree.rate);
    nc.oninput = () => {
      session.setOverride("new_customers.rate", Number(nc.value));
      const problems = session.validatePending();
      fieldError("new_customers.rate",
                 problems.find((p) => p.path === "new_customers.rate")?.message ?? null);
    };
  } else {
    nc.disabled = true; // stamped series; edit the scenario file instead
  }

  const importance = el<HTMLElement>("importance");
  importance.replaceChildren();
  const legend = document.createElement("legend");
  legend.textContent = "attribute importance";
  importance.append(legend);
  const panel = detail.scenario.panel;
  detail.scenario.attributes.forEach((attr, a) => {
    const row = document.createElement("div");
    row.className = "field";
    row.dataset.path = `panel.imp.*.*.${a}`;
    const caption = document.createElement("label");
    caption.textContent = attr;
    const input = document.createElement("input");
    input.type = "number";
    input.step = "0.5";
    input.value = String(panel.imp[0][0][a]);
    const error = document.createElement("span");
    error.className = "error";
    input.oninput = () => {
      const parsed = Number(input.value);
      // one latent importance per attribute, applied across the panel
      panel.times.forEach((_, t) => {
        detail.scenario.segments.forEach((_, s) => {
          session.setOverride(`panel.imp.${t}.${s}.${a}`, parsed);
        });
      });
      const problems = session.validatePending();
      const hit = problems.find((p) => p.path.startsWith("panel.imp.")
                                       && p.path.endsWith(`.${a}`));
      error.textContent = hit ? hit.message : "";
    };
    row.append(caption, input, error);
    importance.append(row);
  });
}

function renderRun(resp: SimulateResponse): void {
  renderChart(el("share-chart"), shareChart(resp));
  renderChart(el("competitiveness-chart"), competitivenessChart(resp));
  renderChart(el("allocation-chart"), allocationChart(resp));

  const segment = el<HTMLSelectElement>("flow-segment");
  if (segment.options.length === 0
      || segment.dataset.run !== resp.run_id) {
    const keep = segment.value;
    segment.replaceChildren();
    for (const name of resp.segments) {
      const option = document.createElement("option");
      option.value = name;
      option.textContent = name;
      segment.append(option);
    }
    if (resp.segments.includes(keep)) segment.value = keep;
    segment.dataset.run = resp.run_id;
  }
  renderChart(el("flow-chart"), flowChart(resp, segment.value));
  segment.onchange = () => {
    renderChart(el("flow-chart"), flowChart(resp, segment.value));
  };

  el<HTMLElement>("run-info").textContent =
    `run ${resp.run_id} (scenario ${resp.trajectory.scenario_id})`;
  el<HTMLButtonElement>("pin-btn").disabled = false;
}

function renderPinned(): void {
  const list = el<HTMLElement>("pinned-list");
  list.replaceChildren();
  for (const pinnedRun of session.pinned) {
    const item = document.createElement("li");
    const text = document.createElement("span");
    text.textContent = pinnedRun.label;
    const drop = document.createElement("button");
    drop.textContent = "unpin";
    drop.onclick = () => {
      session.unpin(pinnedRun.runId);
      renderPinned();
    };
    item.append(text, " ", drop);
    list.append(item);
  }
  const overlay = el<HTMLElement>("overlay-chart");
  if (session.pinned.length > 0) {
    renderChart(overlay, overlayShareCharts(
      session.pinned.map((p) => ({ label: p.label, resp: p.resp }))));
  } else {
    overlay.replaceChildren();
  }
}

async function simulate(): Promise<void> {
  clearErrors();
  el<HTMLButtonElement>("retry-btn").hidden = true;
  try {
    renderRun(await session.submit());
  } catch (err) {
    if (err instanceof OverridesInvalid) {
      showProblems(err.problems);
    } else if (err instanceof RequestFailed) {
      showProblems(err.error.diagnostics ?? [err.error]);
    } else {
      const global = el<HTMLElement>("global-error");
      global.hidden = false;
      global.textContent = `request failed: ${String(err)}`;
      el<HTMLButtonElement>("retry-btn").hidden = false;
    }
  }
}

async function openScenario(name: string): Promise<void> {
  clearErrors();
  await session.open(name);
  buildControls();
  await simulate();
}

async function boot(): Promise<void> {
  const picker = el<HTMLSelectElement>("scenario-select");
  const scenarios = await session.client.listScenarios();
  picker.replaceChildren();
  for (const summary of scenarios) {
    const option = document.createElement("option");
    option.value = summary.name;
    option.textContent =
      `${summary.name} (${summary.segments.length} segments, horizon ${summary.horizon})`;
    picker.append(option);
  }
  picker.onchange = () => void openScenario(picker.value);

  el<HTMLButtonElement>("simulate-btn").onclick = () => void simulate();
  el<HTMLButtonElement>("retry-btn").onclick = () => void simulate();
  el<HTMLButtonElement>("pin-btn").onclick = () => {
    if (session.lastRun) {
      session.pin(session.lastRun);
      renderPinned();
    }
  };

  if (scenarios.length > 0) await openScenario(scenarios[0].name);
}

boot().catch((err) => {
  const global = document.getElementById("global-error");
  if (global) {
    global.hidden = false;
    global.textContent = `failed to reach the scenario service: ${String(err)}`;
  }
});
