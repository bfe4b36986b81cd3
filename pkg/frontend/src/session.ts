// What-if session state: the active scenario, pending dotted-path
// overrides, and pinned runs for side-by-side comparison.
//
// submit() validates pending overrides BEFORE building a request; an
// out-of-domain value therefore never reaches the network. At most one
// simulate request is in flight at a time; later submissions queue.

import { Client, RequestFailed, SimulateResponse, ScenarioDetail } from "./api.js";
import { Problem, checkOverrides } from "./validate.js";

export class OverridesInvalid extends Error {
  constructor(readonly problems: Problem[]) {
    super(problems.map((p) => `${p.path}: ${p.message}`).join("; "));
    this.name = "OverridesInvalid";
  }
}

export interface PinnedRun {
  runId: string;
  label: string;
  resp: SimulateResponse;
}

export class UiSession {
  scenario: string | null = null;
  detail: ScenarioDetail | null = null;
  pending: Record<string, unknown> = {};
  pinned: PinnedRun[] = [];
  lastRun: SimulateResponse | null = null;

  private queue: Promise<unknown> = Promise.resolve();

  constructor(readonly client: Client) {}

  async open(name: string): Promise<ScenarioDetail> {
    this.detail = await this.client.getScenario(name);
    this.scenario = name;
    this.pending = {};
    return this.detail;
  }

  setOverride(path: string, value: unknown): void {
    this.pending[path] = value;
  }

  clearOverride(path: string): void {
    delete this.pending[path];
  }

  /** Problems with the pending overrides; empty means safe to submit. */
  validatePending(): Problem[] {
    const scale = this.detail?.scenario.scale;
    return checkOverrides(this.pending, scale);
  }

  /**
   * Simulate the active scenario with the pending overrides. Rejects with
   * OverridesInvalid, without any network traffic, when client-side
   * validation fails; pending edits are kept on every failure path.
   */
  submit(): Promise<SimulateResponse> {
    if (this.scenario === null) {
      return Promise.reject(new Error("no scenario selected"));
    }
    const problems = this.validatePending();
    if (problems.length > 0) {
      return Promise.reject(new OverridesInvalid(problems));
    }
    const request = {
      scenario: this.scenario,
      overrides: { ...this.pending },
    };
    const run = this.queue.then(
      () => this.client.simulate(request),
      () => this.client.simulate(request), // queue survives earlier failures
    );
    this.queue = run.catch(() => undefined);
    return run.then((resp) => {
      this.lastRun = resp;
      return resp;
    });
  }

  pin(resp: SimulateResponse, label?: string): PinnedRun {
    const pinnedRun = {
      runId: resp.run_id,
      label: label ?? `${resp.scenario} ${resp.run_id.slice(0, 6)}`,
      resp,
    };
    if (!this.pinned.some((p) => p.runId === pinnedRun.runId)) {
      this.pinned.push(pinnedRun);
    }
    return pinnedRun;
  }

  unpin(runId: string): void {
    this.pinned = this.pinned.filter((p) => p.runId !== runId);
  }
}

export { RequestFailed };
