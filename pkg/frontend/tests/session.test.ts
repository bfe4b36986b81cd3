import { describe, expect, it } from "vitest";

import { Client, SimulateResponse } from "../src/api.js";
import { UiSession } from "../src/session.js";
import { fakeFetch, table1Default, table1Detail } from "./helpers.js";

function deferred<T>() {
  let resolve!: (value: T) => void;
  let reject!: (err: unknown) => void;
  const promise = new Promise<T>((res, rej) => {
    resolve = res;
    reject = rej;
  });
  return { promise, resolve, reject };
}

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status, headers: { "Content-Type": "application/json" },
  });
}

async function openedSession() {
  const log = fakeFetch({
    "GET /api/scenarios/table1": () => ({ body: table1Detail() }),
    "POST /api/simulate": () => ({ body: table1Default() }),
  });
  const session = new UiSession(new Client("", log.fetchFn));
  await session.open("table1");
  log.calls.length = 0;
  return { log, session };
}

describe("submit queue", () => {
  it("keeps at most one simulate request in flight", async () => {
    const gates = [deferred<Response>(), deferred<Response>()];
    let simulateCalls = 0;
    const fetchFn = async (url: string): Promise<Response> => {
      if (url === "/api/scenarios/table1") return jsonResponse(table1Detail());
      return gates[simulateCalls++].promise;
    };
    const session = new UiSession(new Client("", fetchFn));
    await session.open("table1");

    const first = session.submit();
    session.setOverride("behavior.wta", 0.9);
    const second = session.submit();
    await Promise.resolve(); // give the queue a chance to misbehave
    expect(simulateCalls).toBe(1);

    gates[0].resolve(jsonResponse(table1Default()));
    await first;
    await new Promise((r) => setTimeout(r, 0)); // drain queued microtasks
    expect(simulateCalls).toBe(2);

    gates[1].resolve(jsonResponse(table1Default()));
    await second;
    expect(session.lastRun).not.toBeNull();
  });

  it("a failed run does not wedge the queue", async () => {
    let simulateCalls = 0;
    const fetchFn = async (url: string): Promise<Response> => {
      if (url === "/api/scenarios/table1") return jsonResponse(table1Detail());
      simulateCalls += 1;
      if (simulateCalls === 1) {
        return jsonResponse({ code: "boom", message: "backend fell over", path: "" }, 500);
      }
      return jsonResponse(table1Default());
    };
    const session = new UiSession(new Client("", fetchFn));
    await session.open("table1");

    await expect(session.submit()).rejects.toThrow("backend fell over");
    const resp = await session.submit();
    expect(resp.run_id).toBe(table1Default().run_id);
    expect(simulateCalls).toBe(2);
  });

  it("rejects without fetching when no scenario is open", async () => {
    const log = fakeFetch({});
    const session = new UiSession(new Client("", log.fetchFn));
    await expect(session.submit()).rejects.toThrow("no scenario");
    expect(log.calls).toHaveLength(0);
  });
});

describe("overrides lifecycle", () => {
  it("clearOverride removes a single path", async () => {
    const { session } = await openedSession();
    session.setOverride("behavior.wta", 0.7);
    session.setOverride("behavior.decay", 3);
    session.clearOverride("behavior.wta");
    expect(session.pending).toEqual({ "behavior.decay": 3 });
  });

  it("opening a scenario resets pending overrides", async () => {
    const { session } = await openedSession();
    session.setOverride("behavior.wta", 0.7);
    await session.open("table1");
    expect(session.pending).toEqual({});
    expect(session.scenario).toBe("table1");
  });

  it("validatePending uses the open scenario's score scale", async () => {
    const { session } = await openedSession();
    session.setOverride("panel.perf.0.0.0", 12); // table1 scores run 1..10
    const problems = session.validatePending();
    expect(problems).toHaveLength(1);
    expect(problems[0].path).toBe("panel.perf.0.0.0");
  });
});

describe("pinned runs", () => {
  const run = (runId: string): SimulateResponse => ({
    ...table1Default(), run_id: runId,
  });

  it("pins with a default label and dedupes by run id", async () => {
    const { session } = await openedSession();
    const pinnedRun = session.pin(run("abcdef123456"));
    expect(pinnedRun.label).toBe("table1 abcdef");
    session.pin(run("abcdef123456"), "again");
    expect(session.pinned).toHaveLength(1);
    expect(session.pinned[0].label).toBe("table1 abcdef");
  });

  it("unpin removes only the matching run", async () => {
    const { session } = await openedSession();
    session.pin(run("aaa000000000"), "base");
    session.pin(run("bbb111111111"), "concentrated");
    session.unpin("aaa000000000");
    expect(session.pinned.map((p) => p.label)).toEqual(["concentrated"]);
  });
});
