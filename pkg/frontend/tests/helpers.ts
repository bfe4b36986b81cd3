import { readFileSync } from "node:fs";

import type { ScenarioDetail, SimulateResponse } from "../src/api.js";

export function loadFixture<T>(name: string): T {
  const url = new URL(`./fixtures/${name}`, import.meta.url);
  return JSON.parse(readFileSync(url, "utf-8")) as T;
}

export const table1Default = () =>
  loadFixture<SimulateResponse>("simulate_table1_wta03.json");
export const table1FullWta = () =>
  loadFixture<SimulateResponse>("simulate_table1_wta1.json");
export const table1Detail = () =>
  loadFixture<ScenarioDetail>("scenario_table1.json");

export interface FetchLog {
  calls: { url: string; init?: RequestInit }[];
  fetchFn: (url: string, init?: RequestInit) => Promise<Response>;
}

/** A fetch stub that records every call and answers from a routing table. */
export function fakeFetch(
  routes: Record<string, () => { status?: number; body: unknown }>,
): FetchLog {
  const log: FetchLog = {
    calls: [],
    fetchFn: async (url, init) => {
      log.calls.push({ url, init });
      const key = `${init?.method ?? "GET"} ${url}`;
      const route = routes[key];
      if (!route) {
        return new Response(JSON.stringify({
          code: "not_found", message: `no route ${key}`, path: "",
        }), { status: 404, headers: { "Content-Type": "application/json" } });
      }
      const { status = 200, body } = route();
      return new Response(JSON.stringify(body), {
        status, headers: { "Content-Type": "application/json" },
      });
    },
  };
  return log;
}
