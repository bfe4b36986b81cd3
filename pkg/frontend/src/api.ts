// Typed client for the scenario service. Every number the UI shows comes
// out of these responses; nothing is recomputed on the client.

export interface Diagnostic {
  code: string;
  message: string;
  path: string;
}

export interface ApiError extends Diagnostic {
  diagnostics?: Diagnostic[];
}

export class RequestFailed extends Error {
  constructor(readonly status: number, readonly error: ApiError) {
    super(`HTTP ${status} [${error.code}] ${error.message}`);
    this.name = "RequestFailed";
  }
}

export interface ScenarioSummary {
  name: string;
  segments: string[];
  attributes: string[];
  horizon: number;
  dt: number;
  method: string;
}

export interface ScenarioDetail {
  name: string;
  scenario: ScenarioTree;
}

// The resolved scenario document; only the parts the UI reads are typed.
export interface ScenarioTree {
  name: string;
  scale: { s_min: number; s_max: number };
  segments: string[];
  attributes: string[];
  panel: {
    interpolation: string;
    times: number[];
    perf: number[][][];
    imp: number[][][];
  };
  behavior: Record<string, number | string | boolean>;
  integrator: { method: string; dt: number; horizon: number };
  [key: string]: unknown;
}

export interface TrajectoryTree {
  times: number[];
  sizes: number[][];
  shares: number[][];
  cum_bnd: number[][];
  cum_rd: number[][];
  cum_od: number[][];
  rate_od: number[][];
  rate_rd: number[][];
  rate_bnd: number[][];
  params_used: Record<string, number | string | boolean>;
  scenario_id: string;
}

export interface SeriesTree {
  t: number[];
  market: Record<string, number[]>;
  market_mod: Record<string, number[]>;
  h_market: Record<string, number[]>;
  i_max: number[];
}

export interface SimulateResponse {
  run_id: string;
  scenario: string;
  segments: string[];
  trajectory: TrajectoryTree;
  series: SeriesTree;
}

export interface SimulateRequest {
  scenario?: string;
  doc?: ScenarioTree;
  overrides?: Record<string, unknown>;
}

export interface FitRequest extends SimulateRequest {
  observed_csv: string;
  spec?: unknown[];
  budget?: number;
  seed?: number;
}

export interface FitResponse {
  scenario: string;
  fit: {
    best: Record<string, number>;
    loss: number;
    trace: number[];
    evaluations: number;
    converged: boolean;
    seed: number;
    sensitivity: Record<string, number[]>;
  };
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class Client {
  constructor(
    private readonly base: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  async listScenarios(): Promise<ScenarioSummary[]> {
    const body = await this.request<{ scenarios: ScenarioSummary[] }>(
      "GET", "/api/scenarios");
    return body.scenarios;
  }

  getScenario(name: string): Promise<ScenarioDetail> {
    return this.request("GET", `/api/scenarios/${encodeURIComponent(name)}`);
  }

  simulate(req: SimulateRequest): Promise<SimulateResponse> {
    return this.request("POST", "/api/simulate", req);
  }

  fit(req: FitRequest): Promise<FitResponse> {
    return this.request("POST", "/api/fit", req);
  }

  getRun(runId: string): Promise<SimulateResponse> {
    return this.request("GET", `/api/runs/${encodeURIComponent(runId)}`);
  }

  private async request<R>(method: string, path: string, body?: unknown): Promise<R> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "Content-Type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const resp = await this.fetchFn(this.base + path, init);
    if (!resp.ok) {
      let error: ApiError;
      try {
        error = (await resp.json()) as ApiError;
      } catch {
        error = { code: "http_error", message: resp.statusText, path: "" };
      }
      throw new RequestFailed(resp.status, error);
    }
    return (await resp.json()) as R;
  }
}
