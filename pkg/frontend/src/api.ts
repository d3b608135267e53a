// Typed client for the campaign service. Calls reject with ServiceError
// when the server answered with an error document, and with the raw fetch
// error (TypeError) when the network is down — callers tell them apart.

export interface VariableDef {
  name: string;
  lower: number;
  upper: number;
}

export interface AcquisitionParams {
  kind: string;
  pi: number | null;
  lam: number | null;
  kg_quadrature: number | null;
  pes_star_samples: number | null;
}

export interface CreateCampaignRequest {
  variables: VariableDef[];
  kernel: string;
  acquisition: { kind: string };
  budget?: number;
  seed: number;
  initial_replicates: number;
}

export interface ObservationRow {
  x: number[];
  y: number;
  at: string;
  note: string | null;
}

export interface BestObserved {
  x: number[];
  y: number;
}

export interface CampaignState {
  schema: number;
  id: string;
  created: string;
  status: string;
  variables: VariableDef[];
  kernel: string;
  acquisition: AcquisitionParams;
  seed: number;
  budget: number | null;
  initial_plan: number[][];
  n_obs: number;
  observations: ObservationRow[];
  recommendation: number[] | null;
  predicted_mean: number | null;
  best_observed: BestObserved | null;
}

export interface Suggestion {
  x: number[];
  n_obs: number;
  source: string;
  fallback: boolean;
  mu: number | null;
  s2: number | null;
  acquisition: number | null;
  budget_exhausted: boolean;
}

export interface SlicePayload {
  axis: number;
  variable: string;
  anchor: number[];
  x: number[];
  mean: number[];
  variance: number[];
  acquisition: number[];
  model_n_obs: number;
}

export interface TellSummary {
  id: string;
  status: string;
  n_obs: number;
  recommendation: number[] | null;
  predicted_mean: number | null;
  best_observed: BestObserved | null;
}

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
    readonly field: string | null = null,
  ) {
    super(message);
  }
}

let base = "";

/** Point the client at a service on another origin ("" = same origin). */
export function setApiBase(url: string): void {
  base = url.replace(/\/+$/, "");
}

async function request<T>(method: string, path: string, body?: unknown): Promise<T> {
  const init: RequestInit = { method };
  if (body !== undefined) {
    init.headers = { "Content-Type": "application/json" };
    init.body = JSON.stringify(body);
  }
  const r = await fetch(base + path, init);
  const doc = await r.json();
  if (!r.ok) {
    throw new ServiceError(
      r.status,
      doc.code ?? "error",
      doc.message ?? `request failed with status ${r.status}`,
      doc.field ?? null,
    );
  }
  return doc as T;
}

export function createCampaign(req: CreateCampaignRequest): Promise<CampaignState> {
  return request("POST", "/campaigns", req);
}

export function getCampaign(id: string): Promise<CampaignState> {
  return request("GET", `/campaigns/${id}`);
}

export function postObservation(
  id: string,
  obs: { x: number[]; y: number; note: string | null },
): Promise<TellSummary> {
  return request("POST", `/campaigns/${id}/observations`, obs);
}

export function getSuggestion(id: string): Promise<Suggestion> {
  return request("GET", `/campaigns/${id}/suggestion`);
}

export function getSlice(id: string, axis: number, resolution = 101): Promise<SlicePayload> {
  return request("GET", `/campaigns/${id}/slice?axis=${axis}&resolution=${resolution}`);
}

export function closeCampaign(id: string): Promise<{ id: string; status: string; n_obs: number }> {
  return request("POST", `/campaigns/${id}/close`);
}
