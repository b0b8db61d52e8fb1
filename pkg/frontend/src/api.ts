// Thin client for the serving API. GET-only: the console can never change
// server state.

export interface ResultEntry {
  entity: string;
  distance: number;
  hubness: number;
  confidence?: number;
}

export interface QueryPayload {
  query: string;
  results: ResultEntry[];
  removed_hubs: ResultEntry[];
}

export interface Stats {
  entities: number;
  dim: number;
  input_dim: number;
  hubness_cutoff: number;
  k_h: number;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function getJson<T>(url: string, signal?: AbortSignal): Promise<T> {
  const response = await fetch(url, { signal });
  if (!response.ok) {
    let message = `request failed with status ${response.status}`;
    try {
      const body = await response.json();
      if (body && typeof body.error === "string") message = body.error;
    } catch {
      // non-JSON error body; keep the generic message
    }
    throw new ApiError(response.status, message);
  }
  return response.json() as Promise<T>;
}

export function queryEntity(
  base: string,
  entity: string,
  k: number,
  confidence: boolean,
  signal?: AbortSignal,
): Promise<QueryPayload> {
  const params = new URLSearchParams({ entity, k: String(k) });
  if (confidence) params.set("confidence", "true");
  return getJson<QueryPayload>(`${base}/api/query?${params}`, signal);
}

export function suggestEntities(base: string, prefix: string, limit = 10): Promise<string[]> {
  const params = new URLSearchParams({ prefix, limit: String(limit) });
  return getJson<string[]>(`${base}/api/entities?${params}`);
}

export function fetchStats(base: string): Promise<Stats> {
  return getJson<Stats>(`${base}/api/stats`);
}
