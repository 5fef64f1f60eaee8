/** Typed client for the testbed JSON API and its trace event stream. */

export interface GeometryDoc {
  block_rows: number;
  block_cols: number;
  tile_rows: number;
  tile_cols: number;
  pitch_m: number;
}

export interface ScenarioDoc {
  schema_version: number;
  geometry: GeometryDoc;
  placement: { tx_pos: number[]; rx_pos: number[] };
  f_probe_hz: number;
  f_grid_hz: number[];
  offset_db: number;
  noise_sigma_db: number;
  seed: number;
}

export interface BlockInfo {
  address: number;
  mode: string;
  powered: boolean;
  configured: boolean;
  frames_seen: number;
  last_error: string | null;
}

export interface BlocksResponse {
  blocks: BlockInfo[];
  run_status: string;
  power_db: number;
  config_hex: string;
}

export interface ApplyResponse {
  blocks: Record<string, string>;
  power_db: number;
  config_hex: string;
}

export interface SweepRow {
  freq_hz: number;
  gain_db_config: number;
  gain_db_base: number;
}

export interface TraceEvent {
  seq: number;
  iteration: number;
  power_db: number;
  accepted: boolean;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

async function toApiError(response: Response): Promise<ApiError> {
  let code = `HTTP_${response.status}`;
  let message = response.statusText;
  try {
    const body = await response.json();
    if (body.code) code = body.code;
    if (body.message) message = body.message;
    else if (body.detail) message = JSON.stringify(body.detail);
  } catch {
    /* non-JSON error body */
  }
  return new ApiError(response.status, code, message);
}

export class TestbedClient {
  constructor(readonly baseUrl: string) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.baseUrl + path, init);
    if (!response.ok) {
      throw await toApiError(response);
    }
    return (await response.json()) as T;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  scenario(): Promise<ScenarioDoc> {
    return this.request<ScenarioDoc>("/scenario");
  }

  blocks(): Promise<BlocksResponse> {
    return this.request<BlocksResponse>("/blocks");
  }

  applyConfig(configHex: string): Promise<ApplyResponse> {
    return this.post<ApplyResponse>("/config", { config_hex: configHex });
  }

  steer(thetaDeg: number, phiDeg: number): Promise<ApplyResponse> {
    return this.post<ApplyResponse>("/steer", { theta_deg: thetaDeg, phi_deg: phiDeg });
  }

  optimize(passes: number, epsilonDb: number, seed: number): Promise<{ status: string }> {
    return this.post<{ status: string }>("/optimize", {
      passes,
      epsilon_db: epsilonDb,
      seed,
    });
  }

  sweep(configAHex: string, configBHex?: string): Promise<{ rows: SweepRow[] }> {
    const body: Record<string, string> = { config_a_hex: configAHex };
    if (configBHex !== undefined) body.config_b_hex = configBHex;
    return this.post<{ rows: SweepRow[] }>("/sweep", body);
  }

  final(): Promise<{ config_hex: string; improvement_db: number }> {
    return this.request<{ config_hex: string; improvement_db: number }>("/final");
  }

  /**
   * Consume the /trace server-sent-event stream. Resolves when the server
   * signals `event: done`; rejects on network failure so callers can show
   * a reconnect state. Implemented over fetch streaming so it runs in both
   * the browser and node.
   */
  async streamTrace(onEvent: (event: TraceEvent) => void, signal?: AbortSignal): Promise<void> {
    const response = await fetch(this.baseUrl + "/trace", { signal });
    if (!response.ok || response.body === null) {
      throw await toApiError(response);
    }
    const reader = response.body.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    for (;;) {
      const { value, done } = await reader.read();
      if (done) return; // stream closed without done event: treat as end
      buffer += decoder.decode(value, { stream: true });
      let cut;
      while ((cut = buffer.indexOf("\n\n")) >= 0) {
        const block = buffer.slice(0, cut);
        buffer = buffer.slice(cut + 2);
        if (parseSseBlock(block, onEvent)) {
          reader.cancel().catch(() => undefined);
          return;
        }
      }
    }
  }
}

/** Returns true when the block carries the terminal `done` event. */
export function parseSseBlock(block: string, onEvent: (event: TraceEvent) => void): boolean {
  let isDone = false;
  for (const line of block.split("\n")) {
    if (line.startsWith("event: ") && line.slice(7).trim() === "done") {
      isDone = true;
    } else if (line.startsWith("data: ")) {
      const payload = line.slice(6).trim();
      if (payload && payload !== "{}") {
        onEvent(JSON.parse(payload) as TraceEvent);
      }
    }
  }
  return isDone;
}
