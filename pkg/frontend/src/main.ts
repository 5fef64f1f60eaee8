/**
 * Operator console wiring: four panels (steer / optimize / sweep / blocks)
 * over the testbed JSON API. All physics lives server-side; this file only
 * renders what the service returns.
 */

import { ApiError, TestbedClient, type BlocksResponse, type ScenarioDoc, type SweepRow } from "./api.js";
import { renderLineChart } from "./charts.js";
import { bitsToHex, hexToBits, setBlockBits, totalCols, totalRows, type GeometrySummary } from "./hex.js";
import { renderHeatmap } from "./heatmap.js";
import { TraceSeries } from "./trace.js";

const baseUrl = new URL(".", location.href).pathname.startsWith("/ui")
  ? location.origin
  : (localStorage.getItem("ristwin-url") ?? "http://127.0.0.1:8000");
const client = new TestbedClient(baseUrl);

const els = {
  connection: byId("connection"),
  scenarioSummary: byId("scenario-summary"),
  power: byId("power"),
  pending: byId("pending"),
  heatmap: byId("heatmap"),
  configHex: byId("config-hex"),
  steerForm: byId("steer-form") as HTMLFormElement,
  steerError: byId("steer-error"),
  optimizeForm: byId("optimize-form") as HTMLFormElement,
  optimizeError: byId("optimize-error"),
  traceChart: byId("trace-chart") as unknown as SVGSVGElement,
  traceStatus: byId("trace-status"),
  exportFinal: byId("export-final") as HTMLButtonElement,
  sweepButton: byId("sweep-button") as HTMLButtonElement,
  sweepError: byId("sweep-error"),
  sweepChart: byId("sweep-chart") as unknown as SVGSVGElement,
  blocksBody: byId("blocks-body"),
  blockAddress: byId("block-address") as HTMLSelectElement,
  blockFill: byId("block-fill") as HTMLSelectElement,
  blockApply: byId("block-apply") as HTMLButtonElement,
  blocksError: byId("blocks-error"),
};

function byId(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el;
}

interface ConsoleState {
  scenario: ScenarioDoc | null;
  geometry: GeometrySummary | null;
  bits: number[][];
  configHex: string;
  powerDb: number | null;
  runStatus: string;
  busy: boolean; // one in-flight mutation at a time
  trace: TraceSeries;
  finalHex: string | null;
}

const state: ConsoleState = {
  scenario: null,
  geometry: null,
  bits: [],
  configHex: "",
  powerDb: null,
  runStatus: "idle",
  busy: false,
  trace: new TraceSeries(),
  finalHex: null,
};

function setConnection(text: string, ok: boolean): void {
  els.connection.textContent = text;
  els.connection.className = ok ? "status-ok" : "status-bad";
}

function setPending(action: string | null): void {
  state.busy = action !== null;
  els.pending.textContent = action ? `busy: ${action}` : "";
  const mutating = state.busy || state.runStatus !== "idle";
  document.querySelectorAll<HTMLButtonElement>("button, input, select").forEach((el) => {
    if (el.dataset.alwaysOn === undefined) el.disabled = mutating;
  });
}

function showError(target: HTMLElement, error: unknown): void {
  const text = error instanceof ApiError ? `${error.code}: ${error.message}` : String(error);
  target.textContent = text;
}

function clearErrors(): void {
  for (const el of [els.steerError, els.optimizeError, els.sweepError, els.blocksError]) {
    el.textContent = "";
  }
}

function renderPower(): void {
  els.power.textContent = state.powerDb === null ? "-" : `${state.powerDb.toFixed(2)} dB`;
}

function renderConfig(): void {
  if (state.geometry) {
    renderHeatmap(els.heatmap, state.bits);
  }
  els.configHex.textContent = state.configHex;
}

function applyBlocksResponse(doc: { power_db: number; config_hex: string }): void {
  state.powerDb = doc.power_db;
  state.configHex = doc.config_hex;
  if (state.geometry) {
    state.bits = hexToBits(doc.config_hex, totalRows(state.geometry), totalCols(state.geometry));
  }
  renderPower();
  renderConfig();
}

function renderBlocksTable(doc: BlocksResponse): void {
  state.runStatus = doc.run_status;
  els.blocksBody.innerHTML = doc.blocks
    .map(
      (b) => `<tr><td>${b.address}</td><td>${b.mode}</td><td>${b.powered ? "yes" : "no"}</td>` +
        `<td>${b.configured ? "yes" : "no"}</td><td>${b.frames_seen}</td><td>${b.last_error ?? "-"}</td></tr>`,
    )
    .join("");
  const unique = [...new Set(doc.blocks.map((b) => b.address))].sort((a, b) => a - b);
  els.blockAddress.innerHTML = unique.map((a) => `<option value="${a}">block ${a}</option>`).join("");
}

function renderTrace(): void {
  const accepted = state.trace.acceptedPoints();
  const all = state.trace.allPoints();
  renderLineChart(
    els.traceChart,
    [
      { xs: all.map((p) => p.iteration), ys: all.map((p) => p.powerDb), color: "#9db2c6", label: "probes" },
      { xs: accepted.map((p) => p.iteration), ys: accepted.map((p) => p.powerDb), color: "#0b6e4f", label: "accepted" },
    ],
    "probe",
    "power (dB)",
  );
  const improvement = state.trace.improvementDb();
  const suffix = improvement === null ? "" : `, rise ${improvement.toFixed(2)} dB`;
  const gap = state.trace.gapDetected ? " [gap detected - resync]" : "";
  els.traceStatus.textContent = `${state.trace.events.length} probes${suffix}${gap}`;
}

function renderSweep(rows: SweepRow[]): void {
  renderLineChart(
    els.sweepChart,
    [
      { xs: rows.map((r) => r.freq_hz / 1e9), ys: rows.map((r) => r.gain_db_config), color: "#0b6e4f", label: "configured" },
      { xs: rows.map((r) => r.freq_hz / 1e9), ys: rows.map((r) => r.gain_db_base), color: "#b3422e", label: "baseline (all OFF)" },
    ],
    "frequency (GHz)",
    "received power (dB)",
  );
}

async function refresh(): Promise<void> {
  const doc = await client.blocks();
  renderBlocksTable(doc);
  applyBlocksResponse(doc);
}

async function connect(): Promise<void> {
  try {
    const scenario = await client.scenario();
    state.scenario = scenario;
    state.geometry = {
      blockRows: scenario.geometry.block_rows,
      blockCols: scenario.geometry.block_cols,
      tileRows: scenario.geometry.tile_rows,
      tileCols: scenario.geometry.tile_cols,
    };
    const g = state.geometry;
    els.scenarioSummary.textContent =
      `${totalRows(g)}x${totalCols(g)} elements (${g.tileRows}x${g.tileCols} blocks), ` +
      `probe ${(scenario.f_probe_hz / 1e9).toFixed(2)} GHz, offset ${scenario.offset_db} dB`;
    await refresh();
    setConnection(`connected to ${baseUrl}`, true);
  } catch (error) {
    setConnection(`connection failed (${String(error)}) - retrying`, false);
    setTimeout(connect, 2000);
  }
}

// -- steering panel

els.steerForm.addEventListener("submit", async (event) => {
  event.preventDefault();
  clearErrors();
  const theta = Number((byId("steer-theta") as HTMLInputElement).value);
  const phi = Number((byId("steer-phi") as HTMLInputElement).value);
  setPending("steering");
  try {
    applyBlocksResponse(await client.steer(theta, phi));
  } catch (error) {
    showError(els.steerError, error);
  } finally {
    setPending(null);
    await refresh().catch(() => undefined);
  }
});

// -- optimize panel

async function followTrace(): Promise<void> {
  state.trace.reset();
  els.exportFinal.disabled = true;
  let attempts = 0;
  for (;;) {
    try {
      await client.streamTrace((event) => {
        if (state.trace.push(event)) {
          renderTrace();
        }
      });
      break;
    } catch (error) {
      attempts += 1;
      els.traceStatus.textContent = `stream disconnected (${String(error)}) - reconnecting (${attempts})`;
      if (attempts >= 10) throw error;
      await new Promise((resolve) => setTimeout(resolve, 1000));
      state.trace.reset();
    }
  }
  renderTrace();
}

els.optimizeForm.addEventListener("submit", async (event) => {
  event.preventDefault();
  clearErrors();
  const passes = Number((byId("optimize-passes") as HTMLInputElement).value);
  const seed = Number((byId("optimize-seed") as HTMLInputElement).value);
  setPending("optimizing");
  try {
    await client.optimize(passes, 0.0, seed);
    await followTrace();
    const final = await client.final();
    state.finalHex = final.config_hex;
    els.exportFinal.disabled = false;
  } catch (error) {
    showError(els.optimizeError, error);
  } finally {
    setPending(null);
    await refresh().catch(() => undefined);
  }
});

els.exportFinal.addEventListener("click", () => {
  if (state.finalHex === null) return;
  const blob = new Blob([state.finalHex + "\n"], { type: "text/plain" });
  const link = document.createElement("a");
  link.href = URL.createObjectURL(blob);
  link.download = "final.hex";
  link.click();
  URL.revokeObjectURL(link.href);
});

// -- sweep panel

els.sweepButton.addEventListener("click", async () => {
  clearErrors();
  setPending("sweeping");
  try {
    const { rows } = await client.sweep(state.configHex);
    renderSweep(rows);
  } catch (error) {
    showError(els.sweepError, error);
  } finally {
    setPending(null);
  }
});

// -- blocks panel (manual single-block debug write)

els.blockApply.addEventListener("click", async () => {
  clearErrors();
  if (!state.geometry) return;
  const address = Number(els.blockAddress.value);
  const value = els.blockFill.value === "on" ? 1 : 0;
  setPending("writing block");
  try {
    const bits = setBlockBits(state.bits, state.geometry, address, value as 0 | 1);
    applyBlocksResponse(await client.applyConfig(bitsToHex(bits)));
  } catch (error) {
    showError(els.blocksError, error);
  } finally {
    setPending(null);
    await refresh().catch(() => undefined);
  }
});

connect();
