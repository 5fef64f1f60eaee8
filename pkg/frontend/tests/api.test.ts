import { afterEach, describe, expect, it, vi } from "vitest";
import { ApiError, parseSseBlock, TestbedClient } from "../src/api.js";
import type { TraceEvent } from "../src/api.js";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("TestbedClient", () => {
  it("hits the expected endpoint and payload for steer", async () => {
    const fetchMock = vi.fn(async () =>
      jsonResponse({ blocks: { "0": "ok" }, power_db: 24.0, config_hex: "00" }),
    );
    vi.stubGlobal("fetch", fetchMock);
    const client = new TestbedClient("http://tb:8000");
    await client.steer(30, 90);
    expect(fetchMock).toHaveBeenCalledWith("http://tb:8000/steer", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ theta_deg: 30, phi_deg: 90 }),
    });
  });

  it("omits the baseline field when not given", async () => {
    const fetchMock = vi.fn(async () => jsonResponse({ rows: [] }));
    vi.stubGlobal("fetch", fetchMock);
    await new TestbedClient("http://tb").sweep("ff00");
    const body = JSON.parse((fetchMock.mock.calls[0][1] as RequestInit).body as string);
    expect(body).toEqual({ config_a_hex: "ff00" });
  });

  it("maps service error JSON onto ApiError", async () => {
    vi.stubGlobal("fetch", vi.fn(async () =>
      jsonResponse({ code: "BUSY", message: "testbed is optimizing", context: {} }, 409),
    ));
    const client = new TestbedClient("http://tb");
    const error = await client.applyConfig("00").catch((e) => e);
    expect(error).toBeInstanceOf(ApiError);
    expect(error.status).toBe(409);
    expect(error.code).toBe("BUSY");
  });

  it("streams SSE events until the done marker", async () => {
    const chunks = [
      'id: 0\ndata: {"seq": 0, "iteration": 0, "power_db": 24.0, "accepted": true}\n\n',
      'id: 1\ndata: {"seq": 1, "iteration": 1, "power_db": 25.0, "accepted": true}\n\nevent: done\ndata: {}\n\n',
    ];
    const stream = new ReadableStream<Uint8Array>({
      start(controller) {
        const encoder = new TextEncoder();
        for (const chunk of chunks) controller.enqueue(encoder.encode(chunk));
        controller.close();
      },
    });
    vi.stubGlobal("fetch", vi.fn(async () =>
      new Response(stream, { status: 200, headers: { "content-type": "text/event-stream" } }),
    ));
    const got: TraceEvent[] = [];
    await new TestbedClient("http://tb").streamTrace((e) => got.push(e));
    expect(got.map((e) => e.seq)).toEqual([0, 1]);
  });
});

describe("parseSseBlock", () => {
  it("parses data lines and skips empty payloads", () => {
    const got: TraceEvent[] = [];
    const done = parseSseBlock('data: {"seq": 3, "iteration": 3, "power_db": 1.0, "accepted": false}', (e) =>
      got.push(e),
    );
    expect(done).toBe(false);
    expect(got[0].seq).toBe(3);
  });

  it("signals the done event", () => {
    expect(parseSseBlock("event: done\ndata: {}", () => undefined)).toBe(true);
  });
});
