import { describe, expect, it } from "vitest";
import { TraceSeries } from "../src/trace.js";

function event(seq: number, powerDb: number, accepted: boolean) {
  return { seq, iteration: seq, power_db: powerDb, accepted };
}

describe("TraceSeries", () => {
  it("appends in-order events and exposes accepted points", () => {
    const series = new TraceSeries();
    expect(series.push(event(0, 24.0, true))).toBe(true);
    expect(series.push(event(1, 23.1, false))).toBe(true);
    expect(series.push(event(2, 25.5, true))).toBe(true);
    expect(series.acceptedPoints()).toEqual([
      { iteration: 0, powerDb: 24.0 },
      { iteration: 2, powerDb: 25.5 },
    ]);
    expect(series.improvementDb()).toBeCloseTo(1.5, 12);
    expect(series.isAcceptedMonotone()).toBe(true);
    expect(series.gapDetected).toBe(false);
  });

  it("ignores replayed events", () => {
    const series = new TraceSeries();
    series.push(event(0, 24.0, true));
    series.push(event(1, 25.0, true));
    expect(series.push(event(0, 24.0, true))).toBe(false);
    expect(series.events).toHaveLength(2);
    expect(series.gapDetected).toBe(false);
  });

  it("flags a sequence gap instead of rendering out of order", () => {
    const series = new TraceSeries();
    series.push(event(0, 24.0, true));
    expect(series.push(event(2, 26.0, true))).toBe(false);
    expect(series.gapDetected).toBe(true);
    expect(series.events).toHaveLength(1);
  });

  it("detects non-monotone accepted points", () => {
    const series = new TraceSeries();
    series.push(event(0, 24.0, true));
    series.push(event(1, 22.0, true));
    expect(series.isAcceptedMonotone()).toBe(false);
  });

  it("reset clears state for a fresh stream", () => {
    const series = new TraceSeries();
    series.push(event(0, 24.0, true));
    series.push(event(2, 25.0, true));
    series.reset();
    expect(series.events).toHaveLength(0);
    expect(series.gapDetected).toBe(false);
    expect(series.improvementDb()).toBeNull();
  });
});
