import { describe, expect, it } from "vitest";
import { DEFAULT_VIEWPORT, extent, linearScale, polylinePoints, ticks } from "../src/charts.js";

describe("scales", () => {
  it("maps the domain linearly onto the range", () => {
    const scale = linearScale(0, 10, 100, 200);
    expect(scale(0)).toBe(100);
    expect(scale(10)).toBe(200);
    expect(scale(5)).toBe(150);
  });

  it("collapses a degenerate domain to the range midpoint", () => {
    const scale = linearScale(3, 3, 0, 100);
    expect(scale(3)).toBe(50);
  });
});

describe("extent", () => {
  it("finds min and max", () => {
    expect(extent([3, -1, 7, 2])).toEqual([-1, 7]);
  });

  it("widens a flat series", () => {
    expect(extent([5, 5])).toEqual([4.5, 5.5]);
  });

  it("falls back for empty input", () => {
    expect(extent([])).toEqual([0, 1]);
  });
});

describe("ticks", () => {
  it("produces round steps covering the span", () => {
    const t = ticks(0, 100, 5);
    expect(t[0]).toBe(0);
    expect(t[t.length - 1]).toBe(100);
    expect(t).toContain(20);
  });

  it("handles fractional spans", () => {
    const t = ticks(24.0, 25.5, 5);
    expect(t.every((v) => v >= 24.0 && v <= 25.5)).toBe(true);
    expect(t.length).toBeGreaterThan(2);
  });
});

describe("polylinePoints", () => {
  it("emits one svg point per sample inside the viewport", () => {
    const points = polylinePoints(
      { xs: [0, 1, 2], ys: [0, 1, 0] },
      DEFAULT_VIEWPORT,
      [0, 2],
      [0, 1],
    );
    const pairs = points.split(" ").map((p) => p.split(",").map(Number));
    expect(pairs).toHaveLength(3);
    expect(pairs[0][0]).toBeCloseTo(DEFAULT_VIEWPORT.padLeft, 6);
    expect(pairs[2][0]).toBeCloseTo(DEFAULT_VIEWPORT.width - DEFAULT_VIEWPORT.padRight, 6);
    // y axis is inverted: larger value -> smaller pixel y
    expect(pairs[1][1]).toBeLessThan(pairs[0][1]);
  });
});
