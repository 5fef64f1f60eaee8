/** Minimal SVG line-chart helpers; geometry is pure and unit-tested. */

export interface Viewport {
  width: number;
  height: number;
  padLeft: number;
  padRight: number;
  padTop: number;
  padBottom: number;
}

export const DEFAULT_VIEWPORT: Viewport = {
  width: 560,
  height: 260,
  padLeft: 52,
  padRight: 12,
  padTop: 10,
  padBottom: 30,
};

export function linearScale(d0: number, d1: number, r0: number, r1: number): (x: number) => number {
  const span = d1 - d0;
  if (span === 0) {
    return () => (r0 + r1) / 2;
  }
  return (x: number) => r0 + ((x - d0) / span) * (r1 - r0);
}

export function extent(values: number[]): [number, number] {
  if (values.length === 0) return [0, 1];
  let lo = values[0];
  let hi = values[0];
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (lo === hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  return [lo, hi];
}

export function ticks(lo: number, hi: number, count: number): number[] {
  const rawStep = (hi - lo) / Math.max(count, 1);
  const magnitude = 10 ** Math.floor(Math.log10(rawStep));
  const residual = rawStep / magnitude;
  const factor = residual >= Math.sqrt(50) ? 10 : residual >= Math.sqrt(10) ? 5 : residual >= Math.sqrt(2) ? 2 : 1;
  const step = magnitude * factor;
  const start = Math.ceil(lo / step) * step;
  const out: number[] = [];
  for (let v = start; v <= hi + step * 1e-9; v += step) {
    out.push(Number(v.toFixed(12)));
  }
  return out;
}

export interface Series {
  xs: number[];
  ys: number[];
  color: string;
  label: string;
}

/** "x1,y1 x2,y2 ..." for an SVG polyline within the viewport. */
export function polylinePoints(series: { xs: number[]; ys: number[] }, vp: Viewport,
                               xDomain: [number, number], yDomain: [number, number]): string {
  const sx = linearScale(xDomain[0], xDomain[1], vp.padLeft, vp.width - vp.padRight);
  const sy = linearScale(yDomain[0], yDomain[1], vp.height - vp.padBottom, vp.padTop);
  return series.xs
    .map((x, i) => `${sx(x).toFixed(2)},${sy(series.ys[i]).toFixed(2)}`)
    .join(" ");
}

/** Render one or more series into an <svg> element (grid, axes, lines). */
export function renderLineChart(svg: SVGSVGElement, seriesList: Series[],
                                xLabel: string, yLabel: string,
                                vp: Viewport = DEFAULT_VIEWPORT): void {
  const xAll = seriesList.flatMap((s) => s.xs);
  const yAll = seriesList.flatMap((s) => s.ys);
  const xDomain = extent(xAll);
  const yDomain = extent(yAll);
  const sx = linearScale(xDomain[0], xDomain[1], vp.padLeft, vp.width - vp.padRight);
  const sy = linearScale(yDomain[0], yDomain[1], vp.height - vp.padBottom, vp.padTop);

  svg.setAttribute("viewBox", `0 0 ${vp.width} ${vp.height}`);
  const parts: string[] = [];
  for (const t of ticks(yDomain[0], yDomain[1], 5)) {
    const y = sy(t).toFixed(2);
    parts.push(`<line class="grid" x1="${vp.padLeft}" x2="${vp.width - vp.padRight}" y1="${y}" y2="${y}"/>`);
    parts.push(`<text class="tick" x="${vp.padLeft - 6}" y="${y}" text-anchor="end" dominant-baseline="middle">${t}</text>`);
  }
  for (const t of ticks(xDomain[0], xDomain[1], 6)) {
    const x = sx(t).toFixed(2);
    parts.push(`<text class="tick" x="${x}" y="${vp.height - vp.padBottom + 14}" text-anchor="middle">${t}</text>`);
  }
  for (const s of seriesList) {
    if (s.xs.length === 1) {
      parts.push(`<circle cx="${sx(s.xs[0]).toFixed(2)}" cy="${sy(s.ys[0]).toFixed(2)}" r="2.5" fill="${s.color}"/>`);
    } else if (s.xs.length > 1) {
      parts.push(`<polyline fill="none" stroke="${s.color}" stroke-width="1.6" points="${polylinePoints(s, vp, xDomain, yDomain)}"/>`);
    }
  }
  const legendX = vp.padLeft + 8;
  seriesList.forEach((s, i) => {
    parts.push(`<text class="legend" x="${legendX}" y="${vp.padTop + 12 + 14 * i}" fill="${s.color}">${s.label}</text>`);
  });
  parts.push(`<text class="axis" x="${(vp.padLeft + vp.width - vp.padRight) / 2}" y="${vp.height - 4}" text-anchor="middle">${xLabel}</text>`);
  parts.push(`<text class="axis" x="12" y="${vp.padTop + 4}">${yLabel}</text>`);
  svg.innerHTML = parts.join("");
}
