/** Phase-matrix heatmap: one cell per element, dark = PIN ON (bit 1). */

export const CELL_ON = "#1d2733";
export const CELL_OFF = "#e8edf2";

export function cellFill(bit: number): string {
  return bit === 1 ? CELL_ON : CELL_OFF;
}

/** SVG markup for the bit matrix; pure so the mapping is testable. */
export function heatmapSvg(bits: number[][], cellPx = 18): string {
  const rows = bits.length;
  const cols = bits[0]?.length ?? 0;
  const rects: string[] = [];
  for (let r = 0; r < rows; r++) {
    for (let c = 0; c < cols; c++) {
      rects.push(
        `<rect x="${c * cellPx}" y="${r * cellPx}" width="${cellPx - 1}" height="${cellPx - 1}" ` +
          `fill="${cellFill(bits[r][c])}" data-rc="${r},${c}"/>`,
      );
    }
  }
  return (
    `<svg class="heatmap" viewBox="0 0 ${cols * cellPx} ${rows * cellPx}" ` +
    `role="img" aria-label="${rows}x${cols} phase matrix">${rects.join("")}</svg>`
  );
}

export function renderHeatmap(container: HTMLElement, bits: number[][]): void {
  container.innerHTML = heatmapSvg(bits);
}
