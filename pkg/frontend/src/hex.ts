/**
 * Config hex codec: row-major bit matrix, MSB-first within each byte,
 * zero-padded to whole bytes. Must stay byte-compatible with the service
 * and CLI serialization.
 */

export function hexToBits(hex: string, rows: number, cols: number): number[][] {
  const clean = hex.trim().toLowerCase();
  const n = rows * cols;
  const expectedChars = Math.ceil(n / 8) * 2;
  if (clean.length !== expectedChars) {
    throw new Error(`config hex for ${rows}x${cols} must be ${expectedChars} chars, got ${clean.length}`);
  }
  if (!/^[0-9a-f]*$/.test(clean)) {
    throw new Error("config hex contains non-hex characters");
  }
  const bits: number[][] = Array.from({ length: rows }, () => new Array<number>(cols).fill(0));
  for (let idx = 0; idx < n; idx++) {
    const byte = parseInt(clean.slice((idx >> 3) * 2, (idx >> 3) * 2 + 2), 16);
    bits[Math.floor(idx / cols)][idx % cols] = (byte >> (7 - (idx & 7))) & 1;
  }
  return bits;
}

export function bitsToHex(bits: number[][]): string {
  const rows = bits.length;
  const cols = bits[0]?.length ?? 0;
  const n = rows * cols;
  const bytes = new Uint8Array(Math.ceil(n / 8));
  for (let idx = 0; idx < n; idx++) {
    const bit = bits[Math.floor(idx / cols)][idx % cols];
    if (bit !== 0 && bit !== 1) {
      throw new Error(`bit at flat index ${idx} is ${bit}, expected 0/1`);
    }
    if (bit) {
      bytes[idx >> 3] |= 1 << (7 - (idx & 7));
    }
  }
  return Array.from(bytes, (b) => b.toString(16).padStart(2, "0")).join("");
}

export interface GeometrySummary {
  blockRows: number;
  blockCols: number;
  tileRows: number;
  tileCols: number;
}

export function totalRows(g: GeometrySummary): number {
  return g.blockRows * g.tileRows;
}

export function totalCols(g: GeometrySummary): number {
  return g.blockCols * g.tileCols;
}

/** Element row/col window covered by the block at a 4-bit address. */
export function blockRegion(g: GeometrySummary, address: number) {
  const i = Math.floor(address / g.tileCols);
  const j = address % g.tileCols;
  if (i >= g.tileRows || address < 0) {
    throw new Error(`address ${address} outside the ${g.tileRows}x${g.tileCols} tiling`);
  }
  return {
    rowStart: i * g.blockRows,
    rowEnd: (i + 1) * g.blockRows,
    colStart: j * g.blockCols,
    colEnd: (j + 1) * g.blockCols,
  };
}

/** New global bit matrix with one block's region overwritten by `value`. */
export function setBlockBits(bits: number[][], g: GeometrySummary, address: number, value: 0 | 1): number[][] {
  const region = blockRegion(g, address);
  return bits.map((row, r) =>
    row.map((bit, c) =>
      r >= region.rowStart && r < region.rowEnd && c >= region.colStart && c < region.colEnd
        ? value
        : bit,
    ),
  );
}
