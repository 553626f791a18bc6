/**
 * @file tables.ts
 * @brief Text formats crossing the CLI boundary: floats, CSV tables, INI configs.
 *
 * All numeric data crosses as shortest-round-trip decimal strings.
 * JavaScript's Number-to-string conversion already produces the shortest
 * decimal that parses back to the same float64, and the core parses decimals
 * correctly rounded, so values survive the boundary bit for bit in both
 * directions. No rounding, padding, or any other numeric transformation is
 * applied here.
 */

import { InputError } from "./errors.js";

/** Shortest round-trip decimal for a finite float64. */
export function formatFloat(x: number): string {
  return String(x);
}

export interface MatrixShape {
  rows: number;
  cols: number;
}

/**
 * Validate a rectangular, nonempty, all-finite numeric matrix.
 * Error messages name the offending dimension or entry.
 */
export function checkMatrix(name: string, m: number[][], expectCols?: number): MatrixShape {
  if (!Array.isArray(m) || m.length === 0) {
    throw new InputError(`${name} must be a nonempty 2D array`);
  }
  const cols = Array.isArray(m[0]) ? m[0].length : -1;
  if (cols <= 0) {
    throw new InputError(`${name} row 0 must be a nonempty array`);
  }
  for (let i = 0; i < m.length; i++) {
    const row = m[i];
    if (!Array.isArray(row) || row.length !== cols) {
      throw new InputError(
        `${name} row ${i} has ${Array.isArray(row) ? row.length : 0} columns, expected ${cols}`,
      );
    }
    for (let j = 0; j < cols; j++) {
      if (typeof row[j] !== "number" || !Number.isFinite(row[j])) {
        throw new InputError(`${name}[${i}][${j}] is not a finite number`);
      }
    }
  }
  if (expectCols !== undefined && cols !== expectCols) {
    throw new InputError(`${name} has ${cols} columns, expected ${expectCols}`);
  }
  return { rows: m.length, cols };
}

/** Render a numeric table as core-format CSV ('.' decimal, ',' separator, header row). */
export function csvText(header: string[], rows: number[][]): string {
  const lines = [header.join(",")];
  for (const row of rows) {
    lines.push(row.map(formatFloat).join(","));
  }
  return lines.join("\n") + "\n";
}

export interface CsvTable {
  header: string[];
  rows: number[][];
}

/** Parse a core-written CSV result table. Lines starting with '#' are metadata. */
export function parseCsv(text: string): CsvTable {
  const lines = text.split("\n").filter((l) => l.length > 0 && !l.startsWith("#"));
  if (lines.length === 0) {
    throw new InputError("empty CSV table");
  }
  const header = lines[0].split(",");
  const rows = lines.slice(1).map((line, i) => {
    const cells = line.split(",").map(Number);
    if (cells.length !== header.length || cells.some(Number.isNaN)) {
      throw new InputError(`CSV row ${i + 1} does not match the header`);
    }
    return cells;
  });
  return { header, rows };
}

/** Column values by header name; errors if the column is missing. */
export function column(table: CsvTable, name: string): number[] {
  const j = table.header.indexOf(name);
  if (j < 0) {
    throw new InputError(`CSV table has no column ${name}`);
  }
  return table.rows.map((r) => r[j]);
}

/**
 * Slice the consecutive columns `prefix_1, prefix_2, ...` out of a table,
 * one array per row. Used for the f_* / dt_f_* blocks of prediction tables.
 */
export function columnBlock(table: CsvTable, prefix: string): number[][] {
  const start = table.header.indexOf(`${prefix}_1`);
  if (start < 0) {
    throw new InputError(`CSV table has no ${prefix}_1 column`);
  }
  let width = 1;
  while (table.header[start + width] === `${prefix}_${width + 1}`) {
    width++;
  }
  return table.rows.map((r) => r.slice(start, start + width));
}

export type IniSection = Record<string, string | number | boolean | undefined>;

/** Render an INI config; undefined values are skipped, numbers kept exact. */
export function iniText(sections: Record<string, IniSection>): string {
  const parts: string[] = [];
  for (const [section, entries] of Object.entries(sections)) {
    const lines = Object.entries(entries)
      .filter(([, v]) => v !== undefined)
      .map(([k, v]) => `${k} = ${typeof v === "number" ? formatFloat(v) : String(v)}`);
    if (lines.length > 0) {
      parts.push(`[${section}]`, ...lines, "");
    }
  }
  return parts.join("\n");
}
