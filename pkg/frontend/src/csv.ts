/**
 * Reader for the sweep tables produced by the simulation harness.
 *
 * The schema is fixed and unquoted, so parsing is a straight split;
 * cells are kept as raw strings everywhere so that what gets plotted
 * (and checksummed) is exactly what the file says. Numbers are parsed
 * only where a pixel position is needed.
 */

export const SWEEP_HEADER = [
  "engine", "S", "k", "theta", "a", "p", "t",
  "observable", "mean", "variance", "n_samples", "seed",
];

export interface Table {
  columns: string[];
  rows: string[][];
}

export function parseTable(text: string): Table {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new Error("CSV is empty (no header)");
  }
  const columns = lines[0].split(",");
  const rows = lines.slice(1).map((l) => l.split(","));
  for (const [i, r] of rows.entries()) {
    if (r.length !== columns.length) {
      throw new Error(`row ${i + 2} has ${r.length} cells, expected ${columns.length}`);
    }
  }
  return { columns, rows };
}

export function requireColumns(table: Table, names: string[]): void {
  for (const name of names) {
    if (!table.columns.includes(name)) {
      throw new Error(`missing required column: ${name}`);
    }
  }
}

export function columnIndex(table: Table, name: string): number {
  const i = table.columns.indexOf(name);
  if (i < 0) throw new Error(`missing required column: ${name}`);
  return i;
}

/** Rows matching exact raw-string equality on the given cells. */
export function filterRows(
  table: Table,
  match: Record<string, string>,
): string[][] {
  const idx = Object.fromEntries(
    Object.keys(match).map((k) => [k, columnIndex(table, k)]),
  );
  return table.rows.filter((r) =>
    Object.entries(match).every(([k, v]) => r[idx[k]] === v),
  );
}

/** Distinct raw values of a column, in first-appearance order. */
export function distinct(table: Table, name: string): string[] {
  const i = columnIndex(table, name);
  const seen = new Set<string>();
  const out: string[] = [];
  for (const r of table.rows) {
    if (!seen.has(r[i])) {
      seen.add(r[i]);
      out.push(r[i]);
    }
  }
  return out;
}

export function cell(table: Table, row: string[], name: string): string {
  return row[columnIndex(table, name)];
}

export function num(raw: string): number {
  const v = Number(raw);
  if (!Number.isFinite(v)) {
    throw new Error(`cell ${JSON.stringify(raw)} is not a finite number`);
  }
  return v;
}
