import { readFileSync } from "node:fs";
import Papa from "papaparse";

export class SchemaError extends Error {}

export interface Table {
  columns: string[];
  rows: Record<string, number>[];
}

/** Parse a numeric CSV and check the required columns, reporting exactly
 * which ones are missing against which are present. */
export function readCsv(path: string, required: string[]): Table {
  let text: string;
  try {
    text = readFileSync(path, "utf-8");
  } catch (err) {
    throw new SchemaError(`cannot read ${path}: ${(err as Error).message}`);
  }
  const parsed = Papa.parse<Record<string, number>>(text.trim(), {
    header: true,
    dynamicTyping: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0];
    throw new SchemaError(`${path}: malformed CSV (${first.message} at row ${first.row})`);
  }
  const columns = parsed.meta.fields ?? [];
  const missing = required.filter((c) => !columns.includes(c));
  if (missing.length > 0) {
    throw new SchemaError(
      `${path}: missing column(s) [${missing.join(", ")}]; found [${columns.join(", ")}]`,
    );
  }
  for (const row of parsed.data) {
    for (const c of required) {
      if (typeof row[c] !== "number" || !isFinite(row[c])) {
        throw new SchemaError(`${path}: non-numeric value in column ${c}`);
      }
    }
  }
  return { columns, rows: parsed.data };
}

export function column(table: Table, name: string): number[] {
  return table.rows.map((r) => r[name]);
}
