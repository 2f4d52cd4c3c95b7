#!/usr/bin/env node
/** kinklab-plot <figure.json>
 *
 * Renders one figure from kinklab CSV/JSON artifacts to an SVG file.
 * Input paths inside the figure spec resolve relative to the spec file.
 * Exit codes: 0 written, 2 schema/config mismatch (with column
 * diagnostics), 1 anything else.
 */

import { readFileSync, writeFileSync } from "node:fs";
import { dirname, resolve } from "node:path";
import { SchemaError } from "./csv.js";
import { renderFigure } from "./figures.js";
import { FigureSpecSchema } from "./schemas.js";

export function main(argv: string[]): number {
  if (argv.length !== 1) {
    console.error("usage: kinklab-plot <figure.json>");
    return 2;
  }
  const specPath = argv[0];
  let spec;
  try {
    const raw = JSON.parse(readFileSync(specPath, "utf-8"));
    spec = FigureSpecSchema.parse(raw);
  } catch (err) {
    console.error(`figure spec error: ${(err as Error).message}`);
    return 2;
  }
  const base = dirname(resolve(specPath));
  const resolved = {
    ...spec,
    inputs: Object.fromEntries(
      Object.entries(spec.inputs).map(([k, v]) => [k, resolve(base, v)]),
    ),
    output: resolve(base, spec.output),
  };
  try {
    const svg = renderFigure(resolved);
    writeFileSync(resolved.output, svg + "\n");
    console.log(resolved.output);
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`schema mismatch: ${err.message}`);
      return 2;
    }
    console.error(`render failure: ${(err as Error).message}`);
    return 1;
  }
}

const entry = process.argv[1] ?? "";
if (entry.endsWith("cli.js") || entry.endsWith("kinklab-plot")) {
  process.exit(main(process.argv.slice(2)));
}
