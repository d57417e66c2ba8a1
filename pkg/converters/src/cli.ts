/**
 * Conversion driver.
 *
 * Usage:
 *   node dist/cli.js tu       <dir-or-zip>   <out-dir> --name mutag [--expect expected.json]
 *   node dist/cli.js citation <stem>         <out-dir> --name cora  [--expect expected.json]
 *   node dist/cli.js npz      <file.npz>     <out-dir> --name computers [--expect expected.json]
 *
 * The ConversionReport is printed to stdout as JSON. With --expect, the
 * report is compared against the expected statistics and mismatches exit
 * non-zero. Exit codes: 0 ok, 1 expectation mismatch, 2 input error.
 */

import * as fs from "node:fs";

import { checkExpected, ConversionReport } from "./canonical.js";
import { convertCitation } from "./citation.js";
import { convertNpzGraph } from "./npz_graph.js";
import { convertTu } from "./tu.js";

function usage(): never {
  process.stderr.write(
    "usage: cli.js <tu|citation|npz> <source> <out-dir> --name NAME [--expect FILE]\n",
  );
  process.exit(2);
}

export function main(argv: string[]): number {
  const positional: string[] = [];
  let name = "";
  let expectPath = "";
  for (let i = 0; i < argv.length; i++) {
    if (argv[i] === "--name") name = argv[++i] ?? "";
    else if (argv[i] === "--expect") expectPath = argv[++i] ?? "";
    else positional.push(argv[i]);
  }
  if (positional.length !== 3 || !name) usage();
  const [family, source, outDir] = positional;

  let report: ConversionReport;
  try {
    if (family === "tu") report = convertTu(source, outDir, name);
    else if (family === "citation") report = convertCitation(source, outDir, name);
    else if (family === "npz") report = convertNpzGraph(source, outDir, name);
    else usage();
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 2;
  }

  process.stdout.write(JSON.stringify(report, null, 2) + "\n");

  if (expectPath) {
    const expected = JSON.parse(fs.readFileSync(expectPath, "utf8"));
    const problems = checkExpected(report, expected);
    if (problems.length > 0) {
      for (const p of problems) process.stderr.write(`expectation failed: ${p}\n`);
      return 1;
    }
  }
  return 0;
}

const invokedDirectly =
  process.argv[1] && import.meta.url.endsWith(process.argv[1].split("/").pop()!);
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
