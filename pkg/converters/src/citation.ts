/**
 * Converter for text-format citation networks.
 *
 * Upstream layout: <stem>.content with lines "paper_id<TAB>w1..wD<TAB>class"
 * and <stem>.cites with lines "cited_id<TAB>citing_id". Node order follows
 * first appearance in the content file; class names map to ids in sorted
 * order. Citations touching unknown paper ids are skipped (their count goes
 * to stderr) and the edge set is symmetrized by canonicalization.
 *
 * An optional <stem>.splits.json sidecar ({"train": [...], "val": [...],
 * "test": [...]}, entries either paper ids or 0-based indices) is embedded
 * as the dataset's public splits.
 */

import * as fs from "node:fs";

import { ConversionReport, writeCanonical } from "./canonical.js";

export function convertCitation(
  stem: string,
  outDir: string,
  name: string,
): ConversionReport {
  const contentPath = `${stem}.content`;
  const citesPath = `${stem}.cites`;
  if (!fs.existsSync(contentPath)) throw new Error(`${contentPath}: file not found`);
  if (!fs.existsSync(citesPath)) throw new Error(`${citesPath}: file not found`);

  const ids: string[] = [];
  const index = new Map<string, number>();
  const rows: number[][] = [];
  const classNames: string[] = [];

  const contentLines = fs
    .readFileSync(contentPath, "utf8")
    .split("\n")
    .map((l) => l.trim())
    .filter((l) => l.length > 0);
  let dim = -1;
  for (const [lineNo, line] of contentLines.entries()) {
    const parts = line.split(/\s+/);
    if (parts.length < 3) {
      throw new Error(`${contentPath}: malformed row at line ${lineNo + 1}`);
    }
    const id = parts[0];
    const cls = parts[parts.length - 1];
    const values = parts.slice(1, -1).map(Number);
    if (values.some((v) => !Number.isFinite(v))) {
      throw new Error(`${contentPath}: non-numeric feature at line ${lineNo + 1}`);
    }
    if (dim < 0) dim = values.length;
    if (values.length !== dim) {
      throw new Error(
        `${contentPath}: row at line ${lineNo + 1} has ${values.length} features, expected ${dim}`,
      );
    }
    if (index.has(id)) {
      throw new Error(`${contentPath}: duplicate paper id ${id} at line ${lineNo + 1}`);
    }
    index.set(id, ids.length);
    ids.push(id);
    rows.push(values);
    classNames.push(cls);
  }

  const numNodes = ids.length;
  const classes = [...new Set(classNames)].sort();
  const classIndex = new Map(classes.map((c, i) => [c, i]));
  const labels = classNames.map((c) => classIndex.get(c)!);

  const features = new Float32Array(numNodes * dim);
  rows.forEach((r, i) => features.set(r, i * dim));

  const edges: Array<[number, number]> = [];
  let skipped = 0;
  const citeLines = fs
    .readFileSync(citesPath, "utf8")
    .split("\n")
    .map((l) => l.trim())
    .filter((l) => l.length > 0);
  for (const [lineNo, line] of citeLines.entries()) {
    const parts = line.split(/\s+/);
    if (parts.length !== 2) {
      throw new Error(`${citesPath}: malformed row at line ${lineNo + 1}`);
    }
    const a = index.get(parts[0]);
    const b = index.get(parts[1]);
    if (a === undefined || b === undefined) {
      skipped += 1;
      continue;
    }
    if (a !== b) edges.push([a, b]);
  }
  if (skipped > 0) {
    process.stderr.write(
      `${citesPath}: skipped ${skipped} citation(s) to papers absent from the content file\n`,
    );
  }

  const splits = readSplitsSidecar(`${stem}.splits.json`, index, numNodes);

  return writeCanonical(
    {
      name,
      level: "node",
      numNodes,
      edges,
      features: { rows: numNodes, cols: dim, data: features },
      labels,
      numClasses: classes.length,
      splits,
      featureProvenance: "native",
    },
    outDir,
  );
}

function readSplitsSidecar(
  path: string,
  index: Map<string, number>,
  numNodes: number,
): Record<string, number[]> | undefined {
  if (!fs.existsSync(path)) return undefined;
  const raw = JSON.parse(fs.readFileSync(path, "utf8")) as Record<
    string,
    Array<string | number>
  >;
  const out: Record<string, number[]> = {};
  for (const [split, members] of Object.entries(raw)) {
    out[split] = members.map((m) => {
      if (typeof m === "number") {
        if (!Number.isInteger(m) || m < 0 || m >= numNodes) {
          throw new Error(`${path}: split ${split} index ${m} out of range`);
        }
        return m;
      }
      const idx = index.get(m);
      if (idx === undefined) {
        throw new Error(`${path}: split ${split} names unknown paper id ${m}`);
      }
      return idx;
    });
  }
  return out;
}
