/**
 * Writers for the canonical dataset layout consumed by the `gk` toolchain.
 *
 * Directory contents: meta.json manifest plus little-endian binaries —
 * edges.bin ("GKE1", u64 count, u32 pairs with u <= v), features.bin
 * ("GKF1", u32 rows, u32 cols, row-major f32) and, for graph-level data,
 * graph_indicator.bin ("GKG1", one u32 per node, non-decreasing).
 *
 * Converters only ever WRITE this format; validation is owned by the
 * primary toolchain (`gk dataset-validate`). Edge lists are canonicalized
 * before writing so repeated conversions are byte-identical regardless of
 * upstream ordering.
 */

import { createHash } from "node:crypto";
import * as fs from "node:fs";
import * as path from "node:path";

export interface CanonicalDataset {
  name: string;
  level: "node" | "graph";
  numNodes: number;
  /** Unique undirected edges over global 0-based node ids. */
  edges: Array<[number, number]>;
  /** Row-major node features; rows must equal numNodes (cols may be 0). */
  features: { rows: number; cols: number; data: Float32Array };
  /** Per-item class ids in [0, numClasses). */
  labels: number[];
  numClasses: number;
  /** For graph-level data: 0-based owning graph per node, non-decreasing. */
  graphIndicator?: Uint32Array;
  splits?: Record<string, number[]>;
  featureProvenance: "native" | "one_hot_degree";
}

export interface ConversionReport {
  dataset: string;
  level: "node" | "graph";
  nodes: number;
  edges: number;
  graphs: number;
  classes: number;
  feature_dim: number;
  output_hashes: Record<string, string>;
}

export function canonicalizeEdges(
  pairs: Iterable<[number, number]>,
  numNodes: number,
): Array<[number, number]> {
  const seen = new Set<number>();
  const out: Array<[number, number]> = [];
  for (const [a, b] of pairs) {
    if (a < 0 || b < 0 || a >= numNodes || b >= numNodes) {
      throw new Error(`edge endpoint (${a}, ${b}) out of range [0, ${numNodes})`);
    }
    const u = Math.min(a, b);
    const v = Math.max(a, b);
    const key = u * numNodes + v;
    if (!seen.has(key)) {
      seen.add(key);
      out.push([u, v]);
    }
  }
  out.sort((x, y) => x[0] - y[0] || x[1] - y[1]);
  return out;
}

function sha256(buf: Buffer): string {
  return createHash("sha256").update(buf).digest("hex");
}

function edgesBuffer(edges: Array<[number, number]>): Buffer {
  const buf = Buffer.alloc(4 + 8 + edges.length * 8);
  buf.write("GKE1", 0, "latin1");
  buf.writeBigUInt64LE(BigInt(edges.length), 4);
  edges.forEach(([u, v], i) => {
    buf.writeUInt32LE(u, 12 + i * 8);
    buf.writeUInt32LE(v, 16 + i * 8);
  });
  return buf;
}

function featuresBuffer(f: CanonicalDataset["features"]): Buffer {
  if (f.data.length !== f.rows * f.cols) {
    throw new Error(
      `feature payload has ${f.data.length} values for ${f.rows}x${f.cols}`,
    );
  }
  const buf = Buffer.alloc(12 + f.data.length * 4);
  buf.write("GKF1", 0, "latin1");
  buf.writeUInt32LE(f.rows, 4);
  buf.writeUInt32LE(f.cols, 8);
  Buffer.from(f.data.buffer, f.data.byteOffset, f.data.byteLength).copy(buf, 12);
  return buf;
}

function indicatorBuffer(ind: Uint32Array): Buffer {
  const buf = Buffer.alloc(4 + ind.length * 4);
  buf.write("GKG1", 0, "latin1");
  Buffer.from(ind.buffer, ind.byteOffset, ind.byteLength).copy(buf, 4);
  return buf;
}

/** JSON with recursively sorted keys so manifests are byte-stable. */
export function stableJson(value: unknown): string {
  const normalize = (v: unknown): unknown => {
    if (Array.isArray(v)) return v.map(normalize);
    if (v && typeof v === "object") {
      const entries = Object.entries(v as Record<string, unknown>).sort(
        ([a], [b]) => (a < b ? -1 : a > b ? 1 : 0),
      );
      return Object.fromEntries(entries.map(([k, val]) => [k, normalize(val)]));
    }
    return v;
  };
  return JSON.stringify(normalize(value), null, 1) + "\n";
}

export function writeCanonical(ds: CanonicalDataset, outDir: string): ConversionReport {
  validate(ds);
  fs.mkdirSync(outDir, { recursive: true });

  const edges = canonicalizeEdges(ds.edges, ds.numNodes);
  const payloads: Record<string, Buffer> = {
    "edges.bin": edgesBuffer(edges),
    "features.bin": featuresBuffer(ds.features),
  };
  if (ds.level === "graph") {
    if (!ds.graphIndicator) {
      throw new Error("graph-level dataset requires a graph indicator");
    }
    payloads["graph_indicator.bin"] = indicatorBuffer(ds.graphIndicator);
  }

  const hashes: Record<string, string> = {};
  for (const [name, buf] of Object.entries(payloads)) {
    fs.writeFileSync(path.join(outDir, name), buf);
    hashes[name] = sha256(buf);
  }

  const numGraphs =
    ds.level === "graph" && ds.graphIndicator
      ? (ds.graphIndicator.length ? ds.graphIndicator[ds.graphIndicator.length - 1] + 1 : 0)
      : 1;
  const meta = {
    name: ds.name,
    level: ds.level,
    num_nodes: ds.numNodes,
    num_edges: edges.length,
    num_graphs: numGraphs,
    num_classes: ds.numClasses,
    feature_dim: ds.features.cols,
    feature_provenance: ds.featureProvenance,
    labels: ds.labels,
    splits: ds.splits ?? {},
    hashes,
  };
  fs.writeFileSync(path.join(outDir, "meta.json"), stableJson(meta));

  return {
    dataset: ds.name,
    level: ds.level,
    nodes: ds.numNodes,
    edges: edges.length,
    graphs: numGraphs,
    classes: ds.numClasses,
    feature_dim: ds.features.cols,
    output_hashes: hashes,
  };
}

function validate(ds: CanonicalDataset): void {
  if (ds.level === "graph" && !ds.graphIndicator) {
    throw new Error("graph-level dataset requires a graph indicator");
  }
  if (ds.features.rows !== ds.numNodes) {
    throw new Error(
      `features cover ${ds.features.rows} nodes, dataset has ${ds.numNodes}`,
    );
  }
  const items =
    ds.level === "graph" && ds.graphIndicator
      ? (ds.graphIndicator.length ? ds.graphIndicator[ds.graphIndicator.length - 1] + 1 : 0)
      : ds.numNodes;
  if (ds.labels.length !== items) {
    throw new Error(`${ds.labels.length} labels for ${items} items`);
  }
  for (const label of ds.labels) {
    if (!Number.isInteger(label) || label < 0 || label >= ds.numClasses) {
      throw new Error(`label ${label} outside [0, ${ds.numClasses})`);
    }
  }
  if (ds.graphIndicator) {
    for (let i = 1; i < ds.graphIndicator.length; i++) {
      if (ds.graphIndicator[i] < ds.graphIndicator[i - 1]) {
        throw new Error(`graph indicator decreases at node ${i}`);
      }
    }
  }
  for (const [name, idx] of Object.entries(ds.splits ?? {})) {
    for (const i of idx) {
      if (!Number.isInteger(i) || i < 0 || i >= items) {
        throw new Error(`split ${name} index ${i} out of range [0, ${items})`);
      }
    }
  }
}

/** Compare a report against expected statistics; returns mismatch strings. */
export function checkExpected(
  report: ConversionReport,
  expected: Partial<ConversionReport>,
): string[] {
  const problems: string[] = [];
  for (const key of ["nodes", "edges", "graphs", "classes", "feature_dim"] as const) {
    if (expected[key] !== undefined && expected[key] !== report[key]) {
      problems.push(`${key}: expected ${expected[key]}, converted ${report[key]}`);
    }
  }
  return problems;
}
