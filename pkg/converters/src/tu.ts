/**
 * Converter for TU-style graph classification bundles.
 *
 * Upstream layout (directory or zip): <NAME>_A.txt (edge list "u, v" with
 * 1-based global node ids, usually listed in both directions),
 * <NAME>_graph_indicator.txt (1-based owning graph per node),
 * <NAME>_graph_labels.txt (one integer per graph), and optionally
 * <NAME>_node_attributes.txt (comma-separated floats per node).
 *
 * Node attributes become native features; otherwise the output carries a
 * zero-width feature matrix flagged one_hot_degree so the consumer
 * synthesizes degree indicators. Graph labels are remapped to 0..C-1 by
 * sorted unique value.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import {
  CanonicalDataset,
  ConversionReport,
  writeCanonical,
} from "./canonical.js";
import { readZip } from "./zip.js";

interface SourceFiles {
  get(suffix: string): { text: string; name: string } | undefined;
}

function sourcesFrom(src: string): SourceFiles {
  if (src.endsWith(".zip")) {
    const entries = readZip(fs.readFileSync(src));
    return {
      get(suffix) {
        const entry = entries.find((e) => e.name.endsWith(suffix));
        return entry ? { text: entry.data.toString("utf8"), name: entry.name } : undefined;
      },
    };
  }
  const stat = fs.statSync(src);
  if (!stat.isDirectory()) throw new Error(`${src}: expected a directory or .zip`);
  const files = fs.readdirSync(src);
  return {
    get(suffix) {
      const name = files.find((f) => f.endsWith(suffix));
      return name
        ? { text: fs.readFileSync(path.join(src, name), "utf8"), name }
        : undefined;
    },
  };
}

function parseIntLines(text: string, filename: string): number[] {
  const out: number[] = [];
  let offset = 0;
  for (const line of text.split("\n")) {
    const trimmed = line.trim();
    if (trimmed.length > 0) {
      const value = Number(trimmed);
      if (!Number.isFinite(value) || !Number.isInteger(value)) {
        throw new Error(
          `${filename}: malformed integer ${JSON.stringify(trimmed)} at byte offset ${offset}`,
        );
      }
      out.push(value);
    }
    offset += line.length + 1;
  }
  return out;
}

function parseEdgeLines(text: string, filename: string): Array<[number, number]> {
  const out: Array<[number, number]> = [];
  let offset = 0;
  for (const line of text.split("\n")) {
    const trimmed = line.trim();
    if (trimmed.length > 0) {
      const parts = trimmed.split(",").map((p) => Number(p.trim()));
      if (parts.length !== 2 || parts.some((v) => !Number.isInteger(v))) {
        throw new Error(
          `${filename}: malformed edge line ${JSON.stringify(trimmed)} at byte offset ${offset}`,
        );
      }
      out.push([parts[0], parts[1]]);
    }
    offset += line.length + 1;
  }
  return out;
}

export function convertTu(src: string, outDir: string, name: string): ConversionReport {
  const sources = sourcesFrom(src);

  const indicatorFile = sources.get("_graph_indicator.txt");
  if (!indicatorFile) throw new Error(`${src}: missing *_graph_indicator.txt`);
  const edgesFile = sources.get("_A.txt");
  if (!edgesFile) throw new Error(`${src}: missing *_A.txt`);
  const graphLabelsFile = sources.get("_graph_labels.txt");
  if (!graphLabelsFile) throw new Error(`${src}: missing *_graph_labels.txt`);

  const indicator1 = parseIntLines(indicatorFile.text, indicatorFile.name);
  const numNodes = indicator1.length;
  const indicator = new Uint32Array(numNodes);
  for (let i = 0; i < numNodes; i++) {
    const gid = indicator1[i] - 1;
    if (gid < 0) {
      throw new Error(`${indicatorFile.name}: graph id ${indicator1[i]} at node line ${i + 1} is not 1-based`);
    }
    indicator[i] = gid;
  }
  // TU bundles list nodes grouped by graph; enforce it so slicing is valid.
  for (let i = 1; i < numNodes; i++) {
    if (indicator[i] < indicator[i - 1]) {
      throw new Error(`${indicatorFile.name}: graph ids decrease at node line ${i + 1}`);
    }
  }

  const rawEdges = parseEdgeLines(edgesFile.text, edgesFile.name);
  const edges: Array<[number, number]> = rawEdges.map(([u1, v1], idx) => {
    const u = u1 - 1;
    const v = v1 - 1;
    if (u < 0 || v < 0 || u >= numNodes || v >= numNodes) {
      throw new Error(`${edgesFile.name}: edge ${idx + 1} endpoint out of range`);
    }
    if (indicator[u] !== indicator[v]) {
      throw new Error(
        `${edgesFile.name}: edge ${idx + 1} joins graphs ${indicator[u]} and ${indicator[v]}`,
      );
    }
    return [u, v];
  });

  const rawLabels = parseIntLines(graphLabelsFile.text, graphLabelsFile.name);
  const numGraphs = numNodes ? indicator[numNodes - 1] + 1 : 0;
  if (rawLabels.length !== numGraphs) {
    throw new Error(
      `${graphLabelsFile.name}: ${rawLabels.length} labels for ${numGraphs} graphs`,
    );
  }
  const classes = [...new Set(rawLabels)].sort((a, b) => a - b);
  const classIndex = new Map(classes.map((c, i) => [c, i]));
  const labels = rawLabels.map((l) => classIndex.get(l)!);

  const attrFile = sources.get("_node_attributes.txt");
  let features: CanonicalDataset["features"];
  let provenance: CanonicalDataset["featureProvenance"];
  if (attrFile) {
    const rows = attrFile.text
      .split("\n")
      .map((l) => l.trim())
      .filter((l) => l.length > 0)
      .map((l, i) => {
        const vals = l.split(",").map((p) => Number(p.trim()));
        if (vals.some((v) => !Number.isFinite(v))) {
          throw new Error(`${attrFile.name}: malformed attribute row at line ${i + 1}`);
        }
        return vals;
      });
    if (rows.length !== numNodes) {
      throw new Error(`${attrFile.name}: ${rows.length} rows for ${numNodes} nodes`);
    }
    const cols = rows[0]?.length ?? 0;
    const data = new Float32Array(numNodes * cols);
    rows.forEach((r, i) => {
      if (r.length !== cols) {
        throw new Error(`${attrFile.name}: ragged attribute row at line ${i + 1}`);
      }
      data.set(r, i * cols);
    });
    features = { rows: numNodes, cols, data };
    provenance = "native";
  } else {
    features = { rows: numNodes, cols: 0, data: new Float32Array(0) };
    provenance = "one_hot_degree";
  }

  return writeCanonical(
    {
      name,
      level: "graph",
      numNodes,
      edges,
      features,
      labels,
      numClasses: classes.length,
      graphIndicator: indicator,
      featureProvenance: provenance,
    },
    outDir,
  );
}
