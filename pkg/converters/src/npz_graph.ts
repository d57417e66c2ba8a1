/**
 * Converter for npz-packaged node classification graphs (co-purchase and
 * npz citation distributions).
 *
 * Expected keys: CSR adjacency as adj_data/adj_indices/adj_indptr/adj_shape,
 * node features either as CSR (attr_data/attr_indices/attr_indptr/attr_shape)
 * or dense attr_matrix, and integer labels. The adjacency is symmetrized by
 * canonicalization and self-loops are dropped.
 */

import * as fs from "node:fs";

import { ConversionReport, writeCanonical } from "./canonical.js";
import { NpyArray, parseNpz } from "./npy.js";

function requireKey(arrays: Record<string, NpyArray>, key: string, src: string): NpyArray {
  const arr = arrays[key];
  if (!arr) throw new Error(`${src}: missing npz array ${key}`);
  return arr;
}

function csrToDense(
  data: NpyArray,
  indices: NpyArray,
  indptr: NpyArray,
  shape: [number, number],
): Float32Array {
  const [rows, cols] = shape;
  const out = new Float32Array(rows * cols);
  for (let i = 0; i < rows; i++) {
    const start = indptr.data[i];
    const end = indptr.data[i + 1];
    for (let p = start; p < end; p++) {
      out[i * cols + indices.data[p]] = data.data[p];
    }
  }
  return out;
}

export function convertNpzGraph(src: string, outDir: string, name: string): ConversionReport {
  const arrays = parseNpz(fs.readFileSync(src));

  const adjData = requireKey(arrays, "adj_data", src);
  const adjIndices = requireKey(arrays, "adj_indices", src);
  const adjIndptr = requireKey(arrays, "adj_indptr", src);
  const adjShape = requireKey(arrays, "adj_shape", src);
  const numNodes = adjShape.data[0];
  if (adjShape.data[1] !== numNodes) {
    throw new Error(`${src}: adjacency is not square`);
  }

  const edges: Array<[number, number]> = [];
  for (let i = 0; i < numNodes; i++) {
    const start = adjIndptr.data[i];
    const end = adjIndptr.data[i + 1];
    for (let p = start; p < end; p++) {
      const j = adjIndices.data[p];
      if (adjData.data[p] !== 0 && i !== j) edges.push([i, j]);
    }
  }

  let features: { rows: number; cols: number; data: Float32Array };
  if (arrays["attr_matrix"]) {
    const attr = arrays["attr_matrix"];
    const [rows, cols] = attr.shape as [number, number];
    features = { rows, cols, data: Float32Array.from(attr.data) };
  } else {
    const attrData = requireKey(arrays, "attr_data", src);
    const attrIndices = requireKey(arrays, "attr_indices", src);
    const attrIndptr = requireKey(arrays, "attr_indptr", src);
    const attrShape = requireKey(arrays, "attr_shape", src);
    const shape: [number, number] = [attrShape.data[0], attrShape.data[1]];
    features = {
      rows: shape[0],
      cols: shape[1],
      data: csrToDense(attrData, attrIndices, attrIndptr, shape),
    };
  }
  if (features.rows !== numNodes) {
    throw new Error(
      `${src}: features cover ${features.rows} nodes, adjacency has ${numNodes}`,
    );
  }

  const labelsArr = requireKey(arrays, "labels", src);
  const labels = Array.from(labelsArr.data, (v) => {
    if (!Number.isInteger(v) || v < 0) {
      throw new Error(`${src}: non-integer label ${v}`);
    }
    return v;
  });
  if (labels.length !== numNodes) {
    throw new Error(`${src}: ${labels.length} labels for ${numNodes} nodes`);
  }
  const numClasses = Math.max(...labels) + 1;

  return writeCanonical(
    {
      name,
      level: "node",
      numNodes,
      edges,
      features,
      labels,
      numClasses,
      featureProvenance: "native",
    },
    outDir,
  );
}
