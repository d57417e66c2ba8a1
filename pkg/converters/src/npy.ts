/**
 * Minimal .npy / .npz parsing for the little-endian C-order arrays that
 * graph benchmark archives actually contain.
 */

import { readZip } from "./zip.js";

export interface NpyArray {
  dtype: string;
  shape: number[];
  /** Flat values in C (row-major) order, widened to number. */
  data: Float64Array;
}

const MAGIC = Buffer.from("\x93NUMPY", "latin1");

export function parseNpy(buf: Buffer): NpyArray {
  if (!buf.subarray(0, 6).equals(MAGIC)) {
    throw new Error("not an npy payload: bad magic");
  }
  const major = buf[6];
  const headerLen =
    major === 1 ? buf.readUInt16LE(8) : buf.readUInt32LE(8);
  const headerStart = major === 1 ? 10 : 12;
  const header = buf.toString("latin1", headerStart, headerStart + headerLen);

  const descr = /'descr':\s*'([^']+)'/.exec(header)?.[1];
  const fortran = /'fortran_order':\s*(True|False)/.exec(header)?.[1];
  const shapeText = /'shape':\s*\(([^)]*)\)/.exec(header)?.[1];
  if (!descr || !fortran || shapeText === undefined) {
    throw new Error(`unparseable npy header: ${header.trim()}`);
  }
  if (fortran === "True") {
    throw new Error("fortran-order npy arrays are not supported");
  }
  const shape = shapeText
    .split(",")
    .map((s) => s.trim())
    .filter((s) => s.length > 0)
    .map((s) => parseInt(s, 10));
  const count = shape.reduce((a, b) => a * b, 1);
  const body = buf.subarray(headerStart + headerLen);

  const out = new Float64Array(count);
  const read = readerFor(descr, body);
  for (let i = 0; i < count; i++) out[i] = read(i);
  return { dtype: descr, shape, data: out };
}

function readerFor(descr: string, body: Buffer): (i: number) => number {
  switch (descr) {
    case "<f8":
      return (i) => body.readDoubleLE(i * 8);
    case "<f4":
      return (i) => body.readFloatLE(i * 4);
    case "<i8":
      return (i) => Number(body.readBigInt64LE(i * 8));
    case "<u8":
      return (i) => Number(body.readBigUInt64LE(i * 8));
    case "<i4":
      return (i) => body.readInt32LE(i * 4);
    case "<u4":
      return (i) => body.readUInt32LE(i * 4);
    case "<i2":
      return (i) => body.readInt16LE(i * 2);
    case "<u2":
      return (i) => body.readUInt16LE(i * 2);
    case "|i1":
      return (i) => body.readInt8(i);
    case "|u1":
    case "|b1":
      return (i) => body.readUInt8(i);
    default:
      throw new Error(`unsupported npy dtype ${descr}`);
  }
}

export function parseNpz(buf: Buffer): Record<string, NpyArray> {
  const out: Record<string, NpyArray> = {};
  for (const entry of readZip(buf)) {
    if (!entry.name.endsWith(".npy")) continue;
    out[entry.name.slice(0, -4)] = parseNpy(entry.data);
  }
  return out;
}
