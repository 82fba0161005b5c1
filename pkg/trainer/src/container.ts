/**
 * Reader/writer for the .pdon tensor container shared with the solver
 * toolkit: magic "PDON", little-endian u32 version, little-endian u64
 * manifest length, JSON manifest {arrays: [{name, dtype, shape,
 * byte_offset}], meta}, then concatenated little-endian f64 payload.
 */

import { readFileSync, writeFileSync } from "node:fs";

const MAGIC = "PDON";
const VERSION = 1;

export interface NamedArray {
  shape: number[];
  data: Float64Array;
}

export interface Container {
  arrays: Map<string, NamedArray>;
  meta: Record<string, unknown>;
}

function numel(shape: number[]): number {
  return shape.reduce((a, b) => a * b, 1);
}

export function readContainer(path: string): Container {
  const buf = readFileSync(path);
  if (buf.length < 16) throw new Error("file too short for a container header");
  if (buf.toString("ascii", 0, 4) !== MAGIC) {
    throw new Error(`bad magic ${buf.toString("ascii", 0, 4)}`);
  }
  const version = buf.readUInt32LE(4);
  if (version !== VERSION) throw new Error(`unsupported container version ${version}`);
  const mlen = Number(buf.readBigUInt64LE(8));
  if (buf.length < 16 + mlen) throw new Error("truncated manifest");
  const manifest = JSON.parse(buf.toString("utf-8", 16, 16 + mlen));
  if (!manifest || !Array.isArray(manifest.arrays)) {
    throw new Error("manifest missing the arrays list");
  }
  const payload = buf.subarray(16 + mlen);
  const arrays = new Map<string, NamedArray>();
  let total = 0;
  for (const entry of manifest.arrays) {
    if (entry.dtype !== "f64") {
      throw new Error(`unsupported dtype ${entry.dtype} for array ${entry.name}`);
    }
    const shape = entry.shape.map((d: number) => Number(d));
    const n = numel(shape);
    const start = Number(entry.byte_offset);
    total += n * 8;
    const data = new Float64Array(n);
    for (let i = 0; i < n; i++) {
      data[i] = payload.readDoubleLE(start + 8 * i);
    }
    arrays.set(entry.name, { shape, data });
  }
  if (total !== payload.length) {
    throw new Error(
      `payload length ${payload.length} does not match manifest total ${total}`,
    );
  }
  return { arrays, meta: manifest.meta ?? {} };
}

export function writeContainer(
  path: string,
  arrays: Map<string, NamedArray>,
  meta: Record<string, unknown> = {},
): void {
  const entries: object[] = [];
  const chunks: Buffer[] = [];
  let offset = 0;
  for (const [name, arr] of arrays) {
    const bytes = Buffer.alloc(arr.data.length * 8);
    for (let i = 0; i < arr.data.length; i++) {
      bytes.writeDoubleLE(arr.data[i], 8 * i);
    }
    entries.push({ name, dtype: "f64", shape: arr.shape, byte_offset: offset });
    chunks.push(bytes);
    offset += bytes.length;
  }
  const manifest = Buffer.from(
    JSON.stringify({ arrays: entries, meta }),
    "utf-8",
  );
  const head = Buffer.alloc(16);
  head.write(MAGIC, 0, "ascii");
  head.writeUInt32LE(VERSION, 4);
  head.writeBigUInt64LE(BigInt(manifest.length), 8);
  writeFileSync(path, Buffer.concat([head, manifest, ...chunks]));
}
