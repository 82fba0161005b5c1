/**
 * Dataset loading and branch/target assembly.
 *
 * A corpus container stores batched inputs/{tau,h,f,c} at the 51-point
 * training resolution and targets/{K,L,J} or {Q1,Q2}.  Branch encodings
 * follow the solver's manifest convention: constants broadcast to full
 * grids, the f samples, and c repeated along the second axis.  Targets are
 * read at their stored on-lattice queries (normalized k/(g-1)).
 */

import { readContainer } from "./container.js";

export type NetKind = "K" | "L" | "J" | "Q1" | "Q2";

export interface Dataset {
  kind: "control" | "observer";
  n: number;
  grid: number;
  tau: Float64Array;
  h: Float64Array;
  f: Float64Array; // n x g x g
  c: Float64Array; // n x g
  targets: Map<string, { width: number; data: Float64Array }>;
}

export function loadDataset(path: string): Dataset {
  const cont = readContainer(path);
  const need = ["inputs/tau", "inputs/h", "inputs/f", "inputs/c"];
  for (const k of need) {
    if (!cont.arrays.has(k)) throw new Error(`dataset missing array ${k}`);
  }
  const f = cont.arrays.get("inputs/f")!;
  const [n, g] = [f.shape[0], f.shape[1]];
  const targets = new Map<string, { width: number; data: Float64Array }>();
  for (const [name, arr] of cont.arrays) {
    if (name.startsWith("targets/")) {
      targets.set(name.slice("targets/".length), {
        width: arr.data.length / n,
        data: arr.data,
      });
    }
  }
  const kind = (cont.meta["kind"] as "control" | "observer") ??
    (targets.has("K") ? "control" : "observer");
  return {
    kind,
    n,
    grid: g,
    tau: cont.arrays.get("inputs/tau")!.data,
    h: cont.arrays.get("inputs/h")!.data,
    f: f.data,
    c: cont.arrays.get("inputs/c")!.data,
    targets,
  };
}

export function channelsFor(kind: NetKind): number {
  if (kind === "K") return 3;
  if (kind === "L" || kind === "J") return 4;
  return 2;
}

/**
 * Branch encoding of sample i, flattened HWC (grid, grid, channels) to
 * match tf.layers input ordering.
 */
export function encodeSample(ds: Dataset, kind: NetKind, i: number): Float32Array {
  const g = ds.grid;
  const nchan = channelsFor(kind);
  const out = new Float32Array(g * g * nchan);
  const tau = ds.tau[i];
  const h = ds.h[i];
  const eta = tau - h;
  const fOff = i * g * g;
  const cOff = i * g;
  const chanVals: ("tau" | "eta" | "h" | "f" | "c")[] =
    kind === "K" ? ["tau", "f", "c"]
    : kind === "L" || kind === "J" ? ["tau", "eta", "f", "c"]
    : ["h", "f"];
  for (let r = 0; r < g; r++) {
    for (let q = 0; q < g; q++) {
      for (let ch = 0; ch < nchan; ch++) {
        let v: number;
        switch (chanVals[ch]) {
          case "tau": v = tau; break;
          case "eta": v = eta; break;
          case "h": v = h; break;
          case "f": v = ds.f[fOff + r * g + q]; break;
          default: v = ds.c[cOff + r];
        }
        out[(r * g + q) * nchan + ch] = v;
      }
    }
  }
  return out;
}

export function targetSample(ds: Dataset, kind: NetKind, i: number): Float64Array {
  const t = ds.targets.get(kind);
  if (!t) throw new Error(`dataset has no targets for net ${kind}`);
  return t.data.subarray(i * t.width, (i + 1) * t.width);
}

/** First-n view of a corpus (budget-limited runs). */
export function sliceDataset(ds: Dataset, n: number): Dataset {
  const g = ds.grid;
  const targets = new Map<string, { width: number; data: Float64Array }>();
  for (const [k, t] of ds.targets) {
    targets.set(k, { width: t.width, data: t.data.subarray(0, n * t.width) });
  }
  return {
    ...ds,
    n,
    tau: ds.tau.subarray(0, n),
    h: ds.h.subarray(0, n),
    f: ds.f.subarray(0, n * g * g),
    c: ds.c.subarray(0, n * g),
    targets,
  };
}

/** Deterministic train/test index split (seeded shuffle). */
export function splitIndices(
  n: number,
  trainFraction: number,
  seed: number,
): { train: number[]; test: number[] } {
  const idx = Array.from({ length: n }, (_, i) => i);
  let state = (seed >>> 0) || 1;
  const next = () => {
    // xorshift32, deterministic across platforms
    state ^= state << 13; state >>>= 0;
    state ^= state >> 17;
    state ^= state << 5; state >>>= 0;
    return state / 0xffffffff;
  };
  for (let i = n - 1; i > 0; i--) {
    const j = Math.floor(next() * (i + 1));
    [idx[i], idx[j]] = [idx[j], idx[i]];
  }
  const nTrain = Math.max(1, Math.round(n * trainFraction));
  return { train: idx.slice(0, nTrain), test: idx.slice(nTrain) };
}
