/**
 * Float64 forward pass over exported manifest tensors, written plainly.
 *
 * This is the trainer's own reference evaluation of a saved bundle, used
 * to cross-check exported weights against the solver toolkit's inference
 * without any float32 round-off in the comparison.
 */

import { NamedArray } from "./container.js";

export interface ManifestNet {
  cfg: {
    input_channels: number;
    grid_points: number;
    conv_channels: number[];
    kernel_size: number;
    stride: number;
    branch_fc: number[];
    trunk_fc: number[];
    query_encoding: string;
    query_dim: number;
  };
  tensors: Map<string, NamedArray>;
}

function relu(v: Float64Array): Float64Array {
  return v.map((x) => (x > 0 ? x : 0)) as Float64Array;
}

function dense(w: NamedArray, b: NamedArray, x: Float64Array): Float64Array {
  const [nout, nin] = w.shape;
  const out = new Float64Array(nout);
  for (let o = 0; o < nout; o++) {
    let acc = b.data[o];
    const row = o * nin;
    for (let i = 0; i < nin; i++) acc += w.data[row + i] * x[i];
    out[o] = acc;
  }
  return out;
}

function conv(w: NamedArray, b: NamedArray, x: Float64Array,
              cin: number, size: number, stride: number): {
  out: Float64Array; cout: number; osize: number;
} {
  const [cout, , k] = w.shape;
  const osize = Math.floor((size - k) / stride) + 1;
  const out = new Float64Array(cout * osize * osize);
  for (let o = 0; o < cout; o++) {
    for (let oi = 0; oi < osize; oi++) {
      for (let oj = 0; oj < osize; oj++) {
        let acc = b.data[o];
        for (let c = 0; c < cin; c++) {
          for (let di = 0; di < k; di++) {
            for (let dj = 0; dj < k; dj++) {
              acc += w.data[((o * cin + c) * k + di) * k + dj]
                * x[(c * size + oi * stride + di) * size + oj * stride + dj];
            }
          }
        }
        out[(o * osize + oi) * osize + oj] = acc;
      }
    }
  }
  return { out, cout, osize };
}

/** Branch features of one channel-major (C, g, g) encoding. */
export function branch64(net: ManifestNet, encoding: Float64Array): Float64Array {
  const cfg = net.cfg;
  const t = net.tensors;
  const c1 = conv(t.get("conv1_w")!, t.get("conv1_b")!, encoding,
                  cfg.input_channels, cfg.grid_points, cfg.stride);
  const a1 = relu(c1.out);
  const c2 = conv(t.get("conv2_w")!, t.get("conv2_b")!, a1, c1.cout,
                  c1.osize, cfg.stride);
  const a2 = relu(c2.out);
  const h1 = relu(dense(t.get("fc1_w")!, t.get("fc1_b")!, a2));
  return dense(t.get("fc2_w")!, t.get("fc2_b")!, h1);
}

/** Output at normalized queries (rows of `queries`, query_dim columns). */
export function forward64(net: ManifestNet, encoding: Float64Array,
                          queries: number[][]): Float64Array {
  const cfg = net.cfg;
  const t = net.tensors;
  const b = branch64(net, encoding);
  const bias = t.get("out_b")!.data[0];
  const out = new Float64Array(queries.length);

  const trunkOf = (vec: Float64Array): Float64Array =>
    dense(t.get("trunk2_w")!, t.get("trunk2_b")!,
          relu(dense(t.get("trunk1_w")!, t.get("trunk1_b")!, vec)));

  const dot = (u: Float64Array): number => {
    let acc = bias;
    for (let i = 0; i < u.length; i++) acc += u[i] * b[i];
    return acc;
  };

  if (cfg.query_encoding === "raw") {
    queries.forEach((q, m) => {
      out[m] = dot(trunkOf(Float64Array.from(q)));
    });
    return out;
  }

  const nLat = cfg.trunk_fc[0];
  const nodeValue = (k: number): number => {
    const e = new Float64Array(nLat);
    e[k] = 1.0;
    return dot(trunkOf(e));
  };
  const clamp = (y: number) => Math.min(Math.max(y, 0), 1);
  if (cfg.query_dim === 1) {
    queries.forEach((q, m) => {
      const pos = clamp(q[0]) * (nLat - 1);
      const k0 = Math.min(Math.floor(pos), nLat - 2);
      const w = pos - k0;
      out[m] = (1 - w) * nodeValue(k0) + w * nodeValue(k0 + 1);
    });
    return out;
  }
  const g = Math.round(Math.sqrt(nLat));
  queries.forEach((q, m) => {
    const pi = clamp(q[0]) * (g - 1);
    const pj = clamp(q[1]) * (g - 1);
    const i0 = Math.min(Math.floor(pi), g - 2);
    const j0 = Math.min(Math.floor(pj), g - 2);
    const wi = pi - i0;
    const wj = pj - j0;
    out[m] = (1 - wi) * (1 - wj) * nodeValue(i0 * g + j0)
      + (1 - wi) * wj * nodeValue(i0 * g + j0 + 1)
      + wi * (1 - wj) * nodeValue((i0 + 1) * g + j0)
      + wi * wj * nodeValue((i0 + 1) * g + j0 + 1);
  });
  return out;
}

export function manifestNetFromContainer(
  cont: { arrays: Map<string, NamedArray>; meta: Record<string, unknown> },
  kind: string,
): ManifestNet {
  const dc = cont.meta["deeponet_config"] as
    { networks: Record<string, ManifestNet["cfg"]> } | undefined;
  if (!dc?.networks?.[kind]) {
    throw new Error(`container lacks a deeponet_config entry for ${kind}`);
  }
  const tensors = new Map<string, NamedArray>();
  const prefix = `${kind}/`;
  for (const [name, arr] of cont.arrays) {
    if (name.startsWith(prefix)) tensors.set(name.slice(prefix.length), arr);
  }
  return { cfg: dc.networks[kind], tensors };
}
