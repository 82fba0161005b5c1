/**
 * Branch/trunk operator network mirroring the inference-side convention.
 *
 * Branch: two 5x5 stride-2 valid convolutions, flatten, two dense layers.
 * Trunk: two dense layers applied to the flattened query-grid encoding; in
 * the default "grid" encoding the training queries are exactly the lattice
 * nodes, so the first layer acts as an embedding table and is evaluated by
 * feeding the identity.  Output is branch . trunk + scalar bias.
 *
 * tfjs trains in float32 NHWC; exports transpose kernels to the manifest's
 * (out, in, kh, kw) / (out, in) float64 layout and reorder the first dense
 * layer's columns from HWC- to channel-major flattening.
 */

import * as tf from "@tensorflow/tfjs";
import { NetKind, channelsFor } from "./data.js";

export interface NetConfig {
  kind: NetKind;
  inputChannels: number;
  gridPoints: number;
  convChannels: [number, number];
  kernelSize: number;
  stride: number;
  branchFc: [number, number, number];
  trunkFc: [number, number, number];
  p: number;
  queryEncoding: "grid" | "raw";
  queryDim: number;
  activations: string[];
}

export type NetSize = "full" | "medium" | "reduced";

export function defaultNetConfig(kind: NetKind,
                                 size: NetSize | boolean = "full"): NetConfig {
  if (typeof size === "boolean") size = size ? "reduced" : "full";
  const g = 51;
  const qdim = kind === "K" ? 2 : 1;
  const lattice = qdim === 2 ? g * g : g;
  const conv: [number, number] =
    size === "full" ? [64, 128] : size === "medium" ? [16, 32] : [4, 8];
  let o = g;
  for (let i = 0; i < 2; i++) o = Math.floor((o - 5) / 2) + 1;
  const flat = conv[1] * o * o;
  const branch: [number, number, number] =
    size === "full" ? [flat, 512, 256]
    : size === "medium" ? [flat, 128, 64] : [flat, 32, 16];
  const trunk: [number, number, number] =
    size === "full" ? [lattice, 128, 256]
    : size === "medium" ? [lattice, 64, 64] : [lattice, 24, 16];
  return {
    kind,
    inputChannels: channelsFor(kind),
    gridPoints: g,
    convChannels: conv,
    kernelSize: 5,
    stride: 2,
    branchFc: branch,
    trunkFc: trunk,
    p: branch[2],
    queryEncoding: "grid",
    queryDim: qdim,
    activations: ["relu", "relu", "relu", "linear", "relu", "linear"],
  };
}

export function configToManifest(cfg: NetConfig): Record<string, unknown> {
  return {
    kind: cfg.kind,
    input_channels: cfg.inputChannels,
    grid_points: cfg.gridPoints,
    conv_channels: cfg.convChannels,
    kernel_size: cfg.kernelSize,
    stride: cfg.stride,
    branch_fc: cfg.branchFc,
    trunk_fc: cfg.trunkFc,
    p: cfg.p,
    query_encoding: cfg.queryEncoding,
    query_dim: cfg.queryDim,
    activations: cfg.activations,
  };
}

export class DeepONet {
  private static _instances = 0;
  readonly cfg: NetConfig;
  readonly branch: tf.LayersModel;
  readonly trunkW1: tf.Variable;
  readonly trunkB1: tf.Variable;
  readonly trunkW2: tf.Variable;
  readonly trunkB2: tf.Variable;
  readonly outB: tf.Variable;
  /** lattice nodes (grid mode) or normalized on-grid queries (raw mode) */
  private trunkInput: tf.Tensor2D;

  constructor(cfg: NetConfig, seed = 0) {
    this.cfg = cfg;
    const g = cfg.gridPoints;
    const input = tf.input({ shape: [g, g, cfg.inputChannels] });
    let x = tf.layers.conv2d({
      filters: cfg.convChannels[0], kernelSize: cfg.kernelSize,
      strides: cfg.stride, padding: "valid", activation: "relu",
      kernelInitializer: tf.initializers.heNormal({ seed }),
    }).apply(input) as tf.SymbolicTensor;
    x = tf.layers.conv2d({
      filters: cfg.convChannels[1], kernelSize: cfg.kernelSize,
      strides: cfg.stride, padding: "valid", activation: "relu",
      kernelInitializer: tf.initializers.heNormal({ seed: seed + 1 }),
    }).apply(x) as tf.SymbolicTensor;
    x = tf.layers.flatten().apply(x) as tf.SymbolicTensor;
    x = tf.layers.dense({
      units: cfg.branchFc[1], activation: "relu",
      kernelInitializer: tf.initializers.heNormal({ seed: seed + 2 }),
    }).apply(x) as tf.SymbolicTensor;
    x = tf.layers.dense({
      units: cfg.branchFc[2], activation: "linear",
      kernelInitializer: tf.initializers.glorotNormal({ seed: seed + 3 }),
    }).apply(x) as tf.SymbolicTensor;
    this.branch = tf.model({ inputs: input, outputs: x });

    const trunkIn = cfg.trunkFc[0];
    const uid = `${cfg.kind}_${DeepONet._instances++}`;
    this.trunkW1 = tf.variable(
      tf.initializers.glorotNormal({ seed: seed + 4 })
        .apply([trunkIn, cfg.trunkFc[1]]) as tf.Tensor, true,
      `trunk_w1_${uid}`);
    this.trunkB1 = tf.variable(tf.zeros([cfg.trunkFc[1]]), true,
                               `trunk_b1_${uid}`);
    this.trunkW2 = tf.variable(
      tf.initializers.glorotNormal({ seed: seed + 5 })
        .apply([cfg.trunkFc[1], cfg.trunkFc[2]]) as tf.Tensor, true,
      `trunk_w2_${uid}`);
    this.trunkB2 = tf.variable(tf.zeros([cfg.trunkFc[2]]), true,
                               `trunk_b2_${uid}`);
    this.outB = tf.variable(tf.zeros([1]), true, `out_b_${uid}`);
    this.trunkInput = this.buildTrunkInput();
  }

  private buildTrunkInput(): tf.Tensor2D {
    const cfg = this.cfg;
    const g = cfg.gridPoints;
    if (cfg.queryEncoding === "grid") {
      // training queries are the lattice; one-hot rows form the identity
      return tf.eye(cfg.trunkFc[0]) as tf.Tensor2D;
    }
    if (cfg.queryDim === 2) {
      const pts: number[][] = [];
      for (let i = 0; i < g; i++) {
        for (let j = 0; j < g; j++) pts.push([i / (g - 1), j / (g - 1)]);
      }
      return tf.tensor2d(pts);
    }
    const pts = Array.from({ length: g }, (_, k) => [k / (g - 1)]);
    return tf.tensor2d(pts);
  }

  /** Trunk features for every stored-target query; [n_queries, p]. */
  trunkFeatures(): tf.Tensor2D {
    return tf.tidy(() => {
      const z1 = this.trunkInput.matMul(this.trunkW1 as tf.Tensor2D)
        .add(this.trunkB1).relu();
      return z1.matMul(this.trunkW2 as tf.Tensor2D)
        .add(this.trunkB2) as tf.Tensor2D;
    });
  }

  /** Predictions at all stored-target queries; [batch, n_queries]. */
  predict(encodings: tf.Tensor4D): tf.Tensor2D {
    return tf.tidy(() => {
      const b = this.branch.apply(encodings) as tf.Tensor2D;
      const t = this.trunkFeatures();
      return b.matMul(t, false, true).add(this.outB) as tf.Tensor2D;
    });
  }

  trainableVariables(): tf.Variable[] {
    // LayersModel weights expose .val as the underlying engine variable
    const branchVars = this.branch.trainableWeights.map(
      (w) => (w as unknown as { val: tf.Variable }).val,
    );
    return [...branchVars, this.trunkW1, this.trunkB1, this.trunkW2,
            this.trunkB2, this.outB];
  }

  dispose(): void {
    this.branch.dispose();
    this.trunkW1.dispose();
    this.trunkB1.dispose();
    this.trunkW2.dispose();
    this.trunkB2.dispose();
    this.outB.dispose();
    this.trunkInput.dispose();
  }
}
