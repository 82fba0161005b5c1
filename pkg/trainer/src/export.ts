/**
 * Weight export to the shared .pdon bundle layout.
 *
 * Kernel tensors move from tfjs layouts to the manifest convention:
 * conv kernels [kh, kw, in, out] -> (out, in, kh, kw); dense kernels
 * [in, out] -> (out, in); the first dense layer additionally permutes its
 * input columns from the NHWC flatten (i*ow + j)*C + c to the
 * channel-major flatten c*oh*ow + i*ow + j.
 */

import * as tf from "@tensorflow/tfjs";
import { Container, NamedArray, writeContainer } from "./container.js";
import { DeepONet, configToManifest } from "./model.js";

function f64(t: tf.Tensor): Float64Array {
  return Float64Array.from(t.dataSync());
}

function convToManifest(kernel: tf.Tensor4D): NamedArray {
  const [kh, kw, cin, cout] = kernel.shape;
  const src = kernel.dataSync();
  const out = new Float64Array(cout * cin * kh * kw);
  for (let o = 0; o < cout; o++) {
    for (let c = 0; c < cin; c++) {
      for (let i = 0; i < kh; i++) {
        for (let j = 0; j < kw; j++) {
          out[((o * cin + c) * kh + i) * kw + j] =
            src[((i * kw + j) * cin + c) * cout + o];
        }
      }
    }
  }
  return { shape: [cout, cin, kh, kw], data: out };
}

function denseToManifest(kernel: tf.Tensor2D): NamedArray {
  const [nin, nout] = kernel.shape;
  const src = kernel.dataSync();
  const out = new Float64Array(nout * nin);
  for (let o = 0; o < nout; o++) {
    for (let i = 0; i < nin; i++) out[o * nin + i] = src[i * nout + o];
  }
  return { shape: [nout, nin], data: out };
}

function fc1ToManifest(kernel: tf.Tensor2D, channels: number,
                       spatial: number): NamedArray {
  const [nin, nout] = kernel.shape;
  const src = kernel.dataSync();
  const out = new Float64Array(nout * nin);
  const hw = spatial * spatial;
  for (let o = 0; o < nout; o++) {
    for (let c = 0; c < channels; c++) {
      for (let ij = 0; ij < hw; ij++) {
        const pyCol = c * hw + ij;
        const tfRow = ij * channels + c;
        out[o * nin + pyCol] = src[tfRow * nout + o];
      }
    }
  }
  return { shape: [nout, nin], data: out };
}

export function netTensors(net: DeepONet): Map<string, NamedArray> {
  const cfg = net.cfg;
  const w = net.branch.getWeights();
  // layer order: conv1 k/b, conv2 k/b, fc1 k/b, fc2 k/b
  const [c1k, c1b, c2k, c2b, f1k, f1b, f2k, f2b] = w;
  let spatial = cfg.gridPoints;
  for (let i = 0; i < 2; i++) {
    spatial = Math.floor((spatial - cfg.kernelSize) / cfg.stride) + 1;
  }
  const tensors = new Map<string, NamedArray>();
  tensors.set("conv1_w", convToManifest(c1k as tf.Tensor4D));
  tensors.set("conv1_b", { shape: [cfg.convChannels[0]], data: f64(c1b) });
  tensors.set("conv2_w", convToManifest(c2k as tf.Tensor4D));
  tensors.set("conv2_b", { shape: [cfg.convChannels[1]], data: f64(c2b) });
  tensors.set("fc1_w", fc1ToManifest(f1k as tf.Tensor2D, cfg.convChannels[1],
                                     spatial));
  tensors.set("fc1_b", { shape: [cfg.branchFc[1]], data: f64(f1b) });
  tensors.set("fc2_w", denseToManifest(f2k as tf.Tensor2D));
  tensors.set("fc2_b", { shape: [cfg.branchFc[2]], data: f64(f2b) });
  tensors.set("trunk1_w", denseToManifest(net.trunkW1 as tf.Tensor2D));
  tensors.set("trunk1_b", { shape: [cfg.trunkFc[1]], data: f64(net.trunkB1) });
  tensors.set("trunk2_w", denseToManifest(net.trunkW2 as tf.Tensor2D));
  tensors.set("trunk2_b", { shape: [cfg.trunkFc[2]], data: f64(net.trunkB2) });
  tensors.set("out_b", { shape: [1], data: f64(net.outB) });
  return tensors;
}

export function exportBundle(
  path: string,
  nets: Map<string, DeepONet>,
  trainingMeta: Record<string, unknown> = {},
): void {
  const arrays = new Map<string, NamedArray>();
  const networks: Record<string, unknown> = {};
  for (const [kind, net] of nets) {
    networks[kind] = configToManifest(net.cfg);
    for (const [name, arr] of netTensors(net)) {
      arrays.set(`${kind}/${name}`, arr);
    }
  }
  writeContainer(path, arrays, {
    deeponet_config: { networks },
    training: trainingMeta,
  });
}
