/**
 * Backend selection: the wasm kernels are several times faster than the
 * plain-JS CPU backend for this workload; fall back silently when the
 * wasm assets cannot be located.
 */

import { createRequire } from "node:module";
import { dirname, join } from "node:path";
import * as tf from "@tensorflow/tfjs";

/**
 * The wasm backend ships without the convolution filter gradient; supply
 * it as a composite kernel via the dilated-convolution identity
 * dW = conv2d(x^T, dy^T, stride 1, dilation s), after cropping x to the
 * extent the forward windows actually covered.
 */
function registerWasmConvFilterGrad(): void {
  const have = tf.getKernelsForBackend("wasm")
    .some((k) => k.kernelName === "Conv2DBackpropFilter");
  if (have) return;
  tf.registerKernel({
    kernelName: "Conv2DBackpropFilter",
    backendName: "wasm",
    kernelFunc: ({ inputs, attrs }) => {
      const { x, dy } = inputs as { x: tf.Tensor4D; dy: tf.Tensor4D };
      const a = attrs as unknown as {
        strides: number | [number, number];
        pad: "valid" | "same" | number;
        filterShape: [number, number, number, number];
      };
      if (a.pad !== "valid") {
        throw new Error("wasm filter-gradient fallback supports valid padding only");
      }
      const s = Array.isArray(a.strides) ? a.strides[0] : a.strides;
      const [kh, kw] = a.filterShape;
      return tf.tidy(() => {
        const [b, , , ] = x.shape;
        const [, oh, ow, ] = dy.shape;
        const usedH = s * (oh - 1) + kh;
        const usedW = s * (ow - 1) + kw;
        const xUsed = tf.slice(x, [0, 0, 0, 0], [b, usedH, usedW, x.shape[3]]);
        const xT = tf.transpose(xUsed, [3, 1, 2, 0]);
        const dyT = tf.transpose(dy, [1, 2, 0, 3]);
        const grad = tf.conv2d(xT, dyT, 1, "valid", "NHWC", [s, s]);
        return tf.transpose(grad, [1, 2, 0, 3]);
      }) as unknown as tf.TensorInfo;
    },
  });
}

export async function selectBackend(pref: "wasm" | "cpu"): Promise<string> {
  if (pref === "wasm") {
    try {
      const wasm = await import("@tensorflow/tfjs-backend-wasm");
      const require = createRequire(import.meta.url);
      const pkg = require.resolve("@tensorflow/tfjs-backend-wasm/package.json");
      wasm.setWasmPaths(join(dirname(pkg), "wasm-out") + "/");
      await tf.setBackend("wasm");
      registerWasmConvFilterGrad();
    } catch {
      await tf.setBackend("cpu");
    }
  } else {
    await tf.setBackend("cpu");
  }
  await tf.ready();
  return tf.getBackend();
}
