/**
 * Smooth-L1 regression loss: quadratic inside the unit error band, linear
 * outside, continuous at the breakpoint (both branches give 0.5 at |e|=1).
 */

import * as tf from "@tensorflow/tfjs";

export function smoothL1Scalar(err: number): number {
  const a = Math.abs(err);
  return a < 1 ? 0.5 * err * err : a - 0.5;
}

/**
 * Mean smooth-L1 over all elements of (pred - target).
 *
 * Written branch-free so every op has a defined gradient: with
 * q = min(|e|, 1) the value 0.5 q^2 + (|e| - q) equals the quadratic
 * branch inside the unit band and |e| - 0.5 outside it.
 */
export function smoothL1(pred: tf.Tensor, target: tf.Tensor): tf.Scalar {
  return tf.tidy(() => {
    const a = pred.sub(target).abs();
    const q = a.minimum(tf.scalar(1));
    return q.square().mul(0.5).add(a.sub(q)).mean() as tf.Scalar;
  });
}
