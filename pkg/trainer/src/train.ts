/**
 * Training loop: Adam on the mean smooth-L1 of whole-target predictions.
 *
 * A step draws a batch of plant encodings, runs the branch, combines with
 * the trunk features at every stored-target query and penalizes the whole
 * predicted field.  Optimizer and schedule defaults are recorded in the
 * exported manifest since the source material leaves them open.
 */

import * as tf from "@tensorflow/tfjs";
import { Dataset, NetKind, channelsFor, encodeSample, splitIndices, targetSample } from "./data.js";
import { smoothL1 } from "./loss.js";
import { DeepONet } from "./model.js";

export interface TrainConfig {
  epochs: number;
  batchSize: number;
  learningRate: number;
  /** multiply the rate by lrDecayFactor at these epoch fractions */
  lrDecayAt: number[];
  lrDecayFactor: number;
  trainFraction: number;
  seed: number;
  logEvery: number;
}

export const defaultTrainConfig: TrainConfig = {
  epochs: 300,
  batchSize: 32,
  learningRate: 1e-3,
  lrDecayAt: [0.5, 0.8],
  lrDecayFactor: 0.2,
  trainFraction: 0.9,
  seed: 0,
  logEvery: 10,
};

export interface TrainResult {
  trainLoss: number[];
  testLoss: number[];
  finalTrain: number;
  finalTest: number;
}

function gatherBatch(ds: Dataset, kind: NetKind, idx: number[],
                     g: number): { x: tf.Tensor4D; y: tf.Tensor2D } {
  const nchan = channelsFor(kind);
  const enc = new Float32Array(idx.length * g * g * nchan);
  const width = ds.targets.get(kind)!.width;
  const tgt = new Float32Array(idx.length * width);
  idx.forEach((sample, row) => {
    enc.set(encodeSample(ds, kind, sample), row * g * g * nchan);
    tgt.set(Float32Array.from(targetSample(ds, kind, sample)), row * width);
  });
  return {
    x: tf.tensor4d(enc, [idx.length, g, g, nchan]),
    y: tf.tensor2d(tgt, [idx.length, width]),
  };
}

function datasetLoss(net: DeepONet, ds: Dataset, kind: NetKind,
                     idx: number[], batch: number): number {
  let total = 0;
  let count = 0;
  for (let k = 0; k < idx.length; k += batch) {
    const part = idx.slice(k, k + batch);
    const { x, y } = gatherBatch(ds, kind, part, ds.grid);
    const l = tf.tidy(() => smoothL1(net.predict(x), y).dataSync()[0]);
    total += l * part.length;
    count += part.length;
    x.dispose();
    y.dispose();
  }
  return total / count;
}

export function train(net: DeepONet, ds: Dataset, kind: NetKind,
                      cfg: TrainConfig,
                      log: (msg: string) => void = () => {}): TrainResult {
  const { train: trainIdx, test: testIdx } = splitIndices(
    ds.n, cfg.trainFraction, cfg.seed);
  const optimizer = tf.train.adam(cfg.learningRate);
  const vars = net.trainableVariables();
  const trainLoss: number[] = [];
  const testLoss: number[] = [];

  let state = (cfg.seed >>> 0) || 1;
  const next = () => {
    state ^= state << 13; state >>>= 0;
    state ^= state >> 17;
    state ^= state << 5; state >>>= 0;
    return state / 0xffffffff;
  };

  const decayEpochs = cfg.lrDecayAt.map((f) => Math.floor(f * cfg.epochs));
  for (let epoch = 0; epoch < cfg.epochs; epoch++) {
    if (decayEpochs.includes(epoch) && epoch > 0) {
      // the stored rate drives every apply, so assigning it mid-run works
      (optimizer as unknown as { learningRate: number }).learningRate *=
        cfg.lrDecayFactor;
      log(`net=${kind} epoch=${epoch} lr -> ` +
          `${(optimizer as unknown as { learningRate: number }).learningRate}`);
    }
    const order = [...trainIdx];
    for (let i = order.length - 1; i > 0; i--) {
      const j = Math.floor(next() * (i + 1));
      [order[i], order[j]] = [order[j], order[i]];
    }
    let running = 0;
    let seen = 0;
    for (let k = 0; k < order.length; k += cfg.batchSize) {
      const part = order.slice(k, k + cfg.batchSize);
      const { x, y } = gatherBatch(ds, kind, part, ds.grid);
      const lossVal = optimizer.minimize(
        () => smoothL1(net.predict(x), y), true,
        vars as unknown as tf.Variable[]);
      running += lossVal!.dataSync()[0] * part.length;
      seen += part.length;
      lossVal!.dispose();
      x.dispose();
      y.dispose();
    }
    trainLoss.push(running / seen);
    const evalNow = (epoch + 1) % cfg.logEvery === 0 || epoch === cfg.epochs - 1;
    if (evalNow) {
      const tl = testIdx.length
        ? datasetLoss(net, ds, kind, testIdx, cfg.batchSize)
        : trainLoss[trainLoss.length - 1];
      testLoss.push(tl);
      log(`net=${kind} epoch=${epoch + 1}/${cfg.epochs} ` +
          `train=${trainLoss[trainLoss.length - 1].toExponential(3)} ` +
          `test=${tl.toExponential(3)}`);
    }
  }
  optimizer.dispose();
  return {
    trainLoss,
    testLoss,
    finalTrain: trainLoss[trainLoss.length - 1],
    finalTest: testLoss[testLoss.length - 1],
  };
}
