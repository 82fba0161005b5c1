/**
 * Trainer entry point.
 *
 *   node dist/cli.js --dataset data.pdon --net K --out weights.pdon \
 *       [--epochs 300] [--batch 32] [--lr 1e-3] [--seed 0] [--reduced] \
 *       [--encoding grid|raw] [--split 0.9]
 *
 * --net K trains the triangle kernel net; --net LJ trains the two
 * delay-line nets on a shared loader; --net Q trains both injection-gain
 * nets.  All nets of an invocation are written into one bundle.
 */

import { selectBackend } from "./backend.js";
import { loadDataset, sliceDataset, NetKind } from "./data.js";
import { exportBundle } from "./export.js";
import { DeepONet, NetSize, defaultNetConfig } from "./model.js";
import { TrainConfig, defaultTrainConfig, train } from "./train.js";

interface Args {
  dataset: string;
  net: "K" | "LJ" | "Q";
  out: string;
  epochs: number;
  batch: number;
  lr: number;
  seed: number;
  size: NetSize;
  encoding: "grid" | "raw";
  split: number;
  backend: "wasm" | "cpu";
  limit: number;
}

function parseArgs(argv: string[]): Args {
  const out: Record<string, string | boolean> = {};
  for (let i = 0; i < argv.length; i++) {
    const a = argv[i];
    if (!a.startsWith("--")) throw new Error(`unexpected argument ${a}`);
    const key = a.slice(2);
    if (key === "reduced") {
      out["size"] = "reduced";
    } else {
      out[key] = argv[++i];
      if (out[key] === undefined) throw new Error(`missing value for --${key}`);
    }
  }
  for (const req of ["dataset", "net", "out"]) {
    if (!(req in out)) throw new Error(`--${req} is required`);
  }
  const net = String(out.net);
  if (!["K", "LJ", "Q"].includes(net)) {
    throw new Error("--net must be K, LJ or Q");
  }
  const size = String(out.size ?? "full");
  if (!["full", "medium", "reduced"].includes(size)) {
    throw new Error("--size must be full, medium or reduced");
  }
  return {
    dataset: String(out.dataset),
    net: net as Args["net"],
    out: String(out.out),
    epochs: Number(out.epochs ?? defaultTrainConfig.epochs),
    batch: Number(out.batch ?? defaultTrainConfig.batchSize),
    lr: Number(out.lr ?? defaultTrainConfig.learningRate),
    seed: Number(out.seed ?? 0),
    size: size as NetSize,
    encoding: (out.encoding as "grid" | "raw") ?? "grid",
    split: Number(out.split ?? defaultTrainConfig.trainFraction),
    backend: (out.backend as "wasm" | "cpu") ?? "wasm",
    limit: Number(out.limit ?? 0),
  };
}

export async function main(argv: string[]): Promise<number> {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error(`usage error: ${(err as Error).message}`);
    return 1;
  }
  let ds = loadDataset(args.dataset);
  if (args.limit > 0 && args.limit < ds.n) {
    ds = sliceDataset(ds, args.limit);
  }
  const kinds: NetKind[] =
    args.net === "K" ? ["K"] : args.net === "LJ" ? ["L", "J"] : ["Q1", "Q2"];
  for (const kind of kinds) {
    if (!ds.targets.has(kind)) {
      console.error(`dataset ${args.dataset} has no targets for ${kind}`);
      return 1;
    }
  }
  const cfg: TrainConfig = {
    ...defaultTrainConfig,
    epochs: args.epochs,
    batchSize: args.batch,
    learningRate: args.lr,
    seed: args.seed,
    trainFraction: args.split,
  };
  const backend = await selectBackend(args.backend);
  console.log(`training ${kinds.join(", ")} on ${ds.n} samples ` +
              `(${args.epochs} epochs, batch ${args.batch}, lr ${args.lr}, ` +
              `size ${args.size}, backend ${backend})`);
  const nets = new Map<string, DeepONet>();
  const losses: Record<string, { train: number; test: number }> = {};
  for (const kind of kinds) {
    const netCfg = {
      ...defaultNetConfig(kind, args.size),
      queryEncoding: args.encoding,
    };
    if (args.encoding === "raw") {
      netCfg.trunkFc = [netCfg.queryDim, netCfg.trunkFc[1], netCfg.trunkFc[2]];
    }
    const net = new DeepONet(netCfg, args.seed);
    const t0 = Date.now();
    const result = train(net, ds, kind, cfg, (m) => console.log(m));
    console.log(`net=${kind} done in ${((Date.now() - t0) / 1e3).toFixed(1)}s ` +
                `train=${result.finalTrain.toExponential(3)} ` +
                `test=${result.finalTest.toExponential(3)}`);
    losses[kind] = { train: result.finalTrain, test: result.finalTest };
    nets.set(kind, net);
  }
  exportBundle(args.out, nets, {
    optimizer: "adam",
    lr_schedule: {
      decay_at: defaultTrainConfig.lrDecayAt,
      decay_factor: defaultTrainConfig.lrDecayFactor,
    },
    learning_rate: args.lr,
    epochs: args.epochs,
    batch_size: args.batch,
    seed: args.seed,
    train_fraction: args.split,
    dataset: args.dataset,
    n_samples: ds.n,
    size: args.size,
    backend,
    final_losses: losses,
  });
  console.log(`wrote ${args.out}`);
  for (const net of nets.values()) net.dispose();
  return 0;
}

const isMain = process.argv[1] &&
  import.meta.url.endsWith(process.argv[1].split("/").pop()!);
if (isMain) {
  main(process.argv.slice(2)).then((code) => process.exit(code));
}
