/**
 * Merge weight bundles into one container:
 *
 *   node dist/merge.js out.pdon in1.pdon in2.pdon ...
 *
 * Later bundles win on network-name collisions.  Used to combine the
 * control and observer training runs into the single file the simulator's
 * output-feedback mode loads.
 */

import { NamedArray, readContainer, writeContainer } from "./container.js";

export function mergeBundles(out: string, inputs: string[]): void {
  const arrays = new Map<string, NamedArray>();
  const networks: Record<string, unknown> = {};
  const training: Record<string, unknown> = {};
  for (const path of inputs) {
    const cont = readContainer(path);
    const dc = cont.meta["deeponet_config"] as
      { networks?: Record<string, unknown> } | undefined;
    if (!dc?.networks) throw new Error(`${path} is not a weights bundle`);
    for (const kind of Object.keys(dc.networks)) {
      networks[kind] = dc.networks[kind];
      for (const [name, arr] of cont.arrays) {
        if (name.startsWith(`${kind}/`)) arrays.set(name, arr);
      }
    }
    training[path] = cont.meta["training"] ?? {};
  }
  writeContainer(out, arrays, {
    deeponet_config: { networks },
    training: { merged_from: training },
  });
}

const isMain = process.argv[1] && process.argv[1].endsWith("merge.js");
if (isMain) {
  const [out, ...inputs] = process.argv.slice(2);
  if (!out || inputs.length === 0) {
    console.error("usage: merge.js <out.pdon> <in.pdon> [in2.pdon ...]");
    process.exit(1);
  }
  mergeBundles(out, inputs);
  console.log(`wrote ${out} (${inputs.length} bundles)`);
}
