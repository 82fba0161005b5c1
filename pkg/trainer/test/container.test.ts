import { execFileSync } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";
import { readContainer, writeContainer, NamedArray } from "../src/container.js";
import { loadDataset } from "../src/data.js";

function haveSolverCli(): boolean {
  try {
    execFileSync("delaystep", ["--version"], { stdio: "pipe" });
    return true;
  } catch {
    return false;
  }
}

describe("pdon container", () => {
  it("round-trips bit-exact", () => {
    const dir = mkdtempSync(join(tmpdir(), "pdon-"));
    const path = join(dir, "t.pdon");
    const arrays = new Map<string, NamedArray>([
      ["a", { shape: [2, 3], data: Float64Array.from([1, -2.5, 3e-8, 4, 5, 6.25]) }],
      ["b/c", { shape: [4], data: Float64Array.from([0.1, 0.2, -0.3, 1e300]) }],
    ]);
    writeContainer(path, arrays, { note: "x" });
    const back = readContainer(path);
    expect([...back.arrays.keys()]).toEqual(["a", "b/c"]);
    expect([...back.arrays.get("a")!.data]).toEqual([1, -2.5, 3e-8, 4, 5, 6.25]);
    expect(back.arrays.get("b/c")!.shape).toEqual([4]);
    expect(back.meta).toEqual({ note: "x" });
  });

  it("rejects bad magic", () => {
    const dir = mkdtempSync(join(tmpdir(), "pdon-"));
    const path = join(dir, "bad.pdon");
    writeFileSync(path, Buffer.from("NOPE".padEnd(40, "\0")));
    expect(() => readContainer(path)).toThrow(/magic/);
  });

  it.skipIf(!haveSolverCli())("reads solver-written datasets", () => {
    const dir = mkdtempSync(join(tmpdir(), "pdon-"));
    const path = join(dir, "ds.pdon");
    execFileSync("delaystep",
      ["dataset", "--n", "2", "--seed", "5", "--kind", "control",
       "--out", path], { stdio: "pipe" });
    const ds = loadDataset(path);
    expect(ds.n).toBe(2);
    expect(ds.grid).toBe(51);
    expect(ds.kind).toBe("control");
    expect(ds.targets.get("K")!.width).toBe(51 * 51);
    expect(ds.targets.get("L")!.width).toBe(51);
    // coefficient magnitudes within the sampled family's caps
    const fmax = Math.max(...Array.from(ds.f).map(Math.abs));
    expect(fmax).toBeLessThanOrEqual(9.0 + 1e-12);
  });

  it.skipIf(!haveSolverCli())("solver reads trainer-written containers", () => {
    const dir = mkdtempSync(join(tmpdir(), "pdon-"));
    const path = join(dir, "x.pdon");
    writeContainer(path, new Map([
      ["v", { shape: [3], data: Float64Array.from([1, 2, 3]) }],
    ]), { who: "trainer" });
    // the solver-side reader validates and round-trips the values
    const script = "import sys, json; from delaystep.container import read_container; " +
      "c = read_container(sys.argv[1]); " +
      "print(json.dumps({'v': c.arrays['v'].tolist(), 'meta': c.meta}))";
    const out = execFileSync("python3", ["-c", script, path],
                             { encoding: "utf-8" });
    const parsed = JSON.parse(out);
    expect(parsed.v).toEqual([1, 2, 3]);
    expect(parsed.meta).toEqual({ who: "trainer" });
  });
});
