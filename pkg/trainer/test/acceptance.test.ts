/**
 * Trained-bundle acceptance checks.
 *
 * These run against real training artifacts, which take too long to
 * produce inside the unit-test suite; point the environment variables at
 * exported bundles to activate them:
 *
 *   TRAINED_Q_BUNDLE    observer-gain pair bundle (Q1, Q2)
 *   TRAINED_CTL_BUNDLE  control bundle holding K, L and J
 *
 * Loss targets follow the reference figures (order 1e-5 for control nets,
 * 1e-4..1e-5 for gain nets) within one order of magnitude; the
 * closed-loop check drives the solver CLI with the trained bundle and
 * compares state snapshots against the exact-gain loop (peak error within
 * 8% of the peak state).
 */

import { execFileSync } from "node:child_process";
import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";
import { readContainer } from "../src/container.js";

const Q_BUNDLE = process.env.TRAINED_Q_BUNDLE ?? "";
const CTL_BUNDLE = process.env.TRAINED_CTL_BUNDLE ?? "";

function haveSolverCli(): boolean {
  try {
    execFileSync("delaystep", ["--version"], { stdio: "pipe" });
    return true;
  } catch {
    return false;
  }
}

interface Snapshot {
  times: number[];
  fields: number[][];
}

function runSnapshots(extra: string[]): Snapshot {
  const dir = mkdtempSync(join(tmpdir(), "accept-"));
  const out = join(dir, "t.csv");
  execFileSync("delaystep", [
    "simulate", "--mode", "state_fb", "--ds", "0.02", "--horizon", "8",
    "--snapshots", "--stride", "100", "--format", "csv", "--out", out,
    ...extra,
  ], { stdio: "pipe" });
  const snapPath = out.replace(/\.csv$/, ".snapshots.csv");
  const lines = readFileSync(snapPath, "utf-8").trim().split("\n").slice(1);
  const byTime = new Map<number, number[]>();
  for (const line of lines) {
    const [t, , x] = line.split(",").map(Number);
    if (!byTime.has(t)) byTime.set(t, []);
    byTime.get(t)!.push(x);
  }
  const times = [...byTime.keys()].sort((a, b) => a - b);
  return { times, fields: times.map((t) => byTime.get(t)!) };
}

function finalLosses(path: string): Record<string, { train: number; test: number }> {
  const meta = readContainer(path).meta as {
    training?: { final_losses?: Record<string, { train: number; test: number }> };
  };
  const losses = meta.training?.final_losses;
  if (!losses) throw new Error(`${path} carries no final_losses block`);
  return losses;
}

describe.skipIf(!Q_BUNDLE)("trained observer-gain bundle", () => {
  it("reaches gain-net losses within one order of the reference figures", () => {
    const losses = finalLosses(Q_BUNDLE);
    // reference: 5.02e-5 train / 6.36e-5 test; bar = one order above
    for (const kind of ["Q1", "Q2"]) {
      expect(losses[kind], `${kind} losses missing`).toBeDefined();
      expect(losses[kind].train).toBeLessThan(5.02e-4);
      expect(losses[kind].test).toBeLessThan(6.36e-4);
    }
  });
});

describe.skipIf(!CTL_BUNDLE || !haveSolverCli())("trained control bundle", () => {
  it("reports its control-net losses against the reference band", () => {
    const losses = finalLosses(CTL_BUNDLE);
    for (const kind of ["K", "L", "J"]) {
      expect(losses[kind], `${kind} losses missing`).toBeDefined();
      expect(losses[kind].train).toBeLessThan(1.9e-4);
    }
  });

  it("closes the loop within 8% peak error of the exact-gain run", () => {
    const exact = runSnapshots([]);
    const neural = runSnapshots([
      "--gains-from", "neural", "--gains-path", CTL_BUNDLE,
    ]);
    expect(neural.times.length).toBe(exact.times.length);
    let peakX = 0;
    let peakErr = 0;
    for (let k = 0; k < exact.times.length; k++) {
      for (let i = 0; i < exact.fields[k].length; i++) {
        peakX = Math.max(peakX, Math.abs(exact.fields[k][i]));
        peakErr = Math.max(peakErr,
                           Math.abs(exact.fields[k][i] - neural.fields[k][i]));
      }
    }
    expect(peakErr).toBeLessThan(0.08 * peakX);
  }, 300_000);
});
