import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { archiveBytes, readArchive, writeArchive, Archive, ArchiveFormatError } from "../src/archive.js";
import { KvMap, Token } from "../src/kvtext.js";
import { initModel } from "../src/mlp.js";
import { gradList, initOptimizer, paramList, step } from "../src/optim.js";
import { zeroGradients } from "../src/mlp.js";
import { Rng } from "../src/rng.js";

function sampleArchive(): Archive {
  return {
    manifest: KvMap.of([
      ["layer_sizes", [2, 3]],
      ["activations", []],
      ["output_activation", new Token("softmax")],
      ["epochs", 4],
    ]),
    params: [
      { name: "w0", dims: [2, 3], values: Float64Array.of(0.1, 0.2, 0.3, 0.4, 0.5, 0.6) },
      { name: "b0", dims: [3], values: Float64Array.of(0, 0, 0) },
    ],
    optMeta: KvMap.of([["kind", new Token("adam")], ["step_count", 12]]),
    optParams: [{ name: "m.0", dims: [6], values: new Float64Array(6) }],
  };
}

describe("optimizers", () => {
  it("adam step with zero gradients leaves parameters unchanged", () => {
    const model = initModel([3, 4, 2], ["relu"], "softmax", new Rng(5));
    const before = paramList(model).map((p) => Float64Array.from(p));
    const state = initOptimizer(
      { kind: "adam", learningRate: 0.1, momentum: 0, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 },
      model,
    );
    step(state, paramList(model), gradList(zeroGradients(model)));
    const after = paramList(model);
    before.forEach((b, i) => expect(Array.from(after[i])).toEqual(Array.from(b)));
    expect(state.stepCount).toBe(1);
  });

  it("sgd moves parameters against the gradient", () => {
    const model = initModel([1, 1], [], "identity", new Rng(5));
    model.weights[0][0] = 1.0;
    const state = initOptimizer(
      { kind: "sgd", learningRate: 0.5, momentum: 0, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 },
      model,
    );
    const grads = zeroGradients(model);
    grads.weights[0][0] = 2.0;
    step(state, paramList(model), gradList(grads));
    expect(model.weights[0][0]).toBeCloseTo(0.0, 12);
  });
});

describe("weight archives", () => {
  it("round-trips at 32-bit precision", () => {
    const dir = mkdtempSync(join(tmpdir(), "arch-"));
    const path = join(dir, "m.mlcw");
    writeArchive(path, sampleArchive());
    const loaded = readArchive(path);
    expect(loaded.manifest.get("epochs")).toBe(4);
    expect(Array.from(loaded.params[0].values)).toEqual(
      Array.from(sampleArchive().params[0].values, (v) => Math.fround(v)),
    );
    expect(loaded.optMeta?.get("step_count")).toBe(12);
  });

  it("emits deterministic bytes", () => {
    expect(archiveBytes(sampleArchive())).toEqual(archiveBytes(sampleArchive()));
  });

  it("detects payload corruption via the trailer digest", () => {
    const dir = mkdtempSync(join(tmpdir(), "arch-"));
    const path = join(dir, "m.mlcw");
    writeArchive(path, sampleArchive());
    const fs = require("node:fs");
    const data = fs.readFileSync(path);
    data[30] ^= 0xff;
    fs.writeFileSync(path, data);
    expect(() => readArchive(path)).toThrow(ArchiveFormatError);
  });

  it("is readable by the toolchain's reader (same grammar)", () => {
    // the manifest must parse as canonical kv text; cross-checked in the
    // Python integration suite, asserted here structurally
    const bytes = archiveBytes(sampleArchive());
    expect(bytes.subarray(0, 6).toString("ascii")).toBe("MLCW1\n");
    expect(bytes.toString("latin1")).toContain("TRAILER sha256=");
  });
});
