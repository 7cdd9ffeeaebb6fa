import { mkdtempSync, readFileSync, writeFileSync, appendFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { readArchive } from "../src/archive.js";
import { KvMap, Token } from "../src/kvtext.js";
import { argmax, initModel, predict } from "../src/mlp.js";
import { Rng } from "../src/rng.js";
import { DecodedPlan, archiveToModel, trainFromPlan } from "../src/train.js";
import { applyTransform } from "../src/preprocess.js";

const DIGITS = join(__dirname, "..", "..", "demo", "mnist_calculator", "data", "digits.csv");

function basePlan(overrides: Partial<DecodedPlan>): DecodedPlan {
  return {
    unit: "test",
    inputSize: 1,
    hiddenSizes: [],
    activations: [],
    outputSize: 1,
    outputActivation: "identity",
    dropout: [],
    dataset: "data.csv",
    features: [],
    label: "y",
    labelsMode: "ON",
    planSteps: [],
    numEpoch: 10,
    batchSize: 4,
    seed: 42,
    shuffle: true,
    validationSplit: 0.2,
    loss: "mean_squared_error",
    optimizer: {
      kind: "sgd",
      learningRate: 0.1,
      momentum: 0,
      beta1: 0.9,
      beta2: 0.999,
      epsilon: 1e-8,
    },
    ...overrides,
  };
}

function tmpProject(): string {
  return mkdtempSync(join(tmpdir(), "train-"));
}

describe("reference trainer", () => {
  it("learns y = 2x within 1e-2 of the least-squares solution", () => {
    const dir = tmpProject();
    const lines = ["x,y"];
    for (let i = 0; i < 40; i++) {
      const x = i / 10;
      lines.push(`${x},${2 * x}`);
    }
    writeFileSync(join(dir, "data.csv"), lines.join("\n") + "\n");
    // closed-form least squares through the origin-with-intercept model:
    // the generator is exactly linear, so the optimum is w = 2, b = 0
    const plan = basePlan({ numEpoch: 200, validationSplit: 0.2 });
    const summary = trainFromPlan(plan, { archivePath: "m.mlcw", logPath: "t.log" }, dir);
    const loaded = archiveToModel(readArchive(join(dir, "m.mlcw")));
    expect(Math.abs(loaded.model.weights[0][0] - 2.0)).toBeLessThanOrEqual(1e-2);
    expect(Math.abs(loaded.model.biases[0][0])).toBeLessThanOrEqual(5e-2);
    expect(summary.finalMetric).toBeGreaterThan(0.99); // R^2 on held-out rows
  });

  it(
    "MLP [64,128,10] with adam lr 0.001 reaches >= 0.90 held-out accuracy on the digits",
    () => {
      const dir = tmpProject();
      const plan = basePlan({
        inputSize: 64,
        hiddenSizes: [128],
        activations: ["relu"],
        outputSize: "auto",
        outputActivation: "softmax",
        dataset: DIGITS,
        label: "label",
        planSteps: [
          { kind: "standardize", columns: [] },
          { kind: "one_hot", columns: [] },
        ],
        numEpoch: 30,
        batchSize: 16,
        loss: "categorical_crossentropy",
        optimizer: {
          kind: "adam",
          learningRate: 0.001,
          momentum: 0,
          beta1: 0.9,
          beta2: 0.999,
          epsilon: 1e-8,
        },
      });
      const summary = trainFromPlan(plan, { archivePath: "d.mlcw", logPath: "d.log" }, dir);
      expect(summary.finalMetric).toBeGreaterThanOrEqual(0.9);
      const log = readFileSync(join(dir, "d.log"), "utf-8");
      expect(log).toMatch(/^epoch=1 loss=/);
      expect(log.trim().split("\n").at(-1)).toMatch(/^final_acc=0\.9/);
    },
    60_000,
  );

  it("warm start resumes epoch numbering and optimizer step count exactly", () => {
    const dir = tmpProject();
    const lines = ["x,y"];
    for (let i = 0; i < 30; i++) lines.push(`${i / 10},${i % 2}`);
    writeFileSync(join(dir, "data.csv"), lines.join("\n") + "\n");
    const plan = basePlan({
      outputSize: "auto",
      outputActivation: "softmax",
      loss: "categorical_crossentropy",
      planSteps: [{ kind: "one_hot", columns: [] }],
      numEpoch: 5,
      optimizer: { kind: "adam", learningRate: 0.01, momentum: 0, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 },
    });
    trainFromPlan(plan, { archivePath: "m1.mlcw", logPath: "t1.log" }, dir);
    const first = readArchive(join(dir, "m1.mlcw"));
    const savedSteps = Number(first.optMeta!.get("step_count"));
    expect(savedSteps).toBeGreaterThan(0);

    appendFileSync(join(dir, "data.csv"), "5.5,1\n5.6,0\n");
    const summary = trainFromPlan(
      plan,
      { archivePath: "m2.mlcw", logPath: "t2.log", warmPath: "m1.mlcw" },
      dir,
    );
    expect(summary.loadedStepCount).toBe(savedSteps);
    const log = readFileSync(join(dir, "t2.log"), "utf-8");
    expect(log).toMatch(/^epoch=6 /);
    const second = readArchive(join(dir, "m2.mlcw"));
    expect(Number(second.manifest.get("epochs"))).toBe(10);
    expect(Number(second.optMeta!.get("step_count"))).toBeGreaterThan(savedSteps);
  });

  it("fixed seed and fixed data give an identical archive digest", () => {
    const dir = tmpProject();
    const lines = ["x,y"];
    for (let i = 0; i < 20; i++) lines.push(`${i},${i % 3}`);
    writeFileSync(join(dir, "data.csv"), lines.join("\n") + "\n");
    const plan = basePlan({
      outputSize: "auto",
      outputActivation: "softmax",
      loss: "categorical_crossentropy",
      planSteps: [
        { kind: "standardize", columns: [] },
        { kind: "one_hot", columns: [] },
      ],
    });
    trainFromPlan(plan, { archivePath: "a.mlcw", logPath: "a.log" }, dir);
    trainFromPlan(plan, { archivePath: "b.mlcw", logPath: "b.log" }, dir);
    expect(readFileSync(join(dir, "a.mlcw"))).toEqual(readFileSync(join(dir, "b.mlcw")));
  });

  it("softmax outputs sum to 1 within 1e-6", () => {
    const model = initModel([4, 5, 3], ["relu"], "softmax", new Rng(7));
    const out = predict(model, Float64Array.of(0.5, -1, 2, 0));
    const sum = out.reduce((s, v) => s + v, 0);
    expect(Math.abs(sum - 1)).toBeLessThanOrEqual(1e-6);
  });

  it("identity network reproduces its (transformed) input", () => {
    const model = initModel([3, 3], [], "identity", new Rng(1));
    model.weights[0].set([1, 0, 0, 0, 1, 0, 0, 0, 1]);
    model.biases[0].fill(0);
    const x = Float64Array.of(0.25, -0.5, 2);
    expect(Array.from(predict(model, x))).toEqual(Array.from(x));
  });

  it("class count mismatch against a fixed output size is an error", () => {
    const dir = tmpProject();
    writeFileSync(join(dir, "data.csv"), "x,y\n1,0\n2,1\n3,2\n");
    const plan = basePlan({
      outputSize: 2, // dataset has 3 classes
      outputActivation: "softmax",
      loss: "categorical_crossentropy",
      planSteps: [{ kind: "one_hot", columns: [] }],
    });
    expect(() => trainFromPlan(plan, { archivePath: "x.mlcw", logPath: "x.log" }, dir)).toThrow(
      /3|classes/,
    );
  });
});
