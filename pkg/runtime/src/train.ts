/**
 * The training pipeline driven by a toolchain plan: load the CSV, fit the
 * preprocessing plan, build or warm-restore the model, run mini-batch
 * gradient descent with the configured optimizer, and leave behind a weight
 * archive plus an `epoch=i loss=.. acc=..` log.
 */

import { createHash } from "node:crypto";
import { appendFileSync, mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { dirname, resolve } from "node:path";

import { Archive, ParamBlock, readArchive, writeArchive } from "./archive.js";
import { Dataset, loadCsv } from "./dataset.js";
import {
  KvMap,
  KvParseError,
  Token,
  asList,
  asMap,
  asNumber,
  asString,
  parseKv,
} from "./kvtext.js";
import {
  Activation,
  Loss,
  MlpModel,
  argmax,
  initModel,
  lossAndGradients,
  predict,
  zeroGradients,
} from "./mlp.js";
import { OptimizerConfig, OptimizerState, gradList, initOptimizer, paramList, step } from "./optim.js";
import { PlanStep, TransformRecord, applyTransform, fitAndApply, identityTransform, oneHot } from "./preprocess.js";
import { Rng } from "./rng.js";

export class TrainingError extends Error {}

export interface TrainOutputs {
  archivePath: string;
  logPath: string;
  warmPath?: string;
  datasetDigest?: string;
}

export interface TrainSummary {
  finalMetric: number;
  epochs: number;
  archivePath: string;
  logPath: string;
  loadedStepCount: number;
}

export interface LoadedModel {
  model: MlpModel;
  transform: TransformRecord;
  labelNames: string[];
  manifest: KvMap;
  optState: { meta: KvMap; params: ParamBlock[] } | null;
}

// -- plan decoding -----------------------------------------------------------

export interface DecodedPlan {
  unit: string;
  inputSize: number;
  hiddenSizes: number[];
  activations: Activation[];
  outputSize: number | "auto";
  outputActivation: "softmax" | "identity";
  dropout: number[];
  dataset: string;
  features: string[];
  label?: string;
  labelsMode: "ON" | "OFF" | "SEMI";
  planSteps: PlanStep[];
  numEpoch: number;
  batchSize: number;
  seed: number;
  shuffle: boolean;
  validationSplit: number;
  loss: Loss;
  optimizer: OptimizerConfig;
  predictionResults?: string;
  trainingResults?: string;
}

export function decodePlan(plan: KvMap): DecodedPlan {
  const model = asMap(plan.get("model"), "model");
  const data = asMap(plan.get("data"), "data");
  const train = asMap(plan.get("train"), "train");
  const optimizer = asMap(train.get("optimizer"), "train.optimizer");
  const rawOutput = model.get("output");
  const labelsMode = asString(data.get("labels_mode"), "labels_mode") as "ON" | "OFF" | "SEMI";
  if (labelsMode !== "ON") {
    throw new TrainingError(`reference backend supports labels ON only, got ${labelsMode}`);
  }
  const steps: PlanStep[] = [];
  const planBlock = plan.get("plan");
  if (planBlock instanceof KvMap) {
    for (const [, stepValue] of planBlock.entries()) {
      const stepMap = asMap(stepValue, "plan step");
      const kind = asString(stepMap.get("kind"), "plan step kind") as PlanStep["kind"];
      const columns = stepMap.has("columns")
        ? asList(stepMap.get("columns"), "plan step columns").map((c) => String(c))
        : [];
      steps.push({ kind, columns });
    }
  }
  const results = plan.get("results");
  const resultsMap = results instanceof KvMap ? results : null;
  return {
    unit: asString(plan.get("unit"), "unit"),
    inputSize: asNumber(model.get("input"), "model.input"),
    hiddenSizes: asList(model.get("hidden_sizes") ?? [], "hidden_sizes").map((v) => Number(v)),
    activations: asList(model.get("activations") ?? [], "activations").map(
      (v) => String(v) as Activation,
    ),
    outputSize: rawOutput instanceof Token ? "auto" : asNumber(rawOutput, "model.output"),
    outputActivation: asString(model.get("output_activation"), "output_activation") as
      | "softmax"
      | "identity",
    dropout: model.has("dropout")
      ? asList(model.get("dropout"), "dropout").map((v) => Number(v))
      : [],
    dataset: asString(data.get("dataset"), "data.dataset"),
    features: asList(data.get("features") ?? [], "data.features").map((v) => String(v)),
    label: data.has("label") ? asString(data.get("label"), "data.label") : undefined,
    labelsMode,
    planSteps: steps,
    numEpoch: asNumber(train.get("num_epoch"), "num_epoch"),
    batchSize: asNumber(train.get("batch_size"), "batch_size"),
    seed: asNumber(train.get("seed"), "seed"),
    shuffle: train.get("shuffle") === true,
    validationSplit: asNumber(train.get("validation_split"), "validation_split"),
    loss: asString(train.get("loss"), "loss") as Loss,
    optimizer: {
      kind: asString(optimizer.get("type"), "optimizer.type") as "sgd" | "adam",
      learningRate: asNumber(optimizer.get("learning_rate"), "learning_rate"),
      momentum: Number(optimizer.get("momentum") ?? 0),
      beta1: Number(optimizer.get("beta1") ?? 0.9),
      beta2: Number(optimizer.get("beta2") ?? 0.999),
      epsilon: Number(optimizer.get("epsilon") ?? 1e-8),
    },
    predictionResults: resultsMap?.has("prediction")
      ? asString(resultsMap.get("prediction"), "results.prediction")
      : undefined,
    trainingResults: resultsMap?.has("training")
      ? asString(resultsMap.get("training"), "results.training")
      : undefined,
  };
}

// -- archive (de)serialization -------------------------------------------------

export function modelToArchive(
  model: MlpModel,
  transform: TransformRecord,
  labelNames: string[],
  meta: {
    loss: Loss;
    epochs: number;
    metric: number;
    datasetDigest?: string;
    features: string[];
    predictionResults?: string;
  },
  optState: OptimizerState | null,
): Archive {
  const manifest = KvMap.of([
    ["layer_sizes", model.sizes],
    ["activations", model.activations.map((a) => new Token(a))],
    ["output_activation", new Token(model.outputActivation)],
    ["dropout", model.dropout],
    ["loss", new Token(meta.loss)],
    ["epochs", meta.epochs],
    ["metric", Number(meta.metric.toFixed(6))],
    ["features", meta.features],
    ["label_names", labelNames],
    ["transform_steps", transform.steps.map((s) => new Token(s))],
  ]);
  if (meta.datasetDigest) manifest.set("dataset_digest", meta.datasetDigest);
  if (meta.predictionResults) manifest.set("prediction_results", meta.predictionResults);

  const params: ParamBlock[] = [];
  for (let l = 0; l < model.weights.length; l++) {
    params.push({ name: `w${l}`, dims: [model.sizes[l], model.sizes[l + 1]], values: model.weights[l] });
    params.push({ name: `b${l}`, dims: [model.sizes[l + 1]], values: model.biases[l] });
  }
  params.push({ name: "t.offset", dims: [transform.offset.length], values: transform.offset });
  params.push({ name: "t.scale", dims: [transform.scale.length], values: transform.scale });

  let optMeta: KvMap | null = null;
  const optParams: ParamBlock[] = [];
  if (optState !== null) {
    optMeta = KvMap.of([
      ["kind", new Token(optState.config.kind)],
      ["step_count", optState.stepCount],
      ["learning_rate", optState.config.learningRate],
      ["momentum", optState.config.momentum],
      ["beta1", optState.config.beta1],
      ["beta2", optState.config.beta2],
      ["epsilon", optState.config.epsilon],
    ]);
    const names = paramList(model).length;
    for (let p = 0; p < names; p++) {
      optParams.push({ name: `m.${p}`, dims: [optState.m[p].length], values: optState.m[p] });
      if (optState.config.kind === "adam") {
        optParams.push({ name: `v.${p}`, dims: [optState.v[p].length], values: optState.v[p] });
      }
    }
  }
  return { manifest, params, optParams, optMeta };
}

export function archiveToModel(archive: Archive): LoadedModel {
  const manifest = archive.manifest;
  const sizes = asList(manifest.get("layer_sizes"), "layer_sizes").map((v) => Number(v));
  const activations = asList(manifest.get("activations") ?? [], "activations").map(
    (v) => String(v) as Activation,
  );
  const outputActivation = asString(manifest.get("output_activation"), "output_activation") as
    | "softmax"
    | "identity";
  const dropout = manifest.has("dropout")
    ? asList(manifest.get("dropout"), "dropout").map((v) => Number(v))
    : [];
  const byName = new Map(archive.params.map((p) => [p.name, p]));
  const weights: Float64Array[] = [];
  const biases: Float64Array[] = [];
  for (let l = 0; l < sizes.length - 1; l++) {
    const w = byName.get(`w${l}`);
    const b = byName.get(`b${l}`);
    if (!w || !b) throw new TrainingError(`archive misses parameters for layer ${l}`);
    weights.push(w.values);
    biases.push(b.values);
  }
  const model: MlpModel = { sizes, activations, outputActivation, weights, biases, dropout };
  const width = sizes[0];
  const transform = identityTransform(width);
  const offset = byName.get("t.offset");
  const scale = byName.get("t.scale");
  if (offset && scale) {
    transform.offset = offset.values;
    transform.scale = scale.values;
  }
  if (manifest.has("transform_steps")) {
    transform.steps = asList(manifest.get("transform_steps"), "transform_steps").map(
      (s) => String(s) as TransformRecord["steps"][number],
    );
  }
  const labelNames = manifest.has("label_names")
    ? asList(manifest.get("label_names"), "label_names").map((v) => String(v))
    : [];
  let optState: LoadedModel["optState"] = null;
  if (archive.optMeta !== null) {
    optState = { meta: archive.optMeta, params: archive.optParams };
  }
  return { model, transform, labelNames, manifest, optState };
}

function restoreOptimizer(loaded: LoadedModel, config: OptimizerConfig, model: MlpModel): OptimizerState {
  const state = initOptimizer(config, model);
  if (loaded.optState === null) return state;
  state.stepCount = Number(loaded.optState.meta.get("step_count") ?? 0);
  const byName = new Map(loaded.optState.params.map((p) => [p.name, p]));
  const count = paramList(model).length;
  for (let p = 0; p < count; p++) {
    const m = byName.get(`m.${p}`);
    if (m && state.m[p].length === m.values.length) state.m[p] = m.values;
    const v = byName.get(`v.${p}`);
    if (v && config.kind === "adam" && state.v[p].length === v.values.length) state.v[p] = v.values;
  }
  return state;
}

// -- training loop -------------------------------------------------------------

function accuracy(model: MlpModel, inputs: Float64Array[], classIds: Int32Array, rows: number[]): number {
  if (rows.length === 0) return 0;
  let correct = 0;
  for (const r of rows) {
    if (argmax(predict(model, inputs[r])) === classIds[r]) correct++;
  }
  return correct / rows.length;
}

function rSquared(model: MlpModel, inputs: Float64Array[], targets: Float64Array, rows: number[]): number {
  if (rows.length === 0) return 0;
  let mean = 0;
  for (const r of rows) mean += targets[r];
  mean /= rows.length;
  let ssRes = 0;
  let ssTot = 0;
  for (const r of rows) {
    const pred = predict(model, inputs[r])[0];
    ssRes += (targets[r] - pred) ** 2;
    ssTot += (targets[r] - mean) ** 2;
  }
  if (ssTot === 0) return ssRes === 0 ? 1 : 0;
  return Math.max(0, 1 - ssRes / ssTot);
}

export function trainFromPlan(plan: DecodedPlan, out: TrainOutputs, cwd: string = "."): TrainSummary {
  const datasetPath = resolve(cwd, plan.dataset);
  const regression = plan.outputActivation === "identity";
  const dataset: Dataset = loadCsv(datasetPath, {
    features: plan.features,
    labelsMode: plan.labelsMode,
    label: plan.label,
    regression,
  });
  if (dataset.featureNames.length !== plan.inputSize) {
    throw new TrainingError(
      `model expects ${plan.inputSize} features, dataset provides ${dataset.featureNames.length}`,
    );
  }

  // split first (fit statistics must not see held-out rows), then transform
  const indices = [...Array(dataset.rowCount).keys()];
  const splitRng = new Rng(plan.seed);
  if (plan.shuffle) splitRng.shuffle(indices);
  const nVal = Math.floor(dataset.rowCount * plan.validationSplit);
  const trainRows = indices.slice(0, dataset.rowCount - nVal);
  const valRows = indices.slice(dataset.rowCount - nVal);
  const transform = fitAndApply(dataset, plan.planSteps, trainRows);

  let nOut: number;
  if (regression) {
    nOut = plan.outputSize === "auto" ? 1 : plan.outputSize;
  } else {
    const classes = dataset.labelNames.length;
    if (plan.outputSize !== "auto" && plan.outputSize !== classes) {
      throw new TrainingError(
        `architecture declares ${plan.outputSize} classes, dataset has ${classes}`,
      );
    }
    nOut = plan.outputSize === "auto" ? classes : plan.outputSize;
  }

  const targets: Float64Array[] = [];
  if (regression) {
    const raw = dataset.labels as Float64Array;
    for (let r = 0; r < dataset.rowCount; r++) targets.push(Float64Array.of(raw[r]));
  } else {
    const ids = dataset.labels as Int32Array;
    for (let r = 0; r < dataset.rowCount; r++) targets.push(oneHot(ids[r], nOut));
  }

  const sizes = [plan.inputSize, ...plan.hiddenSizes, nOut];
  const rng = new Rng(plan.seed);
  let model = initModel(sizes, plan.activations, plan.outputActivation, rng, plan.dropout);
  let startEpoch = 1;
  let loadedStepCount = 0;
  let optState: OptimizerState;
  if (out.warmPath) {
    const loaded = archiveToModel(readArchive(resolve(cwd, out.warmPath)));
    if (loaded.model.sizes.join(",") !== sizes.join(",")) {
      throw new TrainingError(
        `warm-start archive shape [${loaded.model.sizes}] does not match model [${sizes}]`,
      );
    }
    model = loaded.model;
    startEpoch = Number(loaded.manifest.get("epochs") ?? 0) + 1;
    optState = restoreOptimizer(loaded, plan.optimizer, model);
    loadedStepCount = optState.stepCount;
  } else {
    optState = initOptimizer(plan.optimizer, model);
  }

  const params = paramList(model);
  const logLines: string[] = [];
  const epochRng = new Rng(plan.seed ^ 0x5eed);
  let metric = 0;
  const finalEpoch = startEpoch + plan.numEpoch - 1;
  for (let epoch = startEpoch; epoch <= finalEpoch; epoch++) {
    const order = [...trainRows];
    if (plan.shuffle) epochRng.shuffle(order);
    let epochLoss = 0;
    let batches = 0;
    for (let at = 0; at < order.length; at += plan.batchSize) {
      const rows = order.slice(at, at + plan.batchSize);
      const xs = rows.map((r) => dataset.features[r]);
      const ys = rows.map((r) => targets[r]);
      const grads = zeroGradients(model);
      epochLoss += lossAndGradients(model, xs, ys, plan.loss, grads, true, epochRng);
      step(optState, params, gradList(grads));
      batches++;
    }
    const evalRows = valRows.length ? valRows : trainRows;
    metric = regression
      ? rSquared(model, dataset.features, dataset.labels as Float64Array, evalRows)
      : accuracy(model, dataset.features, dataset.labels as Int32Array, evalRows);
    logLines.push(
      `epoch=${epoch} loss=${(epochLoss / Math.max(1, batches)).toFixed(6)} acc=${metric.toFixed(4)}`,
    );
  }
  logLines.push(`final_acc=${metric.toFixed(4)}`);

  const logPath = resolve(cwd, out.logPath);
  mkdirSync(dirname(logPath), { recursive: true });
  writeFileSync(logPath, logLines.join("\n") + "\n");

  const archive = modelToArchive(
    model,
    transform,
    dataset.labelNames,
    {
      loss: plan.loss,
      epochs: finalEpoch,
      metric,
      datasetDigest: out.datasetDigest,
      features: dataset.featureNames,
      predictionResults: plan.predictionResults,
    },
    optState,
  );
  const archivePath = resolve(cwd, out.archivePath);
  writeArchive(archivePath, archive);
  return {
    finalMetric: metric,
    epochs: finalEpoch,
    archivePath: out.archivePath,
    logPath: out.logPath,
    loadedStepCount,
  };
}

export function runTrainingPlan(plan: KvMap, out: TrainOutputs, cwd: string = "."): TrainSummary {
  return trainFromPlan(decodePlan(plan), out, cwd);
}

/** Entry point for generated train.mjs programs. */
export async function runTrainingPlanFile(planPath: string, argv: string[]): Promise<TrainSummary> {
  const text = readFileSync(planPath, "utf-8");
  let plan: KvMap;
  try {
    plan = parseKv(text);
  } catch (err) {
    throw new TrainingError(`cannot parse plan ${planPath}: ${(err as KvParseError).message}`);
  }
  const args = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    args.set(argv[i], argv[i + 1] ?? "");
  }
  const outArchive = args.get("--out-archive") ?? "model.mlcw";
  const outLog = args.get("--out-log") ?? "train.log";
  return runTrainingPlan(
    plan,
    { archivePath: outArchive, logPath: outLog, warmPath: args.get("--warm") },
    process.cwd(),
  );
}

/** Append a prediction line to the configured results file, if any. */
export function recordPrediction(loaded: LoadedModel, output: Float64Array, cwd: string): void {
  const target = loaded.manifest.get("prediction_results");
  if (typeof target !== "string") return;
  const path = resolve(cwd, target);
  mkdirSync(dirname(path), { recursive: true });
  const klass = argmax(output);
  const label = loaded.labelNames[klass] ?? String(klass);
  const vector = Array.from(output, (v) => v.toPrecision(6)).join(",");
  appendFileSync(path, `${label}\t${vector}\n`);
}

export function datasetDigest(path: string): string {
  return createHash("sha256").update(readFileSync(path)).digest("hex");
}

export { applyTransform };
