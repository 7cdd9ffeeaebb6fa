/**
 * Preprocessing: feature scaling plus one-hot label encoding. Fitted
 * statistics are recorded so prediction-time inputs go through the exact
 * same transforms (they travel inside the weight archive).
 */

import { Dataset } from "./dataset.js";

export interface PlanStep {
  kind: "standardize" | "normalize" | "one_hot";
  columns: string[];
}

export interface TransformRecord {
  steps: Array<"standardize" | "normalize" | "one_hot">;
  /** per feature index; identity entries for untouched columns */
  mean: Float64Array;
  scale: Float64Array; // std for standardize, (max-min) for normalize; 1 when untouched
  offset: Float64Array; // min for normalize, mean for standardize
}

export class UnknownColumn extends Error {
  constructor(name: string) {
    super(`preprocessing references unknown column '${name}'`);
  }
}

export function identityTransform(width: number): TransformRecord {
  return {
    steps: [],
    mean: new Float64Array(width),
    scale: new Float64Array(width).fill(1),
    offset: new Float64Array(width),
  };
}

/**
 * Fit the plan's statistics (optionally over a row subset, e.g. the training
 * split) and rewrite the whole feature matrix in place.
 * standardize: (x - mean) / std with population std (constant columns keep
 * std = 1 so they pass through as zeros); normalize: (x - min) / (max - min).
 */
export function fitAndApply(
  dataset: Dataset,
  steps: PlanStep[],
  fitRows?: number[],
): TransformRecord {
  const width = dataset.featureNames.length;
  const record = identityTransform(width);
  const rows = fitRows ?? [...Array(dataset.rowCount).keys()];
  for (const step of steps) {
    if (step.kind === "one_hot") {
      record.steps.push("one_hot");
      continue;
    }
    const indices = (step.columns.length ? step.columns : dataset.featureNames).map((name) => {
      const index = dataset.featureNames.indexOf(name);
      if (index < 0) throw new UnknownColumn(name);
      return index;
    });
    if (step.kind === "standardize") {
      record.steps.push("standardize");
      for (const f of indices) {
        let sum = 0;
        for (const r of rows) sum += dataset.features[r][f];
        const mean = sum / rows.length;
        let varSum = 0;
        for (const r of rows) varSum += (dataset.features[r][f] - mean) ** 2;
        const std = Math.sqrt(varSum / rows.length);
        const scale = std > 0 ? std : 1; // constant columns pass through
        record.offset[f] = mean;
        record.scale[f] = scale;
        for (const row of dataset.features) row[f] = (row[f] - mean) / scale;
      }
    } else {
      record.steps.push("normalize");
      for (const f of indices) {
        let min = Infinity;
        let max = -Infinity;
        for (const r of rows) {
          const v = dataset.features[r][f];
          if (v < min) min = v;
          if (v > max) max = v;
        }
        const range = max > min ? max - min : 1;
        record.offset[f] = min;
        record.scale[f] = range;
        for (const row of dataset.features) row[f] = (row[f] - min) / range;
      }
    }
  }
  return record;
}

/** Apply a fitted transform to one raw feature vector. */
export function applyTransform(record: TransformRecord, input: Float64Array): Float64Array {
  const out = new Float64Array(input.length);
  for (let i = 0; i < input.length; i++) {
    out[i] = (input[i] - record.offset[i]) / record.scale[i];
  }
  return out;
}

/** Class id k of K becomes a K-vector with a single 1 at position k. */
export function oneHot(classId: number, classes: number): Float64Array {
  const row = new Float64Array(classes);
  row[classId] = 1;
  return row;
}
