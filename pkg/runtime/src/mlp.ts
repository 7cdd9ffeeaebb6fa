/**
 * The reference MLP family: fully-connected layers with per-layer
 * activations, softmax or identity head. Degenerate cases (no hidden layer)
 * give linear and logistic regression. Plain loops over Float64Array keep
 * the math dependency-free; weights are 64-bit during training and quantize
 * to 32-bit only inside archives.
 */

import { Rng } from "./rng.js";

export type Activation = "relu" | "sigmoid" | "tanh" | "identity";
export type OutputActivation = "softmax" | "identity";
export type Loss = "categorical_crossentropy" | "mean_squared_error";

export interface MlpModel {
  sizes: number[]; // [n_in, h1, ..., n_out]
  activations: Activation[]; // one per hidden layer
  outputActivation: OutputActivation;
  weights: Float64Array[]; // layer l: sizes[l] x sizes[l+1], row-major
  biases: Float64Array[];
  dropout: number[]; // per hidden layer, 0 disables
}

export class ShapeMismatch extends Error {}

export class NumericOverflow extends Error {
  constructor() {
    super("training diverged: loss is not finite");
  }
}

export function initModel(
  sizes: number[],
  activations: Activation[],
  outputActivation: OutputActivation,
  rng: Rng,
  dropout: number[] = [],
): MlpModel {
  if (sizes.length < 2) throw new ShapeMismatch("model needs at least input and output sizes");
  if (activations.length !== sizes.length - 2) {
    throw new ShapeMismatch(
      `expected ${sizes.length - 2} hidden activations, got ${activations.length}`,
    );
  }
  const weights: Float64Array[] = [];
  const biases: Float64Array[] = [];
  for (let l = 0; l < sizes.length - 1; l++) {
    const fanIn = sizes[l];
    const fanOut = sizes[l + 1];
    const limit = Math.sqrt(6 / (fanIn + fanOut)); // Glorot uniform
    const w = new Float64Array(fanIn * fanOut);
    for (let i = 0; i < w.length; i++) w[i] = rng.uniform(-limit, limit);
    weights.push(w);
    biases.push(new Float64Array(fanOut));
  }
  const drop = sizes.slice(1, -1).map((_, i) => dropout[i] ?? 0);
  return { sizes, activations: [...activations], outputActivation, weights, biases, dropout: drop };
}

function activate(kind: Activation, z: number): number {
  switch (kind) {
    case "relu":
      return z > 0 ? z : 0;
    case "sigmoid":
      return 1 / (1 + Math.exp(-z));
    case "tanh":
      return Math.tanh(z);
    case "identity":
      return z;
  }
}

function activateGrad(kind: Activation, a: number): number {
  // derivative expressed through the activation value
  switch (kind) {
    case "relu":
      return a > 0 ? 1 : 0;
    case "sigmoid":
      return a * (1 - a);
    case "tanh":
      return 1 - a * a;
    case "identity":
      return 1;
  }
}

export function softmax(z: Float64Array): Float64Array {
  let max = -Infinity;
  for (const v of z) if (v > max) max = v;
  const out = new Float64Array(z.length);
  let sum = 0;
  for (let i = 0; i < z.length; i++) {
    out[i] = Math.exp(z[i] - max);
    sum += out[i];
  }
  for (let i = 0; i < z.length; i++) out[i] /= sum;
  return out;
}

interface ForwardTape {
  /** values fed into each layer (post-activation, post-dropout); [0] is the input */
  layers: Float64Array[];
  /** pre-dropout activations per hidden layer (for activation derivatives) */
  acts: Float64Array[];
  /** inverted-dropout masks per hidden layer (empty when inactive) */
  masks: Float64Array[];
  output: Float64Array;
}

function forwardTape(
  model: MlpModel,
  input: Float64Array,
  training: boolean,
  rng: Rng | null,
): ForwardTape {
  if (input.length !== model.sizes[0]) {
    throw new ShapeMismatch(`input width ${input.length}, model expects ${model.sizes[0]}`);
  }
  const layers: Float64Array[] = [input];
  const acts: Float64Array[] = [];
  const masks: Float64Array[] = [];
  let current = input;
  for (let l = 0; l < model.weights.length; l++) {
    const fanIn = model.sizes[l];
    const fanOut = model.sizes[l + 1];
    const w = model.weights[l];
    const b = model.biases[l];
    const z = new Float64Array(fanOut);
    for (let i = 0; i < fanIn; i++) {
      const a = current[i];
      if (a === 0) continue;
      const base = i * fanOut;
      for (let j = 0; j < fanOut; j++) z[j] += a * w[base + j];
    }
    for (let j = 0; j < fanOut; j++) z[j] += b[j];

    const isOutput = l === model.weights.length - 1;
    let next: Float64Array;
    if (isOutput) {
      next = model.outputActivation === "softmax" ? softmax(z) : z;
    } else {
      const kind = model.activations[l];
      const act = new Float64Array(fanOut);
      for (let j = 0; j < fanOut; j++) act[j] = activate(kind, z[j]);
      acts.push(act);
      const rate = model.dropout[l] ?? 0;
      if (training && rate > 0 && rng) {
        const keep = 1 - rate;
        const mask = new Float64Array(fanOut);
        next = new Float64Array(fanOut);
        for (let j = 0; j < fanOut; j++) {
          mask[j] = rng.next() < rate ? 0 : 1 / keep;
          next[j] = act[j] * mask[j];
        }
        masks.push(mask);
      } else {
        masks.push(new Float64Array(0));
        next = act;
      }
    }
    layers.push(next);
    current = next;
  }
  return { layers, acts, masks, output: current };
}

export function predict(model: MlpModel, input: Float64Array): Float64Array {
  return forwardTape(model, input, false, null).output;
}

export interface Gradients {
  weights: Float64Array[];
  biases: Float64Array[];
}

export function zeroGradients(model: MlpModel): Gradients {
  return {
    weights: model.weights.map((w) => new Float64Array(w.length)),
    biases: model.biases.map((b) => new Float64Array(b.length)),
  };
}

/**
 * Mean loss over the batch plus parameter gradients (accumulated into
 * ``grads``). Softmax + cross-entropy and identity + MSE pair up so the
 * output delta is (prediction - target) scaled by the batch size.
 */
export function lossAndGradients(
  model: MlpModel,
  inputs: Float64Array[],
  targets: Float64Array[],
  loss: Loss,
  grads: Gradients,
  training: boolean = true,
  rng: Rng | null = null,
): number {
  const batch = inputs.length;
  const outSize = model.sizes[model.sizes.length - 1];
  let total = 0;
  for (let s = 0; s < batch; s++) {
    const tape = forwardTape(model, inputs[s], training, rng);
    const out = tape.output;
    const target = targets[s];
    if (target.length !== outSize) {
      throw new ShapeMismatch(`target width ${target.length}, model outputs ${outSize}`);
    }

    let delta = new Float64Array(outSize);
    if (loss === "categorical_crossentropy") {
      let sampleLoss = 0;
      for (let j = 0; j < outSize; j++) {
        if (target[j] > 0) sampleLoss -= target[j] * Math.log(Math.max(out[j], 1e-12));
        delta[j] = (out[j] - target[j]) / batch;
      }
      total += sampleLoss;
    } else {
      let sampleLoss = 0;
      for (let j = 0; j < outSize; j++) {
        const diff = out[j] - target[j];
        sampleLoss += diff * diff;
        delta[j] = (2 * diff) / (outSize * batch);
      }
      total += sampleLoss / outSize;
    }

    for (let l = model.weights.length - 1; l >= 0; l--) {
      const fanIn = model.sizes[l];
      const fanOut = model.sizes[l + 1];
      const below = tape.layers[l];
      const gw = grads.weights[l];
      const gb = grads.biases[l];
      for (let j = 0; j < fanOut; j++) gb[j] += delta[j];
      for (let i = 0; i < fanIn; i++) {
        const a = below[i];
        if (a === 0) continue;
        const base = i * fanOut;
        for (let j = 0; j < fanOut; j++) gw[base + j] += a * delta[j];
      }
      if (l > 0) {
        const w = model.weights[l];
        const kind = model.activations[l - 1];
        const act = tape.acts[l - 1];
        const mask = tape.masks[l - 1];
        const next = new Float64Array(fanIn);
        for (let i = 0; i < fanIn; i++) {
          const base = i * fanOut;
          let sum = 0;
          for (let j = 0; j < fanOut; j++) sum += w[base + j] * delta[j];
          if (mask.length) sum *= mask[i];
          next[i] = sum * activateGrad(kind, act[i]);
        }
        delta = next;
      }
    }
  }
  const mean = total / batch;
  if (!Number.isFinite(mean)) throw new NumericOverflow();
  return mean;
}

export function argmax(values: Float64Array | number[]): number {
  let best = 0;
  for (let i = 1; i < values.length; i++) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}
