/**
 * Optimizers with persistable state. A parameter list is the flattened
 * [w0, b0, w1, b1, ...] sequence; moment buffers are shaped like it, so the
 * whole state round-trips through weight archives for warm restarts.
 */

import { Gradients, MlpModel } from "./mlp.js";

export type OptimizerKind = "sgd" | "adam";

export interface OptimizerConfig {
  kind: OptimizerKind;
  learningRate: number;
  momentum: number; // sgd
  beta1: number;
  beta2: number;
  epsilon: number;
}

export interface OptimizerState {
  config: OptimizerConfig;
  stepCount: number;
  /** adam first/second moments, or sgd velocity in `m` */
  m: Float64Array[];
  v: Float64Array[];
}

export function paramList(model: MlpModel): Float64Array[] {
  const params: Float64Array[] = [];
  for (let l = 0; l < model.weights.length; l++) {
    params.push(model.weights[l], model.biases[l]);
  }
  return params;
}

export function gradList(grads: Gradients): Float64Array[] {
  const list: Float64Array[] = [];
  for (let l = 0; l < grads.weights.length; l++) {
    list.push(grads.weights[l], grads.biases[l]);
  }
  return list;
}

export function initOptimizer(config: OptimizerConfig, model: MlpModel): OptimizerState {
  const params = paramList(model);
  return {
    config,
    stepCount: 0,
    m: params.map((p) => new Float64Array(p.length)),
    v: config.kind === "adam" ? params.map((p) => new Float64Array(p.length)) : [],
  };
}

export function step(state: OptimizerState, params: Float64Array[], grads: Float64Array[]): void {
  const cfg = state.config;
  state.stepCount += 1;
  if (cfg.kind === "sgd") {
    for (let p = 0; p < params.length; p++) {
      const theta = params[p];
      const g = grads[p];
      const vel = state.m[p];
      for (let i = 0; i < theta.length; i++) {
        vel[i] = cfg.momentum * vel[i] - cfg.learningRate * g[i];
        theta[i] += vel[i];
      }
    }
    return;
  }
  const t = state.stepCount;
  const correction1 = 1 - Math.pow(cfg.beta1, t);
  const correction2 = 1 - Math.pow(cfg.beta2, t);
  for (let p = 0; p < params.length; p++) {
    const theta = params[p];
    const g = grads[p];
    const m = state.m[p];
    const v = state.v[p];
    for (let i = 0; i < theta.length; i++) {
      m[i] = cfg.beta1 * m[i] + (1 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1 - cfg.beta2) * g[i] * g[i];
      const mHat = m[i] / correction1;
      const vHat = v[i] / correction2;
      theta[i] -= (cfg.learningRate * mHat) / (Math.sqrt(vHat) + cfg.epsilon);
    }
  }
}
