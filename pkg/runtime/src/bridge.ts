/**
 * The bridge server: line-delimited REQ/RES frames on stdio.
 *
 *   REQ <id> <verb> <payload>     verbs: PREPROCESS TRAIN PREDICT LOAD SAVE
 *   RES <id> OK <payload> | RES <id> ERR <message>
 *
 * One request is processed at a time. Malformed frames answer with an ERR
 * frame and the server keeps running.
 */

import { createInterface } from "node:readline";
import { resolve } from "node:path";

import { Archive, readArchive, writeArchive } from "./archive.js";
import { loadCsv } from "./dataset.js";
import { KvMap, Token, asMap, asString, parseKv, renderKvInline } from "./kvtext.js";
import { argmax, predict } from "./mlp.js";
import { applyTransform, fitAndApply } from "./preprocess.js";
import {
  LoadedModel,
  archiveToModel,
  decodePlan,
  modelToArchive,
  recordPrediction,
  trainFromPlan,
} from "./train.js";

interface Frame {
  id: number;
  verb: string;
  payload: string;
}

export function decodeRequest(line: string): Frame | null {
  const parts = line.trimEnd().split(" ");
  if (parts.length < 3 || parts[0] !== "REQ") return null;
  const id = Number(parts[1]);
  if (!Number.isInteger(id)) return null;
  return { id, verb: parts[2], payload: parts.slice(3).join(" ") };
}

export function okFrame(id: number, payload: KvMap): string {
  return `RES ${id} OK ${renderKvInline(payload)}\n`;
}

export function errFrame(id: number, message: string): string {
  return `RES ${id} ERR ${message.replace(/\n/g, " ")}\n`;
}

export class BridgeSession {
  private loaded: LoadedModel | null = null;
  private lastArchive: Archive | null = null;

  constructor(private readonly cwd: string = process.cwd()) {}

  handle(line: string): string {
    const frame = decodeRequest(line);
    if (frame === null) return errFrame(0, "malformed frame");
    try {
      const payload = frame.payload ? parseKv(frame.payload) : new KvMap();
      switch (frame.verb) {
        case "TRAIN":
          return okFrame(frame.id, this.train(payload));
        case "PREPROCESS":
          return okFrame(frame.id, this.preprocess(payload));
        case "LOAD":
          return okFrame(frame.id, this.load(payload));
        case "PREDICT":
          return okFrame(frame.id, this.predictVerb(payload));
        case "SAVE":
          return okFrame(frame.id, this.save(payload));
        default:
          return errFrame(frame.id, `unknown verb ${frame.verb}`);
      }
    } catch (err) {
      return errFrame(frame.id, err instanceof Error ? err.message : String(err));
    }
  }

  private train(payload: KvMap): KvMap {
    const out = asMap(payload.get("out"), "out");
    const summary = trainFromPlan(
      decodePlan(payload),
      {
        archivePath: asString(out.get("archive"), "out.archive"),
        logPath: asString(out.get("log"), "out.log"),
        warmPath: payload.has("warm") ? asString(payload.get("warm"), "warm") : undefined,
        datasetDigest: out.has("dataset_digest")
          ? asString(out.get("dataset_digest"), "dataset_digest")
          : undefined,
      },
      this.cwd,
    );
    this.loaded = archiveToModel(readArchive(resolve(this.cwd, summary.archivePath)));
    this.lastArchive = null;
    return KvMap.of([
      ["final_acc", Number(summary.finalMetric.toFixed(6))],
      ["epochs", summary.epochs],
      ["archive", summary.archivePath],
    ]);
  }

  private preprocess(payload: KvMap): KvMap {
    const data = asMap(payload.get("data"), "data");
    const labelsMode = asString(data.get("labels_mode") ?? new Token("ON"), "labels_mode");
    const dataset = loadCsv(resolve(this.cwd, asString(data.get("dataset"), "dataset")), {
      features: (data.get("features") as unknown[] | undefined)?.map((v) => String(v)) ?? [],
      labelsMode: labelsMode as "ON" | "OFF" | "SEMI",
      label: data.has("label") ? asString(data.get("label"), "label") : undefined,
    });
    const steps: Array<{ kind: "standardize" | "normalize" | "one_hot"; columns: string[] }> = [];
    const planBlock = payload.get("plan");
    if (planBlock instanceof KvMap) {
      for (const [, raw] of planBlock.entries()) {
        const stepMap = asMap(raw, "plan step");
        steps.push({
          kind: asString(stepMap.get("kind"), "kind") as "standardize" | "normalize" | "one_hot",
          columns: stepMap.has("columns")
            ? (stepMap.get("columns") as unknown[]).map((v) => String(v))
            : [],
        });
      }
    }
    fitAndApply(dataset, steps);
    return KvMap.of([
      ["rows", dataset.rowCount],
      ["features", dataset.featureNames.length],
      ["classes", dataset.labelNames.length],
    ]);
  }

  private load(payload: KvMap): KvMap {
    const path = resolve(this.cwd, asString(payload.get("archive"), "archive"));
    const archive = readArchive(path);
    this.loaded = archiveToModel(archive);
    this.lastArchive = archive;
    return KvMap.of([
      ["layer_sizes", this.loaded.model.sizes],
      ["epochs", Number(this.loaded.manifest.get("epochs") ?? 0)],
    ]);
  }

  private predictVerb(payload: KvMap): KvMap {
    if (this.loaded === null) throw new Error("no-model");
    const raw = payload.get("features");
    if (!Array.isArray(raw)) throw new Error("PREDICT needs a features vector");
    const vector = Float64Array.from(raw.map((v) => Number(v)));
    if (vector.length !== this.loaded.model.sizes[0]) {
      throw new Error(
        `width mismatch: got ${vector.length}, model expects ${this.loaded.model.sizes[0]}`,
      );
    }
    const output = predict(this.loaded.model, applyTransform(this.loaded.transform, vector));
    recordPrediction(this.loaded, output, this.cwd);
    return KvMap.of([
      ["output", Array.from(output, (v) => Number(v.toPrecision(9)))],
      ["class", argmax(output)],
    ]);
  }

  private save(payload: KvMap): KvMap {
    if (this.loaded === null) throw new Error("no-model");
    const path = resolve(this.cwd, asString(payload.get("archive"), "archive"));
    const archive =
      this.lastArchive ??
      modelToArchive(
        this.loaded.model,
        this.loaded.transform,
        this.loaded.labelNames,
        {
          loss: "categorical_crossentropy",
          epochs: Number(this.loaded.manifest.get("epochs") ?? 0),
          metric: Number(this.loaded.manifest.get("metric") ?? 0),
          features: [],
        },
        null,
      );
    const digest = writeArchive(path, archive);
    return KvMap.of([["digest", digest]]);
  }
}

export function serve(cwd: string = process.cwd()): Promise<void> {
  const session = new BridgeSession(cwd);
  const reader = createInterface({ input: process.stdin, crlfDelay: Infinity });
  return new Promise((resolvePromise) => {
    reader.on("line", (line) => {
      if (!line.trim()) return;
      process.stdout.write(session.handle(line));
    });
    reader.on("close", () => resolvePromise());
  });
}
