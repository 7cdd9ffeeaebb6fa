/**
 * CSV dataset ingestion. Dialect: comma separator, first row is the header,
 * optional double-quoted fields, '.' decimal point. Feature cells must be
 * numeric; the label column maps to contiguous class ids in first-appearance
 * order (the mapping is recorded for prediction-time reporting).
 */

import { readFileSync } from "node:fs";

export type LabelsMode = "ON" | "OFF" | "SEMI";

export interface Dataset {
  columns: string[];
  features: Float64Array[]; // rows x features
  featureNames: string[];
  labels: Int32Array | Float64Array | null;
  labelNames: string[]; // class id -> original label text (classification)
  rowCount: number;
  sequential: boolean;
}

export class DatasetError extends Error {}

export class MissingColumn extends DatasetError {
  constructor(name: string) {
    super(`missing column '${name}'`);
  }
}

export class BadCell extends DatasetError {
  constructor(row: number, col: string, cell: string) {
    super(`bad cell at row ${row}, column '${col}': '${cell}'`);
  }
}

export class EmptyDataset extends DatasetError {
  constructor() {
    super("dataset has a header but no data rows");
  }
}

function splitCsvLine(line: string): string[] {
  const cells: string[] = [];
  let current = "";
  let quoted = false;
  for (let i = 0; i < line.length; i++) {
    const ch = line[i];
    if (quoted) {
      if (ch === '"') {
        if (line[i + 1] === '"') {
          current += '"';
          i++;
        } else {
          quoted = false;
        }
      } else {
        current += ch;
      }
    } else if (ch === '"') {
      quoted = true;
    } else if (ch === ",") {
      cells.push(current);
      current = "";
    } else {
      current += ch;
    }
  }
  cells.push(current);
  return cells;
}

export interface LoadSpec {
  features: string[]; // empty: every column except the label
  labelsMode: LabelsMode;
  label?: string;
  regression?: boolean; // label column is a real target, not a class
  sequential?: boolean;
}

export function loadCsv(path: string, spec: LoadSpec): Dataset {
  const text = readFileSync(path, "utf-8").replace(/\r\n/g, "\n");
  const lines = text.split("\n").filter((l) => l.trim().length > 0);
  if (lines.length === 0) throw new DatasetError(`${path} is empty`);
  const columns = splitCsvLine(lines[0]).map((c) => c.trim());
  if (lines.length === 1) throw new EmptyDataset();

  const featureNames = spec.features.length
    ? spec.features
    : columns.filter((c) => c !== spec.label);
  const featureIdx = featureNames.map((name) => {
    const index = columns.indexOf(name);
    if (index < 0) throw new MissingColumn(name);
    return index;
  });
  let labelIdx = -1;
  if (spec.labelsMode !== "OFF") {
    if (!spec.label) throw new DatasetError("labels ON/SEMI need a label column");
    labelIdx = columns.indexOf(spec.label);
    if (labelIdx < 0) throw new MissingColumn(spec.label);
  }

  const features: Float64Array[] = [];
  const rawLabels: string[] = [];
  for (let r = 1; r < lines.length; r++) {
    const cells = splitCsvLine(lines[r]);
    const row = new Float64Array(featureIdx.length);
    for (let f = 0; f < featureIdx.length; f++) {
      const cell = (cells[featureIdx[f]] ?? "").trim();
      const value = Number(cell);
      if (cell === "" || !Number.isFinite(value)) {
        throw new BadCell(r, featureNames[f], cell);
      }
      row[f] = value;
    }
    features.push(row);
    if (labelIdx >= 0) rawLabels.push((cells[labelIdx] ?? "").trim());
  }

  let labels: Int32Array | Float64Array | null = null;
  const labelNames: string[] = [];
  if (labelIdx >= 0) {
    if (spec.regression) {
      const values = new Float64Array(rawLabels.length);
      rawLabels.forEach((cell, i) => {
        const value = Number(cell);
        if (cell === "" || !Number.isFinite(value)) throw new BadCell(i + 1, spec.label!, cell);
        values[i] = value;
      });
      labels = values;
    } else {
      const ids = new Int32Array(rawLabels.length);
      const mapping = new Map<string, number>();
      rawLabels.forEach((cell, i) => {
        let id = mapping.get(cell);
        if (id === undefined) {
          id = mapping.size;
          mapping.set(cell, id);
          labelNames.push(cell);
        }
        ids[i] = id;
      });
      labels = ids;
    }
  }

  return {
    columns,
    features,
    featureNames,
    labels,
    labelNames,
    rowCount: features.length,
    sequential: spec.sequential ?? false,
  };
}
