import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { BadCell, EmptyDataset, MissingColumn, loadCsv } from "../src/dataset.js";

const DIGITS = join(__dirname, "..", "..", "demo", "mnist_calculator", "data", "digits.csv");

function writeTmp(name: string, text: string): string {
  const dir = mkdtempSync(join(tmpdir(), "ds-"));
  const path = join(dir, name);
  writeFileSync(path, text);
  return path;
}

describe("csv loading", () => {
  it("maps labels to class ids in first-appearance order", () => {
    const path = writeTmp("pets.csv", "a,b,y\n1,2,cat\n3,4,dog\n5,6,cat\n");
    const ds = loadCsv(path, { features: ["a", "b"], labelsMode: "ON", label: "y" });
    expect(Array.from(ds.labels as Int32Array)).toEqual([0, 1, 0]);
    expect(ds.labelNames).toEqual(["cat", "dog"]);
  });

  it("header-only file raises EmptyDataset", () => {
    const path = writeTmp("empty.csv", "a,b,y\n");
    expect(() => loadCsv(path, { features: [], labelsMode: "OFF" })).toThrow(EmptyDataset);
  });

  it("bundled digits dataset has 1000 rows x 64 features", () => {
    const ds = loadCsv(DIGITS, { features: [], labelsMode: "ON", label: "label" });
    expect(ds.rowCount).toBe(1000);
    expect(ds.featureNames.length).toBe(64);
    expect(ds.labelNames.length).toBe(10);
  });

  it("non-numeric feature cell is a BadCell error", () => {
    const path = writeTmp("bad.csv", "a,y\n1,0\noops,1\n");
    expect(() => loadCsv(path, { features: ["a"], labelsMode: "ON", label: "y" })).toThrow(BadCell);
  });

  it("missing named column reported", () => {
    const path = writeTmp("mc.csv", "a,y\n1,0\n");
    expect(() => loadCsv(path, { features: ["ghost"], labelsMode: "ON", label: "y" })).toThrow(
      MissingColumn,
    );
  });

  it("quoted fields and CRLF accepted", () => {
    const path = writeTmp("q.csv", 'a,"b",y\r\n"1",2,"x,1"\r\n3,4,plain\r\n');
    const ds = loadCsv(path, { features: ["a", "b"], labelsMode: "ON", label: "y" });
    expect(ds.rowCount).toBe(2);
    expect(ds.labelNames).toEqual(["x,1", "plain"]);
  });

  it("empty feature list means all columns except the label", () => {
    const path = writeTmp("all.csv", "a,b,y\n1,2,0\n");
    const ds = loadCsv(path, { features: [], labelsMode: "ON", label: "y" });
    expect(ds.featureNames).toEqual(["a", "b"]);
  });
});
