/**
 * Weight archives: the self-describing binary container shared with the
 * toolchain. ASCII block headers, float32 little-endian payloads, and a
 * sha256 trailer over everything before it.
 *
 *   MLCW1
 *   MANIFEST <nbytes>\n<kv text>\n
 *   PARAM <name> <d1,d2,..> <nbytes>\n<f32 payload>\n
 *   OPTMETA <nbytes>\n<kv text>\n          (optional)
 *   OPTP <name> <dims> <nbytes>\n<f32>\n
 *   TRAILER sha256=<hex>\n
 */

import { createHash } from "node:crypto";
import { mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { dirname } from "node:path";

import { KvMap, parseKv, renderKvInline } from "./kvtext.js";

const MAGIC = "MLCW1\n";

export class ArchiveFormatError extends Error {}

export interface ParamBlock {
  name: string;
  dims: number[];
  values: Float64Array; // promoted to f64 on read, rounded to f32 on write
}

export interface Archive {
  manifest: KvMap;
  params: ParamBlock[];
  optMeta: KvMap | null;
  optParams: ParamBlock[];
}

function paramBytes(tag: "PARAM" | "OPTP", block: ParamBlock): Buffer {
  const payload = Buffer.alloc(block.values.length * 4);
  for (let i = 0; i < block.values.length; i++) {
    payload.writeFloatLE(Math.fround(block.values[i]), i * 4);
  }
  const header = Buffer.from(
    `${tag} ${block.name} ${block.dims.join(",")} ${payload.length}\n`,
    "ascii",
  );
  return Buffer.concat([header, payload, Buffer.from("\n")]);
}

export function archiveBytes(archive: Archive): Buffer {
  const chunks: Buffer[] = [Buffer.from(MAGIC, "ascii")];
  const manifest = Buffer.from(renderKvInline(archive.manifest), "utf-8");
  chunks.push(Buffer.from(`MANIFEST ${manifest.length}\n`, "ascii"), manifest, Buffer.from("\n"));
  for (const block of archive.params) chunks.push(paramBytes("PARAM", block));
  if (archive.optMeta !== null) {
    const meta = Buffer.from(renderKvInline(archive.optMeta), "utf-8");
    chunks.push(Buffer.from(`OPTMETA ${meta.length}\n`, "ascii"), meta, Buffer.from("\n"));
    for (const block of archive.optParams) chunks.push(paramBytes("OPTP", block));
  }
  const body = Buffer.concat(chunks);
  const digest = createHash("sha256").update(body).digest("hex");
  return Buffer.concat([body, Buffer.from(`TRAILER sha256=${digest}\n`, "ascii")]);
}

export function writeArchive(path: string, archive: Archive): string {
  const data = archiveBytes(archive);
  mkdirSync(dirname(path), { recursive: true });
  writeFileSync(path, data);
  return data.subarray(data.length - 65, data.length - 1).toString("ascii");
}

export function readArchiveBytes(data: Buffer): Archive {
  if (!data.subarray(0, MAGIC.length).equals(Buffer.from(MAGIC, "ascii"))) {
    throw new ArchiveFormatError("bad magic; not a weight archive");
  }
  const trailerAt = data.lastIndexOf(Buffer.from("TRAILER sha256="));
  if (trailerAt < 0) throw new ArchiveFormatError("missing trailer");
  const expected = data
    .subarray(trailerAt + "TRAILER sha256=".length)
    .toString("ascii")
    .trim();
  const actual = createHash("sha256").update(data.subarray(0, trailerAt)).digest("hex");
  if (expected !== actual) {
    throw new ArchiveFormatError(`digest mismatch: trailer ${expected}, payload ${actual}`);
  }

  let offset = MAGIC.length;
  let manifest: KvMap | null = null;
  let optMeta: KvMap | null = null;
  const params: ParamBlock[] = [];
  const optParams: ParamBlock[] = [];

  const readLine = (): string => {
    const nl = data.indexOf("\n", offset);
    if (nl < 0) throw new ArchiveFormatError("truncated archive");
    const line = data.subarray(offset, nl).toString("ascii");
    offset = nl + 1;
    return line;
  };

  while (offset < trailerAt) {
    const header = readLine();
    const fields = header.split(" ");
    const tag = fields[0];
    if (tag === "MANIFEST" || tag === "OPTMETA") {
      const nbytes = Number(fields[1]);
      const blob = data.subarray(offset, offset + nbytes).toString("utf-8");
      offset += nbytes + 1;
      const parsed = parseKv(blob);
      if (tag === "MANIFEST") manifest = parsed;
      else optMeta = parsed;
    } else if (tag === "PARAM" || tag === "OPTP") {
      const name = fields[1];
      const dims = fields[2].split(",").map(Number);
      const nbytes = Number(fields[3]);
      const count = nbytes / 4;
      const values = new Float64Array(count);
      for (let i = 0; i < count; i++) values[i] = data.readFloatLE(offset + i * 4);
      offset += nbytes + 1;
      (tag === "PARAM" ? params : optParams).push({ name, dims, values });
    } else {
      throw new ArchiveFormatError(`unknown block tag '${tag}'`);
    }
  }
  if (manifest === null) throw new ArchiveFormatError("archive has no manifest block");
  return { manifest, params, optMeta, optParams };
}

export function readArchive(path: string): Archive {
  return readArchiveBytes(readFileSync(path));
}
