/**
 * Canonical nested key-value text: the toolchain's payload and plan format.
 *
 * Grammar (whitespace-insensitive, // line comments):
 *   document := entry*                     (optionally wrapped in one {...})
 *   entry    := key ':' scalar-or-list | key '{' document '}'
 *   scalar   := int | real | "string" | true | false | bareToken
 *   list     := '(' [scalar (',' scalar)*] ')'
 *
 * Bare tokens are kept distinct from quoted strings so values round-trip.
 */

export class Token {
  constructor(public readonly value: string) {}
  toString(): string {
    return this.value;
  }
}

export type KvScalar = number | boolean | string | Token;
export type KvValue = KvScalar | KvScalar[] | KvMap;

export class KvMap {
  private entries_: Array<[string, KvValue]> = [];

  static of(pairs: Array<[string, KvValue]>): KvMap {
    const map = new KvMap();
    for (const [k, v] of pairs) map.set(k, v);
    return map;
  }

  get(key: string): KvValue | undefined {
    const hit = this.entries_.find(([k]) => k === key);
    return hit?.[1];
  }

  lookup(path: string): KvValue | undefined {
    let node: KvValue | undefined = this;
    for (const part of path.split(".")) {
      if (!(node instanceof KvMap)) return undefined;
      node = node.get(part);
    }
    return node;
  }

  set(key: string, value: KvValue): void {
    const index = this.entries_.findIndex(([k]) => k === key);
    if (index >= 0) this.entries_[index] = [key, value];
    else this.entries_.push([key, value]);
  }

  has(key: string): boolean {
    return this.entries_.some(([k]) => k === key);
  }

  entries(): Array<[string, KvValue]> {
    return [...this.entries_];
  }
}

export class KvParseError extends Error {}

const IDENT_START = /[A-Za-z_]/;
const IDENT_CHAR = /[A-Za-z0-9_]/;
const DIGIT = /[0-9]/;

class Parser {
  private pos = 0;
  constructor(private readonly text: string) {}

  parseDocument(): KvMap {
    this.skipSpace();
    let braced = false;
    if (this.peek() === "{") {
      braced = true;
      this.pos++;
    }
    const map = this.parseEntries(braced ? "}" : undefined);
    if (braced) this.expect("}");
    this.skipSpace();
    if (this.pos < this.text.length) {
      throw new KvParseError(`trailing input at offset ${this.pos}`);
    }
    return map;
  }

  private parseEntries(stop?: string): KvMap {
    const map = new KvMap();
    for (;;) {
      this.skipSpace();
      if (this.pos >= this.text.length) break;
      if (stop !== undefined && this.peek() === stop) break;
      const key = this.parseIdent();
      this.skipSpace();
      const ch = this.peek();
      if (ch === "{") {
        this.pos++;
        const nested = this.parseEntries("}");
        this.expect("}");
        if (map.has(key)) throw new KvParseError(`duplicate key '${key}'`);
        map.set(key, nested);
      } else if (ch === ":") {
        this.pos++;
        const value = this.parseValue();
        if (map.has(key)) throw new KvParseError(`duplicate key '${key}'`);
        map.set(key, value);
      } else {
        throw new KvParseError(`expected ':' or '{' after key '${key}'`);
      }
    }
    return map;
  }

  private parseValue(): KvValue {
    this.skipSpace();
    if (this.peek() === "(") {
      this.pos++;
      const items: KvScalar[] = [];
      this.skipSpace();
      if (this.peek() !== ")") {
        items.push(this.parseScalar());
        this.skipSpace();
        while (this.peek() === ",") {
          this.pos++;
          items.push(this.parseScalar());
          this.skipSpace();
        }
      }
      this.expect(")");
      return items;
    }
    return this.parseScalar();
  }

  private parseScalar(): KvScalar {
    this.skipSpace();
    const ch = this.peek();
    if (ch === '"') return this.parseString();
    if (ch === "-" || DIGIT.test(ch)) return this.parseNumber();
    if (IDENT_START.test(ch)) {
      const word = this.parseIdent();
      if (word === "true") return true;
      if (word === "false") return false;
      return new Token(word);
    }
    throw new KvParseError(`unexpected character '${ch}' at offset ${this.pos}`);
  }

  private parseString(): string {
    this.expect('"');
    let out = "";
    while (this.pos < this.text.length) {
      const ch = this.text[this.pos];
      if (ch === '"') {
        this.pos++;
        return out;
      }
      if (ch === "\\" && this.pos + 1 < this.text.length) {
        const esc = this.text[this.pos + 1];
        const mapped: Record<string, string> = { n: "\n", t: "\t", r: "\r", '"': '"', "\\": "\\" };
        out += mapped[esc] ?? esc;
        this.pos += 2;
        continue;
      }
      out += ch;
      this.pos++;
    }
    throw new KvParseError("unterminated string");
  }

  private parseNumber(): number {
    const start = this.pos;
    if (this.peek() === "-") this.pos++;
    while (this.pos < this.text.length && DIGIT.test(this.text[this.pos])) this.pos++;
    if (this.peek() === "." ) {
      this.pos++;
      while (this.pos < this.text.length && DIGIT.test(this.text[this.pos])) this.pos++;
    }
    if (this.peek() === "e" || this.peek() === "E") {
      this.pos++;
      if (this.peek() === "+" || this.peek() === "-") this.pos++;
      while (this.pos < this.text.length && DIGIT.test(this.text[this.pos])) this.pos++;
    }
    const lexeme = this.text.slice(start, this.pos);
    const value = Number(lexeme);
    if (!Number.isFinite(value)) throw new KvParseError(`bad number '${lexeme}'`);
    return value;
  }

  private parseIdent(): string {
    const start = this.pos;
    if (!IDENT_START.test(this.peek())) {
      throw new KvParseError(`expected an identifier at offset ${this.pos}`);
    }
    while (this.pos < this.text.length && IDENT_CHAR.test(this.text[this.pos])) this.pos++;
    return this.text.slice(start, this.pos);
  }

  private skipSpace(): void {
    for (;;) {
      while (this.pos < this.text.length && /\s/.test(this.text[this.pos])) this.pos++;
      if (this.text.startsWith("//", this.pos)) {
        while (this.pos < this.text.length && this.text[this.pos] !== "\n") this.pos++;
        continue;
      }
      return;
    }
  }

  private peek(): string {
    return this.text[this.pos] ?? "";
  }

  private expect(ch: string): void {
    if (this.peek() !== ch) {
      throw new KvParseError(`expected '${ch}' at offset ${this.pos}`);
    }
    this.pos++;
  }
}

export function parseKv(text: string): KvMap {
  return new Parser(text).parseDocument();
}

function renderScalar(value: KvScalar): string {
  if (typeof value === "boolean") return value ? "true" : "false";
  if (typeof value === "number") {
    if (Number.isInteger(value) && Math.abs(value) < 1e15) return String(value);
    return String(value);
  }
  if (value instanceof Token) return value.value;
  const escaped = value
    .replace(/\\/g, "\\\\")
    .replace(/"/g, '\\"')
    .replace(/\n/g, "\\n")
    .replace(/\t/g, "\\t");
  return `"${escaped}"`;
}

/** Single-line `{k: v ...}` rendering used for bridge frames. */
export function renderKvInline(map: KvMap): string {
  const parts: string[] = [];
  for (const [key, value] of map.entries()) {
    if (value instanceof KvMap) {
      parts.push(`${key} ${renderKvInline(value)}`);
    } else if (Array.isArray(value)) {
      parts.push(`${key}: (${value.map(renderScalar).join(", ")})`);
    } else {
      parts.push(`${key}: ${renderScalar(value)}`);
    }
  }
  return `{${parts.join(" ")}}`;
}

export function asNumber(value: KvValue | undefined, what: string): number {
  if (typeof value !== "number") throw new KvParseError(`${what} must be a number`);
  return value;
}

export function asString(value: KvValue | undefined, what: string): string {
  if (typeof value === "string") return value;
  if (value instanceof Token) return value.value;
  throw new KvParseError(`${what} must be a string or token`);
}

export function asList(value: KvValue | undefined, what: string): KvScalar[] {
  if (!Array.isArray(value)) throw new KvParseError(`${what} must be a list`);
  return value;
}

export function asMap(value: KvValue | undefined, what: string): KvMap {
  if (!(value instanceof KvMap)) throw new KvParseError(`${what} must be a block`);
  return value;
}
