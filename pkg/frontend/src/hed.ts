import type { EditOp, EditScript, HedDoc, Level, PhonemeRef } from "./types.js";

export class EditError extends Error {
  constructor(public code: string, message: string) {
    super(message);
    this.name = "EditError";
  }
}

export function clamp01(v: number): number {
  if (Number.isNaN(v)) return 0;
  return Math.min(1, Math.max(0, v));
}

const LEVELS: Level[] = ["utterance", "word", "phoneme"];
const ACTIONS = ["set", "scale", "add"];

function selectedIndices(selector: EditOp["selector"], count: number, kind: string): number[] {
  if (selector === "all") {
    return Array.from({ length: count }, (_, i) => i);
  }
  if (typeof selector === "number") {
    if (!Number.isInteger(selector) || selector < 0 || selector >= count) {
      throw new EditError("edit-index", `${kind} index ${selector} out of range [0, ${count})`);
    }
    return [selector];
  }
  const [lo, hi] = selector;
  if (lo > hi || lo < 0 || hi >= count) {
    throw new EditError("edit-index", `${kind} range ${lo}:${hi} out of range [0, ${count})`);
  }
  const out: number[] = [];
  for (let i = lo; i <= hi; i++) out.push(i);
  return out;
}

function applyAction(current: number, action: EditOp["action"], value: number): number {
  let next: number;
  if (action === "set") next = value;
  else if (action === "scale") next = current * value;
  else next = current + value;
  return clamp01(next);
}

/**
 * The grid the UI renders: a faithful client-side mirror of the server's
 * matrix semantics (block layout, selector targeting, clamping).
 */
export class GridModel {
  readonly k: number;

  constructor(
    readonly emotions: string[],
    readonly phonemes: PhonemeRef[],
    readonly rows: number[][],
  ) {
    this.k = emotions.length;
    if (rows.length !== phonemes.length) {
      throw new EditError("shape-mismatch", "one row per phoneme required");
    }
    for (const row of rows) {
      if (row.length !== 3 * this.k) {
        throw new EditError("shape-mismatch", `rows must have ${3 * this.k} columns`);
      }
    }
  }

  static fromDoc(doc: HedDoc): GridModel {
    return new GridModel(
      doc.emotions.slice(),
      doc.phonemes.map((p) => ({ ...p })),
      doc.rows.map((r) => r.slice()),
    );
  }

  get nPhonemes(): number {
    return this.phonemes.length;
  }

  get nWords(): number {
    return this.phonemes.length ? Math.max(...this.phonemes.map((p) => p.word)) + 1 : 0;
  }

  /** Phoneme indices belonging to each word, in order. */
  wordMembers(): number[][] {
    const out: number[][] = Array.from({ length: this.nWords }, () => []);
    this.phonemes.forEach((p, i) => out[p.word].push(i));
    return out;
  }

  value(level: Level, emotion: string, phoneme: number): number {
    const e = this.emotions.indexOf(emotion);
    if (e < 0) throw new EditError("unknown-emotion", `unknown emotion ${emotion}`);
    return this.rows[phoneme][LEVELS.indexOf(level) * this.k + e];
  }

  clone(): GridModel {
    return new GridModel(this.emotions, this.phonemes, this.rows.map((r) => r.slice()));
  }

  applyOp(op: EditOp): GridModel {
    if (!LEVELS.includes(op.level)) {
      throw new EditError("schema", `op.level must be one of ${LEVELS.join(", ")}`);
    }
    if (!ACTIONS.includes(op.action)) {
      throw new EditError("schema", `op.action must be one of ${ACTIONS.join(", ")}`);
    }
    if (!Number.isFinite(op.value)) {
      throw new EditError("schema", "op.value must be finite");
    }
    const cols: number[] = [];
    const offset = LEVELS.indexOf(op.level) * this.k;
    if (op.emotion === "all") {
      for (let e = 0; e < this.k; e++) cols.push(offset + e);
    } else {
      const e = this.emotions.indexOf(op.emotion);
      if (e < 0) throw new EditError("unknown-emotion", `unknown emotion ${op.emotion}`);
      cols.push(offset + e);
    }

    let targetRows: number[];
    if (op.level === "utterance") {
      targetRows = Array.from({ length: this.nPhonemes }, (_, i) => i);
    } else if (op.level === "word") {
      const words = new Set(selectedIndices(op.selector, this.nWords, "word"));
      targetRows = this.phonemes
        .map((p, i) => (words.has(p.word) ? i : -1))
        .filter((i) => i >= 0);
    } else {
      targetRows = selectedIndices(op.selector, this.nPhonemes, "phoneme");
    }

    const next = this.rows.map((r) => r.slice());
    for (const r of targetRows) {
      for (const c of cols) {
        next[r][c] = applyAction(next[r][c], op.action, op.value);
      }
    }
    return new GridModel(this.emotions, this.phonemes, next);
  }

  applyScript(script: EditScript): GridModel {
    let out: GridModel = this;
    for (const op of script.ops) out = out.applyOp(op);
    return out;
  }

  equalsRows(rows: number[][]): boolean {
    if (rows.length !== this.rows.length) return false;
    return this.rows.every(
      (row, i) => row.length === rows[i].length && row.every((v, j) => v === rows[i][j]),
    );
  }
}

/**
 * Fixed, documented value scale: 0.0 renders near-white rgb(247,247,247)
 * and 1.0 deep red rgb(178,24,43), linearly interpolated.
 */
export function valueToColor(v: number): string {
  const t = clamp01(v);
  const lerp = (a: number, b: number) => Math.round(a + (b - a) * t);
  return `rgb(${lerp(247, 178)}, ${lerp(247, 24)}, ${lerp(247, 43)})`;
}

/** CSV in the service's export layout, usable for sweep-preview downloads. */
export function gridToCsv(m: GridModel): string {
  const header = ["phoneme", "word_index"];
  for (const prefix of ["utt", "word", "phon"]) {
    for (const e of m.emotions) header.push(`${prefix}_${e}`);
  }
  const lines = [header.join(",")];
  m.phonemes.forEach((p, i) => {
    lines.push([p.label, String(p.word), ...m.rows[i].map((v) => String(v))].join(","));
  });
  return lines.join("\n") + "\n";
}
