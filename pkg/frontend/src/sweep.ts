import { EditError, GridModel, gridToCsv } from "./hed.js";
import type { EditOp, Level, Selector } from "./types.js";

export type SweepLevel = Level | "wp";

export interface SweepExport {
  value: number;
  filename: string;
  csv: string;
}

/**
 * One exported matrix per value, every one derived from the unchanged
 * input model. "wp" writes the word block and the phoneme block of the
 * selected words' phonemes in one go.
 */
export function sweepExports(
  m: GridModel,
  level: SweepLevel,
  selector: Selector,
  emotion: string,
  values: number[],
): SweepExport[] {
  const out: SweepExport[] = [];
  for (const value of values) {
    let ops: EditOp[];
    if (level === "wp") {
      const words = new Set<number>();
      if (selector === "all") {
        m.phonemes.forEach((p) => words.add(p.word));
      } else if (typeof selector === "number") {
        words.add(selector);
      } else {
        for (let w = selector[0]; w <= selector[1]; w++) words.add(w);
      }
      const members: number[] = [];
      m.phonemes.forEach((p, i) => {
        if (words.has(p.word)) members.push(i);
      });
      if (!members.length) {
        throw new EditError("edit-index", "wp selector matches no phonemes");
      }
      ops = [
        { level: "word", selector, emotion, action: "set", value },
        {
          level: "phoneme",
          selector: [Math.min(...members), Math.max(...members)],
          emotion,
          action: "set",
          value,
        },
      ];
    } else {
      ops = [{ level, selector, emotion, action: "set", value }];
    }
    const edited = m.applyScript({ ops });
    const selPart =
      selector === "all"
        ? "all"
        : Array.isArray(selector)
          ? `${selector[0]}-${selector[1]}`
          : String(selector);
    out.push({
      value,
      filename: `sweep_${level}_${selPart}_${emotion}_${value}.csv`,
      csv: gridToCsv(edited),
    });
  }
  return out;
}

export function parseValues(text: string): number[] {
  const tokens = text
    .split(",")
    .map((s) => s.trim())
    .filter((s) => s.length > 0);
  const values = tokens.map((s) => Number(s));
  // one bad token disables the whole sweep rather than silently shrinking it
  if (values.some((v) => !Number.isFinite(v))) return [];
  return values;
}

export function canSweep(valuesText: string): boolean {
  return parseValues(valuesText).length > 0;
}
