export interface PhonemeRef {
  label: string;
  word: number;
}

export interface HedDoc {
  version: number;
  emotions: string[];
  phonemes: PhonemeRef[];
  rows: number[][];
}

export type Level = "utterance" | "word" | "phoneme";
export type Selector = "all" | number | [number, number];
export type Action = "set" | "scale" | "add";

export interface EditOp {
  level: Level;
  selector: Selector;
  emotion: string;
  action: Action;
  value: number;
}

export interface EditScript {
  ops: EditOp[];
  meta?: Record<string, unknown>;
}

export interface SessionDoc {
  id: string;
  version: number;
  hed: HedDoc;
}

export interface AlignmentSegment {
  label: string;
  start: number;
  end: number;
}

export interface AlignmentDoc {
  utterance: { start: number; end: number; text: string };
  words: AlignmentSegment[];
  phonemes: (AlignmentSegment & { word: number })[];
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
    public version?: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

/** The slice of the HTTP API the controller depends on. */
export interface ServiceApi {
  upload(audio: Blob, alignment: Blob): Promise<SessionDoc>;
  getHed(id: string): Promise<SessionDoc>;
  patchHed(id: string, expectedVersion: number, script: EditScript): Promise<SessionDoc>;
  undo(id: string): Promise<SessionDoc>;
  getAlignment(id: string): Promise<AlignmentDoc>;
  audioUrl(id: string): string;
  exportUrl(id: string, format: "csv" | "json"): string;
}
