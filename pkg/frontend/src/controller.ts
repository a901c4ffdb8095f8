import { clamp01, GridModel } from "./hed.js";
import { ApiError } from "./types.js";
import type { AlignmentDoc, EditScript, Selector, ServiceApi } from "./types.js";

export type GestureOutcome = "applied" | "conflict" | "rejected";

export interface ControllerEvents {
  onChange?: () => void;
  onError?: (code: string, message: string) => void;
  onConflict?: (message: string) => void;
}

/**
 * Session state machine: optimistic rendering with authoritative server
 * confirmation. Each user gesture becomes exactly one edit script. On a
 * version conflict the optimistic state is rolled back and the grid is
 * refreshed from the server.
 */
export class SessionController {
  sessionId: string | null = null;
  version = -1;
  model: GridModel | null = null;
  alignment: AlignmentDoc | null = null;

  constructor(
    private readonly api: ServiceApi,
    private readonly events: ControllerEvents = {},
  ) {}

  private changed(): void {
    this.events.onChange?.();
  }

  async load(audio: Blob, alignment: Blob): Promise<void> {
    const doc = await this.api.upload(audio, alignment);
    this.sessionId = doc.id;
    this.version = doc.version;
    this.model = GridModel.fromDoc(doc.hed);
    this.alignment = await this.api.getAlignment(doc.id);
    this.changed();
  }

  async refresh(): Promise<void> {
    if (!this.sessionId) return;
    const doc = await this.api.getHed(this.sessionId);
    this.version = doc.version;
    this.model = GridModel.fromDoc(doc.hed);
    this.changed();
  }

  /** Apply one gesture's script optimistically, then confirm with the server. */
  async gesture(script: EditScript): Promise<GestureOutcome> {
    if (!this.sessionId || !this.model) throw new Error("no session loaded");
    const before = this.model;
    try {
      this.model = before.applyScript(script);
      this.changed();
    } catch (err) {
      this.model = before;
      const e = err as { code?: string; message?: string };
      this.events.onError?.(e.code ?? "invalid-edit", e.message ?? String(err));
      this.changed();
      return "rejected";
    }
    try {
      const doc = await this.api.patchHed(this.sessionId, this.version, script);
      this.version = doc.version;
      this.model = GridModel.fromDoc(doc.hed);
      this.changed();
      return "applied";
    } catch (err) {
      this.model = before;
      this.changed();
      if (err instanceof ApiError && err.status === 409) {
        await this.refresh();
        this.events.onConflict?.(err.message);
        return "conflict";
      }
      if (err instanceof ApiError) {
        this.events.onError?.(err.code, err.message);
        return "rejected";
      }
      throw err;
    }
  }

  /** Word-band slider: exactly one word-level set op, value clamped first. */
  async setWord(word: number, emotion: string, value: number): Promise<GestureOutcome> {
    return this.gesture({
      ops: [{ level: "word", selector: word, emotion, action: "set", value: clamp01(value) }],
    });
  }

  /** Utterance-band slider: a single utterance-level op. */
  async setUtterance(emotion: string, value: number): Promise<GestureOutcome> {
    return this.gesture({
      ops: [{ level: "utterance", selector: "all", emotion, action: "set", value: clamp01(value) }],
    });
  }

  async setPhoneme(phoneme: number, emotion: string, value: number): Promise<GestureOutcome> {
    return this.gesture({
      ops: [{ level: "phoneme", selector: phoneme, emotion, action: "set", value: clamp01(value) }],
    });
  }

  /** Scale/add leave the value unclamped; the result clamps cell-wise. */
  async adjust(
    level: "utterance" | "word" | "phoneme",
    selector: Selector,
    emotion: string,
    action: "scale" | "add",
    value: number,
  ): Promise<GestureOutcome> {
    return this.gesture({ ops: [{ level, selector, emotion, action, value }] });
  }

  async undoLast(): Promise<boolean> {
    if (!this.sessionId) return false;
    try {
      const doc = await this.api.undo(this.sessionId);
      this.version = doc.version;
      this.model = GridModel.fromDoc(doc.hed);
      this.changed();
      return true;
    } catch (err) {
      if (err instanceof ApiError) {
        this.events.onError?.(err.code, err.message);
        return false;
      }
      throw err;
    }
  }
}
