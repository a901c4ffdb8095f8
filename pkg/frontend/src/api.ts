import { ApiError } from "./types.js";
import type { AlignmentDoc, EditScript, ServiceApi, SessionDoc } from "./types.js";

async function raiseFor(resp: Response): Promise<never> {
  let code = "http_error";
  let message = `${resp.status} ${resp.statusText}`;
  let version: number | undefined;
  try {
    const body = (await resp.json()) as {
      error?: { code?: string; message?: string };
      version?: number;
    };
    if (body.error) {
      code = body.error.code ?? code;
      message = body.error.message ?? message;
    }
    version = body.version;
  } catch {
    // non-JSON error body; keep the HTTP defaults
  }
  throw new ApiError(resp.status, code, message, version);
}

export class ApiClient implements ServiceApi {
  constructor(readonly baseUrl: string) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  private async json<T>(resp: Response): Promise<T> {
    if (!resp.ok) await raiseFor(resp);
    return (await resp.json()) as T;
  }

  async upload(audio: Blob, alignment: Blob): Promise<SessionDoc> {
    const form = new FormData();
    form.append("audio", audio, audio instanceof File ? audio.name : "audio.wav");
    // keep the picked file's name: the server dispatches TextGrid vs JSON
    // by extension first, content sniffing second
    form.append("alignment", alignment, alignment instanceof File ? alignment.name : "alignment");
    return this.json(await fetch(this.url("/utterances"), { method: "POST", body: form }));
  }

  async getHed(id: string): Promise<SessionDoc> {
    return this.json(await fetch(this.url(`/utterances/${id}/hed`)));
  }

  async patchHed(id: string, expectedVersion: number, script: EditScript): Promise<SessionDoc> {
    return this.json(
      await fetch(this.url(`/utterances/${id}/hed`), {
        method: "PATCH",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ expected_version: expectedVersion, script }),
      }),
    );
  }

  async undo(id: string): Promise<SessionDoc> {
    return this.json(await fetch(this.url(`/utterances/${id}/undo`), { method: "POST" }));
  }

  async getAlignment(id: string): Promise<AlignmentDoc> {
    return this.json(await fetch(this.url(`/utterances/${id}/alignment`)));
  }

  audioUrl(id: string): string {
    return this.url(`/utterances/${id}/audio`);
  }

  exportUrl(id: string, format: "csv" | "json"): string {
    return this.url(`/utterances/${id}/export?format=${format}`);
  }
}
