import { ApiClient } from "./api.js";
import { SessionController } from "./controller.js";
import { GridView } from "./view.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

const apiBase =
  new URLSearchParams(window.location.search).get("api") ?? "http://127.0.0.1:8765";
const api = new ApiClient(apiBase);

const banner = el<HTMLDivElement>("banner");
function showBanner(text: string, kind: "error" | "info"): void {
  banner.textContent = text;
  banner.className = `banner ${kind}`;
  banner.hidden = false;
}

const audio = el<HTMLAudioElement>("playback");
const controller = new SessionController(api, {
  onChange: () => {
    view.render();
    el<HTMLSpanElement>("version").textContent =
      controller.version >= 0 ? `v${controller.version}` : "";
  },
  onError: (code, message) => showBanner(`${code}: ${message}`, "error"),
  onConflict: (message) =>
    showBanner(`edit lost to a concurrent change, grid refreshed (${message})`, "info"),
});
const view = new GridView(el<HTMLDivElement>("grid"), controller, audio);

el<HTMLButtonElement>("load").addEventListener("click", async () => {
  const wav = el<HTMLInputElement>("wav").files?.[0];
  const ali = el<HTMLInputElement>("alignment").files?.[0];
  if (!wav || !ali) {
    showBanner("choose a WAV file and an alignment file first", "error");
    return;
  }
  banner.hidden = true;
  try {
    await controller.load(wav, ali);
    if (controller.sessionId) {
      audio.src = api.audioUrl(controller.sessionId);
      const links = el<HTMLSpanElement>("exports");
      links.textContent = "";
      for (const format of ["csv", "json"] as const) {
        const a = document.createElement("a");
        a.href = api.exportUrl(controller.sessionId, format);
        a.textContent = `export ${format}`;
        links.appendChild(a);
      }
    }
  } catch (err) {
    const e = err as { code?: string; message?: string };
    showBanner(`${e.code ?? "load failed"}: ${e.message ?? String(err)}`, "error");
  }
});
