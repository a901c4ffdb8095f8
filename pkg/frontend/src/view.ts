import { GridModel, valueToColor } from "./hed.js";
import { SessionController } from "./controller.js";
import { canSweep, parseValues, sweepExports } from "./sweep.js";
import type { Selector } from "./types.js";
import type { SweepLevel } from "./sweep.js";

interface Selection {
  level: "utterance" | "word" | "phoneme";
  index: number; // word or phoneme index; ignored for utterance
  emotion: string;
}

const BAND_LABELS: Record<Selection["level"], string> = {
  utterance: "Utterance",
  word: "Word",
  phoneme: "Phoneme",
};

export class GridView {
  private selection: Selection | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly controller: SessionController,
    private readonly audio: HTMLAudioElement,
  ) {}

  render(): void {
    const m = this.controller.model;
    this.root.textContent = "";
    if (!m) return;
    this.root.appendChild(this.buildTable(m));
    this.root.appendChild(this.buildLegend());
    this.root.appendChild(this.buildEditor(m));
    this.root.appendChild(this.buildSweepPanel(m));
  }

  private buildTable(m: GridModel): HTMLTableElement {
    const table = document.createElement("table");
    table.className = "hed-grid";
    const members = m.wordMembers();

    const wordHeader = table.insertRow();
    wordHeader.insertCell().textContent = "";
    members.forEach((phones, w) => {
      const cell = document.createElement("th");
      cell.colSpan = phones.length;
      cell.textContent = `word ${w}`;
      wordHeader.appendChild(cell);
    });

    const phonHeader = table.insertRow();
    phonHeader.insertCell().textContent = "";
    m.phonemes.forEach((p, i) => {
      const cell = document.createElement("th");
      cell.textContent = p.label;
      cell.title = `phoneme ${i}`;
      cell.addEventListener("click", () => this.seekPhoneme(i));
      phonHeader.appendChild(cell);
    });

    const bands: Selection["level"][] = ["utterance", "word", "phoneme"];
    for (const band of bands) {
      for (const emotion of m.emotions) {
        const row = table.insertRow();
        const label = row.insertCell();
        label.className = "band-label";
        label.textContent = `${BAND_LABELS[band]} / ${emotion}`;
        if (band === "utterance") {
          row.appendChild(this.cell(m, band, emotion, 0, m.nPhonemes, 0));
        } else if (band === "word") {
          members.forEach((phones, w) => {
            row.appendChild(this.cell(m, band, emotion, phones[0], phones.length, w));
          });
        } else {
          m.phonemes.forEach((_, i) => {
            row.appendChild(this.cell(m, band, emotion, i, 1, i));
          });
        }
      }
    }
    return table;
  }

  private cell(
    m: GridModel,
    band: Selection["level"],
    emotion: string,
    phoneme: number,
    span: number,
    index: number,
  ): HTMLTableCellElement {
    const v = m.value(band, emotion, phoneme);
    const cell = document.createElement("td");
    cell.colSpan = span;
    cell.style.background = valueToColor(v);
    cell.textContent = v.toFixed(2);
    cell.title = `${band} ${emotion}`;
    const sel = this.selection;
    if (sel && sel.level === band && sel.emotion === emotion && (band === "utterance" || sel.index === index)) {
      cell.classList.add("selected");
    }
    cell.addEventListener("click", () => {
      this.selection = { level: band, index, emotion };
      if (band === "phoneme") this.seekPhoneme(index);
      this.render();
    });
    return cell;
  }

  private seekPhoneme(i: number): void {
    const ali = this.controller.alignment;
    if (!ali || !ali.phonemes[i]) return;
    this.audio.currentTime = ali.phonemes[i].start;
    void this.audio.play().catch(() => undefined);
  }

  private buildLegend(): HTMLElement {
    const legend = document.createElement("div");
    legend.className = "legend";
    legend.textContent = "intensity scale: 0.0 = rgb(247,247,247), 1.0 = rgb(178,24,43), linear";
    return legend;
  }

  private buildEditor(m: GridModel): HTMLElement {
    const box = document.createElement("div");
    box.className = "editor";
    const sel = this.selection;
    const target = document.createElement("span");
    target.textContent = sel
      ? `${BAND_LABELS[sel.level]} ${sel.level === "utterance" ? "" : sel.index} / ${sel.emotion}`
      : "select a cell";
    box.appendChild(target);

    const slider = document.createElement("input");
    slider.type = "range";
    slider.min = "0";
    slider.max = "1";
    slider.step = "0.01";
    const number = document.createElement("input");
    number.type = "number";
    number.step = "0.05";
    if (sel) {
      const current = m.value(
        sel.level,
        sel.emotion,
        sel.level === "phoneme" ? sel.index : sel.level === "word" ? m.wordMembers()[sel.index][0] : 0,
      );
      slider.value = String(current);
      number.value = String(current);
    }

    const commitSet = (raw: number) => {
      if (!sel) return;
      if (sel.level === "utterance") void this.controller.setUtterance(sel.emotion, raw);
      else if (sel.level === "word") void this.controller.setWord(sel.index, sel.emotion, raw);
      else void this.controller.setPhoneme(sel.index, sel.emotion, raw);
    };
    slider.addEventListener("change", () => commitSet(Number(slider.value)));
    number.addEventListener("change", () => commitSet(Number(number.value)));
    box.appendChild(slider);
    box.appendChild(number);

    for (const action of ["scale", "add"] as const) {
      const btn = document.createElement("button");
      btn.textContent = action === "scale" ? "scale by value" : "add value";
      btn.addEventListener("click", () => {
        if (!sel) return;
        const selector: Selector = sel.level === "utterance" ? "all" : sel.index;
        void this.controller.adjust(sel.level, selector, sel.emotion, action, Number(number.value));
      });
      box.appendChild(btn);
    }

    const undo = document.createElement("button");
    undo.textContent = "undo";
    undo.addEventListener("click", () => void this.controller.undoLast());
    box.appendChild(undo);
    return box;
  }

  private buildSweepPanel(m: GridModel): HTMLElement {
    const box = document.createElement("div");
    box.className = "sweep";
    const levelSel = document.createElement("select");
    for (const lvl of ["utterance", "word", "phoneme", "wp"]) {
      const opt = document.createElement("option");
      opt.value = lvl;
      opt.textContent = lvl;
      levelSel.appendChild(opt);
    }
    const emotionSel = document.createElement("select");
    for (const e of m.emotions) {
      const opt = document.createElement("option");
      opt.value = e;
      opt.textContent = e;
      emotionSel.appendChild(opt);
    }
    const selectorInput = document.createElement("input");
    selectorInput.placeholder = "selector: all, 0, or 0:1";
    selectorInput.value = "0";
    const valuesInput = document.createElement("input");
    valuesInput.placeholder = "values: 0,0.5,1";
    valuesInput.value = "0,0.5,1";
    const button = document.createElement("button");
    button.textContent = "sweep preview";
    const downloads = document.createElement("ul");

    const refreshEnabled = () => {
      button.disabled = !canSweep(valuesInput.value);
    };
    valuesInput.addEventListener("input", refreshEnabled);
    refreshEnabled();

    button.addEventListener("click", () => {
      const model = this.controller.model;
      if (!model) return;
      const text = selectorInput.value.trim();
      const selector: Selector =
        text === "all"
          ? "all"
          : text.includes(":")
            ? [Number(text.split(":")[0]), Number(text.split(":")[1])]
            : Number(text);
      downloads.textContent = "";
      let exports;
      try {
        exports = sweepExports(
          model,
          levelSel.value as SweepLevel,
          selector,
          emotionSel.value,
          parseValues(valuesInput.value),
        );
      } catch (err) {
        const li = document.createElement("li");
        li.className = "sweep-error";
        li.textContent = err instanceof Error ? err.message : String(err);
        downloads.appendChild(li);
        return;
      }
      for (const item of exports) {
        const li = document.createElement("li");
        const link = document.createElement("a");
        link.textContent = item.filename;
        link.download = item.filename;
        link.href = URL.createObjectURL(new Blob([item.csv], { type: "text/csv" }));
        li.appendChild(link);
        downloads.appendChild(li);
      }
    });

    box.append(levelSel, emotionSel, selectorInput, valuesInput, button, downloads);
    return box;
  }
}
