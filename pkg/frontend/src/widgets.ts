// DOM builders. Likert input is radio-button-only, so the widget cannot
// produce a value outside 1..5.

import type { Report } from "./api.js";

export const LIKERT_VALUES = [1, 2, 3, 4, 5] as const;

export function renderPoem(text: string): HTMLPreElement {
  const pre = document.createElement("pre");
  pre.className = "poem";
  pre.textContent = text; // verbatim; line breaks preserved by <pre>
  return pre;
}

export function likertGroup(dimension: string): HTMLFieldSetElement {
  const fieldset = document.createElement("fieldset");
  fieldset.className = "likert";
  fieldset.dataset.dimension = dimension;
  const legend = document.createElement("legend");
  legend.textContent = dimension;
  fieldset.appendChild(legend);
  for (const value of LIKERT_VALUES) {
    const label = document.createElement("label");
    const input = document.createElement("input");
    input.type = "radio";
    input.name = `likert-${dimension}`;
    input.value = String(value);
    label.appendChild(input);
    label.appendChild(document.createTextNode(String(value)));
    fieldset.appendChild(label);
  }
  return fieldset;
}

export function selectedValue(group: HTMLFieldSetElement): number | null {
  const checked = group.querySelector<HTMLInputElement>("input[type=radio]:checked");
  return checked ? Number(checked.value) : null;
}

function cell(text: string, header = false): HTMLTableCellElement {
  const td = document.createElement(header ? "th" : "td");
  td.textContent = text;
  return td;
}

function show(value: number | null): string {
  // exactly the JSON value; null cells stay empty
  return value === null ? "" : String(value);
}

export function renderReportTable(report: Report): HTMLTableElement {
  const table = document.createElement("table");
  table.className = "report";
  if (report.kind === "emotion") {
    const head = table.insertRow();
    head.appendChild(cell("emotion", true));
    head.appendChild(cell("% elicited", true));
    for (const [emotion, percent] of Object.entries(report.per_emotion)) {
      const row = table.insertRow();
      row.appendChild(cell(emotion));
      row.appendChild(cell(show(percent)));
    }
    const poemHead = table.insertRow();
    poemHead.appendChild(cell("poem", true));
    poemHead.appendChild(cell("target / %", true));
    for (const poem of report.per_poem) {
      const row = table.insertRow();
      row.appendChild(cell(poem.poem_id));
      row.appendChild(cell(`${poem.target}: ${show(poem.percent)}`));
    }
  } else {
    const head = table.insertRow();
    head.appendChild(cell("poem", true));
    for (const dimension of report.dimensions) {
      head.appendChild(cell(dimension, true));
    }
    for (const [poemId, cells] of Object.entries(report.per_poem)) {
      const row = table.insertRow();
      row.appendChild(cell(poemId));
      for (const dimension of report.dimensions) {
        row.appendChild(cell(show(cells[dimension])));
      }
    }
  }
  return table;
}

export function errorBanner(message: string, onRetry: () => void): HTMLDivElement {
  const banner = document.createElement("div");
  banner.className = "banner error";
  banner.textContent = message;
  const retry = document.createElement("button");
  retry.textContent = "Retry";
  retry.addEventListener("click", onRetry);
  banner.appendChild(retry);
  return banner;
}
