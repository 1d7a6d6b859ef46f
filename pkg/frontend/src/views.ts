/** DOM construction for every panel. No fetch calls in this module — it
 * turns API payloads and form state into elements, nothing else. */

import type { ExclusionEntry, RecordDetail, RecordSummary } from "./api.js";
import { attributeMeans, flowSeries, hourHistogram } from "./charts.js";
import { REASONS, VERDICTS, willCreateExclusion, type FormState } from "./state.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderQueue(
  container: HTMLElement,
  records: RecordSummary[],
  selectedId: string | null,
  onSelect: (id: string) => void,
): void {
  container.replaceChildren();
  if (records.length === 0) {
    container.appendChild(el("p", "empty-state", "no anomalies this window"));
    return;
  }
  const list = el("ul", "queue");
  for (const r of records) {
    const item = el("li", "queue-item");
    item.dataset.recordId = r.record_id;
    if (r.status === "reviewed") item.classList.add("reviewed");
    if (r.record_id === selectedId) item.classList.add("selected");
    item.appendChild(el("span", "queue-key", `${r.estate} ${r.elevator} floor ${r.floor}`));
    item.appendChild(el("span", "queue-score", r.r2_score.toFixed(3)));
    item.appendChild(el("span", "queue-status", r.status));
    item.addEventListener("click", () => onSelect(r.record_id));
    list.appendChild(item);
  }
  container.appendChild(list);
}

export function renderDetail(container: HTMLElement, detail: RecordDetail): void {
  container.replaceChildren();
  const head = el("div", "detail-head");
  head.appendChild(el("h2", undefined, detail.record_id));
  head.appendChild(
    el(
      "p",
      "scores",
      `round-1 score ${detail.r1_score.toFixed(3)} · round-2 score ${detail.r2_score.toFixed(3)}` +
        ` · headcount ${detail.headcount}`,
    ),
  );
  if (detail.label) {
    const tag = el(
      "p",
      "label-tag",
      `reviewed: ${detail.label.verdict} / ${detail.label.reason}` +
        (detail.label.note ? ` — ${detail.label.note}` : ""),
    );
    head.appendChild(tag);
  }
  container.appendChild(head);

  const charts = el("div", "charts");
  charts.appendChild(flowSeries(detail.flow_series));
  charts.appendChild(hourHistogram(detail.hour_histogram));
  charts.appendChild(attributeMeans(detail.attribute_class_means, "class"));
  charts.appendChild(attributeMeans(detail.attribute_score_means, "score"));
  container.appendChild(charts);

  const table = el("table", "stops");
  const headRow = el("tr");
  for (const h of ["time", "boarded", "alighted"]) headRow.appendChild(el("th", undefined, h));
  table.appendChild(headRow);
  for (const s of detail.stop_excerpts.slice(0, 50)) {
    const row = el("tr");
    row.appendChild(el("td", undefined, s.ts));
    row.appendChild(el("td", undefined, String(s.boarded)));
    row.appendChild(el("td", undefined, String(s.alighted)));
    table.appendChild(row);
  }
  const caption = el("caption", undefined, `stop excerpts (${detail.stop_excerpts.length})`);
  table.insertBefore(caption, table.firstChild);
  container.appendChild(table);
}

export interface FormCallbacks {
  onChange: (patch: Partial<FormState>) => void;
  onSubmit: () => void;
}

export function renderForm(
  container: HTMLElement,
  form: FormState,
  disabled: boolean,
  callbacks: FormCallbacks,
): void {
  container.replaceChildren();
  const root = el("form", "review-form");
  root.addEventListener("submit", (ev) => {
    ev.preventDefault();
    callbacks.onSubmit();
  });

  const option = (value: string, label: string, selected: boolean): HTMLOptionElement => {
    const node = el("option", undefined, label);
    node.value = value;
    node.selected = selected;
    return node;
  };

  const verdictSelect = el("select");
  verdictSelect.name = "verdict";
  verdictSelect.appendChild(option("", "— verdict —", form.verdict === ""));
  for (const v of VERDICTS) verdictSelect.appendChild(option(v, v, v === form.verdict));
  verdictSelect.addEventListener("change", () =>
    callbacks.onChange({ verdict: verdictSelect.value as FormState["verdict"] }),
  );

  const reasonSelect = el("select");
  reasonSelect.name = "reason";
  reasonSelect.appendChild(option("", "— reason —", form.reason === ""));
  for (const r of REASONS) reasonSelect.appendChild(option(r, r, r === form.reason));
  reasonSelect.addEventListener("change", () =>
    callbacks.onChange({ reason: reasonSelect.value as FormState["reason"] }),
  );

  const note = el("textarea");
  note.name = "note";
  note.value = form.note;
  note.placeholder = "note (optional)";
  note.addEventListener("input", () => callbacks.onChange({ note: note.value }));

  const scopeWrap = el("div", "scope");
  for (const scope of ["floor", "estate"] as const) {
    const lbl = el("label");
    const radio = el("input");
    radio.type = "radio";
    radio.name = "scope";
    radio.value = scope;
    radio.checked = form.scope === scope;
    radio.addEventListener("change", () => callbacks.onChange({ scope }));
    lbl.appendChild(radio);
    lbl.appendChild(document.createTextNode(` exclude whole ${scope}`));
    scopeWrap.appendChild(lbl);
  }

  const hint = el("p", "exclusion-hint");
  hint.textContent = willCreateExclusion(form.verdict, form.reason)
    ? "this verdict will add the key to the exclusion list"
    : "no exclusion will be created";

  const submit = el("button", undefined, "submit verdict");
  submit.type = "submit";
  submit.disabled = disabled;

  root.append(verdictSelect, reasonSelect, note, scopeWrap, hint, submit);
  container.appendChild(root);
}

export function renderExclusions(
  container: HTMLElement,
  entries: ExclusionEntry[],
  onDelete: (entryId: string) => void,
): void {
  container.replaceChildren();
  container.appendChild(el("h2", undefined, "exclusions"));
  if (entries.length === 0) {
    container.appendChild(el("p", "empty-state", "no active exclusions"));
    return;
  }
  const list = el("ul", "exclusions");
  for (const e of entries) {
    const scope = e.floor === null ? "whole estate" : `${e.elevator} floor ${e.floor}`;
    const item = el("li", "exclusion-item", `${e.estate} (${scope}) — ${e.reason} `);
    item.dataset.entryId = e.entry_id;
    const remove = el("button", "remove", "remove");
    remove.type = "button";
    remove.addEventListener("click", () => onDelete(e.entry_id));
    item.appendChild(remove);
    list.appendChild(item);
  }
  container.appendChild(list);
}

export function renderBanner(container: HTMLElement, message: string | null, retry?: () => void): void {
  container.replaceChildren();
  if (message === null) return;
  const banner = el("div", "banner", message + " ");
  if (retry) {
    const btn = el("button", undefined, "retry");
    btn.type = "button";
    btn.addEventListener("click", retry);
    banner.appendChild(btn);
  }
  container.appendChild(banner);
}
