/** Workbench entry point: analyze, review suggestions, edit, export. */

import { analyze, editOnServer } from "./api.js";
import {
  EditError,
  EditorState,
  applyEdit,
  exportText,
  initialState,
  replay,
  suggestionsFrom,
  undo,
} from "./editor.js";
import { buildView } from "./layout.js";
import { renderDocument, renderWorking } from "./render.js";
import type { Suggestion } from "./editor.js";

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing #${id}`);
  return found as T;
}

let state: EditorState | null = null;

function setStatus(text: string, isError = false): void {
  const status = el<HTMLElement>("status");
  status.textContent = text;
  status.classList.toggle("error", isError);
}

function describe(s: Suggestion): string {
  if (s.op === "REP") {
    return `REP ${s.mtWord} (for: ${s.sourceWords.join(" ") || "?"})`;
  }
  if (s.op === "DEL") {
    return `DEL ${s.mtWord}`;
  }
  return `INS at gap ${s.index} (from: ${s.sourceWords.join(" ") || "?"})`;
}

function refresh(): void {
  if (!state) return;
  renderWorking(el("working"), state);
  el<HTMLElement>("export-preview").textContent = exportText(state);
  const list = el<HTMLElement>("suggestions");
  list.textContent = "";
  for (const suggestion of suggestionsFrom(state.analysis)) {
    const item = document.createElement("li");
    const button = document.createElement("button");
    button.textContent = describe(suggestion);
    button.addEventListener("click", () => applySuggestion(suggestion));
    item.appendChild(button);
    list.appendChild(item);
  }
  el<HTMLElement>("log-size").textContent = String(state.log.length);
}

function applySuggestion(suggestion: Suggestion): void {
  if (!state) return;
  let payload: string | undefined;
  if (suggestion.needsPayload) {
    const hint = suggestion.sourceWords.join(" ");
    payload = window.prompt(
      `${suggestion.op} text (source: ${hint || "?"})`, "") ?? undefined;
    if (!payload) return;
  }
  try {
    // suggestion indices refer to the analyzed document; only safe to
    // apply directly while the document is unedited
    state = applyEdit(state, suggestion.op, suggestion.index, payload);
    setStatus(`applied ${suggestion.op}`);
  } catch (err) {
    if (err instanceof EditError) {
      setStatus(`${err.message} (document changed since analysis? undo first)`,
                true);
    } else {
      throw err;
    }
  }
  refresh();
}

async function onAnalyze(): Promise<void> {
  const base = el<HTMLInputElement>("api-base").value.replace(/\/+$/, "");
  const source = el<HTMLTextAreaElement>("source-input").value.trim();
  const mt = el<HTMLTextAreaElement>("mt-input").value.trim();
  const id = el<HTMLInputElement>("id-input").value.trim() || undefined;
  if (!source || !mt) {
    setStatus("enter both sentences", true);
    return;
  }
  setStatus("analyzing…");
  try {
    const analysis = await analyze(base, source, mt, id);
    state = initialState(analysis);
    renderDocument(el("document"), buildView(analysis));
    setStatus(`analyzed (threshold ${analysis.threshold.toFixed(3)})`);
    refresh();
  } catch (err) {
    setStatus(`analysis failed: ${(err as Error).message}`, true);
  }
}

function onUndo(): void {
  if (!state) return;
  state = undo(state);
  setStatus("undid last edit");
  refresh();
}

function onExport(): void {
  if (!state) return;
  const blob = new Blob([exportText(state) + "\n"],
                        { type: "text/plain;charset=utf-8" });
  const url = URL.createObjectURL(blob);
  const a = document.createElement("a");
  a.href = url;
  a.download = "post-edited.txt";
  a.click();
  URL.revokeObjectURL(url);
}

async function onParityCheck(): Promise<void> {
  // replays the last edit on the server and compares results
  if (!state || state.log.length === 0) {
    setStatus("nothing to check", true);
    return;
  }
  const base = el<HTMLInputElement>("api-base").value.replace(/\/+$/, "");
  const last = state.log[state.log.length - 1];
  const prior = replay(state.originalMt, state.log.slice(0, -1));
  try {
    const server = await editOnServer(base, prior.join(" "), last.op,
                                      last.index, last.payload);
    const matches = server.mt === state.workingMt.join(" ");
    setStatus(matches ? "server agrees with local edit"
                      : `parity mismatch: server says "${server.mt}"`, !matches);
  } catch (err) {
    setStatus(`parity check failed: ${(err as Error).message}`, true);
  }
}

function main(): void {
  el<HTMLButtonElement>("analyze-btn").addEventListener("click", () => {
    void onAnalyze();
  });
  el<HTMLButtonElement>("undo-btn").addEventListener("click", onUndo);
  el<HTMLButtonElement>("export-btn").addEventListener("click", onExport);
  el<HTMLButtonElement>("parity-btn").addEventListener("click", () => {
    void onParityCheck();
  });
  // the running example from the docs, ready to analyze
  el<HTMLTextAreaElement>("source-input").value = "Do you have white cats and dogs ?";
  el<HTMLTextAreaElement>("mt-input").value = "你 有 黑 猫 吗 ?";
}

document.addEventListener("DOMContentLoaded", main);
