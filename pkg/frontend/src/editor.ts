/**
 * Pure editing state machine.
 *
 * The working MT is always a fold of the edit log over the original MT,
 * so replaying the log reproduces the document exactly and undo is just
 * log truncation plus replay. Nothing here touches the DOM or the
 * network; the /api/edit endpoint exists only for parity checks.
 */

import type { AnalyzeResponse, EditOpKind } from "./types.js";

export interface EditOp {
  op: EditOpKind;
  /** Word index for REP/DEL, gap index for INS, in current-document coordinates. */
  index: number;
  payload?: string;
  timestamp: number;
}

export interface EditorState {
  analysis: AnalyzeResponse;
  originalMt: readonly string[];
  workingMt: readonly string[];
  log: readonly EditOp[];
}

export class EditError extends Error {}

export function initialState(analysis: AnalyzeResponse): EditorState {
  const mt = [...analysis.tokens.mt];
  return { analysis, originalMt: mt, workingMt: mt, log: [] };
}

/** One REP/INS/DEL operation on a token list; pure, throws on bad input. */
export function applyOp(tokens: readonly string[], op: EditOpKind, index: number,
                        payload?: string): string[] {
  const out = [...tokens];
  if (op === "REP") {
    if (!Number.isInteger(index) || index < 0 || index >= out.length) {
      throw new EditError(`REP needs a word index in 0..${out.length - 1}`);
    }
    const words = (payload ?? "").split(/\s+/).filter((w) => w.length > 0);
    if (words.length === 0) {
      throw new EditError("REP needs replacement text");
    }
    out.splice(index, 1, ...words);
  } else if (op === "DEL") {
    if (!Number.isInteger(index) || index < 0 || index >= out.length) {
      throw new EditError(`DEL needs a word index in 0..${out.length - 1}`);
    }
    out.splice(index, 1);
  } else if (op === "INS") {
    if (!Number.isInteger(index) || index < 0 || index > out.length) {
      throw new EditError(`INS needs a gap index in 0..${out.length}`);
    }
    const words = (payload ?? "").split(/\s+/).filter((w) => w.length > 0);
    if (words.length === 0) {
      throw new EditError("INS needs insertion text");
    }
    out.splice(index, 0, ...words);
  } else {
    throw new EditError(`unknown edit op ${op}`);
  }
  return out;
}

export function replay(originalMt: readonly string[],
                       log: readonly EditOp[]): string[] {
  let tokens = [...originalMt];
  for (const entry of log) {
    tokens = applyOp(tokens, entry.op, entry.index, entry.payload);
  }
  return tokens;
}

/** Apply one edit; throws EditError (leaving the state untouched) on bad input. */
export function applyEdit(state: EditorState, op: EditOpKind, index: number,
                          payload?: string): EditorState {
  const workingMt = applyOp(state.workingMt, op, index, payload);
  const entry: EditOp = { op, index, payload, timestamp: Date.now() };
  return { ...state, workingMt, log: [...state.log, entry] };
}

/** Drop the latest edit and rebuild the document from the log. */
export function undo(state: EditorState): EditorState {
  if (state.log.length === 0) {
    return state;
  }
  const log = state.log.slice(0, -1);
  return { ...state, log, workingMt: replay(state.originalMt, log) };
}

/** The edited sentence, single-space joined. */
export function exportText(state: EditorState): string {
  return state.workingMt.join(" ");
}

export interface Suggestion {
  op: EditOpKind;
  /** Word index (REP/DEL) or gap index (INS) in original-document coordinates. */
  index: number;
  /** Source words behind the suggestion, for display. */
  sourceWords: string[];
  /** The MT word the operation targets, when there is one. */
  mtWord?: string;
  needsPayload: boolean;
}

/**
 * Operations the analysis suggests, ordered by descending document
 * position (gaps sit just before the word with the same index) so that
 * applying them in order never invalidates a later index.
 */
export function suggestionsFrom(analysis: AnalyzeResponse): Suggestion[] {
  const out: Suggestion[] = [];
  const srcOfMt = new Map<number, string[]>();
  for (const link of analysis.word_links) {
    const words = srcOfMt.get(link.mt) ?? [];
    words.push(analysis.tokens.source[link.src]);
    srcOfMt.set(link.mt, words);
  }
  analysis.mt_word_tags.forEach((tag, j) => {
    if (tag === "REP") {
      out.push({ op: "REP", index: j, sourceWords: srcOfMt.get(j) ?? [],
                 mtWord: analysis.tokens.mt[j], needsPayload: true });
    } else if (tag === "DEL") {
      out.push({ op: "DEL", index: j, sourceWords: [],
                 mtWord: analysis.tokens.mt[j], needsPayload: false });
    }
  });
  const srcOfGap = new Map<number, string[]>();
  for (const link of analysis.gap_links) {
    const words = srcOfGap.get(link.gap) ?? [];
    words.push(analysis.tokens.source[link.src]);
    srcOfGap.set(link.gap, words);
  }
  analysis.gap_tags.forEach((tag, k) => {
    if (tag === "INS") {
      out.push({ op: "INS", index: k, sourceWords: srcOfGap.get(k) ?? [],
                 needsPayload: true });
    }
  });
  // descending position; a gap k sits just before word k
  const position = (s: Suggestion) => (s.op === "INS" ? s.index - 0.5 : s.index);
  return out.sort((a, b) => position(b) - position(a));
}

/**
 * Fold every suggestion into the document. The payload provider supplies
 * the text a human editor would type; suggestions it returns nothing for
 * are skipped.
 */
export function applyAllSuggestions(
  state: EditorState,
  payloadFor: (s: Suggestion) => string | undefined,
): EditorState {
  let current = state;
  for (const suggestion of suggestionsFrom(state.analysis)) {
    const payload = suggestion.needsPayload ? payloadFor(suggestion) : undefined;
    if (suggestion.needsPayload && !payload) {
      continue;
    }
    current = applyEdit(current, suggestion.op, suggestion.index, payload);
  }
  return current;
}
