/**
 * View-model computation: everything the renderer needs, with no DOM
 * involved so it stays unit-testable. Connector colors follow the
 * editing legend: replacement pairs in red, insertion links in purple,
 * ordinary alignment in gray.
 */

import type { AnalyzeResponse } from "./types.js";

export const REP_COLOR = "#d62828";
export const INS_COLOR = "#7b2cbf";
export const ALIGN_COLOR = "#9aa0a6";

export interface TokenCell {
  text: string;
  tag: string;
  side: "source" | "mt";
  index: number;
}

export interface GapSlot {
  index: number;
  tag: string;
}

export interface Connector {
  kind: "rep" | "ins" | "align";
  color: string;
  srcIndex: number;
  /** MT word index for word links, gap index for insertion links. */
  mtIndex: number;
  toGap: boolean;
}

export interface DocumentView {
  source: TokenCell[];
  mt: TokenCell[];
  gaps: GapSlot[];
  connectors: Connector[];
  banner?: string;
}

function isStringArray(v: unknown): v is string[] {
  return Array.isArray(v) && v.every((x) => typeof x === "string");
}

/**
 * Build the document view. Malformed responses degrade instead of
 * throwing: whatever renders safely is kept and a diagnostic banner
 * describes what was wrong.
 */
export function buildView(analysis: AnalyzeResponse): DocumentView {
  const problems: string[] = [];
  const sourceTokens = isStringArray(analysis?.tokens?.source)
    ? analysis.tokens.source : [];
  const mtTokens = isStringArray(analysis?.tokens?.mt) ? analysis.tokens.mt : [];
  if (sourceTokens.length === 0 || mtTokens.length === 0) {
    problems.push("missing tokens");
  }

  const sourceTags = isStringArray(analysis?.source_tags)
    && analysis.source_tags.length === sourceTokens.length
    ? analysis.source_tags : null;
  if (!sourceTags) problems.push("source_tags missing or wrong length");
  const mtTags = isStringArray(analysis?.mt_word_tags)
    && analysis.mt_word_tags.length === mtTokens.length
    ? analysis.mt_word_tags : null;
  if (!mtTags) problems.push("mt_word_tags missing or wrong length");
  const gapTags = isStringArray(analysis?.gap_tags)
    && analysis.gap_tags.length === mtTokens.length + 1
    ? analysis.gap_tags : null;
  if (!gapTags) problems.push("gap_tags missing or wrong length");

  const source = sourceTokens.map((text, index): TokenCell => ({
    text, index, side: "source", tag: sourceTags ? sourceTags[index] : "OK",
  }));
  const mt = mtTokens.map((text, index): TokenCell => ({
    text, index, side: "mt", tag: mtTags ? mtTags[index] : "OK",
  }));
  const gaps: GapSlot[] = [];
  for (let k = 0; k <= mtTokens.length; k++) {
    gaps.push({ index: k, tag: gapTags ? gapTags[k] : "OK" });
  }

  const connectors: Connector[] = [];
  const wordLinks = Array.isArray(analysis?.word_links) ? analysis.word_links : null;
  if (!wordLinks) {
    problems.push("word_links missing");
  } else {
    for (const link of wordLinks) {
      if (link.src < 0 || link.src >= source.length
          || link.mt < 0 || link.mt >= mt.length) {
        problems.push(`word link ${link.src}-${link.mt} out of range`);
        continue;
      }
      const isRep = source[link.src].tag === "REP" && mt[link.mt].tag === "REP";
      connectors.push({
        kind: isRep ? "rep" : "align",
        color: isRep ? REP_COLOR : ALIGN_COLOR,
        srcIndex: link.src,
        mtIndex: link.mt,
        toGap: false,
      });
    }
  }
  const gapLinks = Array.isArray(analysis?.gap_links) ? analysis.gap_links : null;
  if (!gapLinks) {
    problems.push("gap_links missing");
  } else {
    for (const link of gapLinks) {
      if (link.src < 0 || link.src >= source.length
          || link.gap < 0 || link.gap > mt.length) {
        problems.push(`gap link ${link.src}-g${link.gap} out of range`);
        continue;
      }
      connectors.push({
        kind: "ins",
        color: INS_COLOR,
        srcIndex: link.src,
        mtIndex: link.gap,
        toGap: true,
      });
    }
  }

  return {
    source, mt, gaps, connectors,
    banner: problems.length ? `Malformed analysis: ${problems.join("; ")}` : undefined,
  };
}
