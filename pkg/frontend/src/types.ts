/** Wire types mirroring the analysis service responses. */

export interface WordLink {
  src: number;
  mt: number;
  fwd_prob: number;
  bwd_prob: number;
  mean_prob: number;
}

export interface GapLink {
  src: number;
  gap: number;
  prob: number;
}

export interface AnalyzeResponse {
  id: string;
  tokens: { source: string[]; mt: string[] };
  source_tags: string[];
  mt_word_tags: string[];
  gap_tags: string[];
  word_links: WordLink[];
  gap_links: GapLink[];
  probabilities: { source: number[]; mt: number[] };
  threshold: number;
}

export interface EditResponse {
  session_id: string;
  mt: string;
  tokens: string[];
}

export type EditOpKind = "REP" | "INS" | "DEL";
