import type { AnalyzeResponse } from "../src/types.js";

/** The running example: mistranslated "white", dropped "and dogs",
 * spurious question particle. */
export function demoAnalysis(): AnalyzeResponse {
  return {
    id: "demo-1",
    tokens: {
      source: ["Do", "you", "have", "white", "cats", "and", "dogs", "?"],
      mt: ["你", "有", "黑", "猫", "吗", "?"],
    },
    source_tags: ["OK", "OK", "OK", "REP", "OK", "INS", "INS", "OK"],
    mt_word_tags: ["OK", "OK", "REP", "OK", "DEL", "OK"],
    gap_tags: ["OK", "OK", "OK", "OK", "INS", "OK", "OK"],
    word_links: [
      { src: 1, mt: 0, fwd_prob: 1, bwd_prob: 1, mean_prob: 1 },
      { src: 2, mt: 1, fwd_prob: 1, bwd_prob: 1, mean_prob: 1 },
      { src: 3, mt: 2, fwd_prob: 1, bwd_prob: 1, mean_prob: 1 },
      { src: 4, mt: 3, fwd_prob: 1, bwd_prob: 1, mean_prob: 1 },
      { src: 7, mt: 5, fwd_prob: 1, bwd_prob: 1, mean_prob: 1 },
    ],
    gap_links: [
      { src: 5, gap: 4, prob: 1 },
      { src: 6, gap: 4, prob: 1 },
    ],
    probabilities: {
      source: [0.1, 0.1, 0.1, 0.9, 0.1, 0.9, 0.9, 0.1],
      mt: [0.1, 0.1, 0.9, 0.1, 0.9, 0.1],
    },
    threshold: 0.5,
  };
}
