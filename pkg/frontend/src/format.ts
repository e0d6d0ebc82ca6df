import { PIANO_LABELS } from "./types.js";

/** Gauge text: the 1-5 expected score, always two decimals. */
export function formatScore(score: number): string {
  return score.toFixed(2);
}

/** Bar width for a probability, as a CSS percent string with one decimal. */
export function barWidthPercent(p: number): string {
  return (p * 100).toFixed(1) + "%";
}

/**
 * Probabilities as [label, value] pairs sorted by probability descending.
 * Equal probabilities keep the service's label order (the sort is stable).
 */
export function sortedProbabilities(probs: Record<string, number>): [string, number][] {
  const pairs: [string, number][] = PIANO_LABELS.map((label) => [label, probs[label] ?? 0]);
  pairs.sort((a, b) => b[1] - a[1]);
  return pairs;
}

/** Gauge needle position as a percent of the 1-5 scale. */
export function gaugePercent(score: number): number {
  const clamped = Math.max(1, Math.min(5, score));
  return ((clamped - 1) / 4) * 100;
}
