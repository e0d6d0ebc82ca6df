/** The seven piano labels, in the order the service reports them. */
export const PIANO_LABELS = [
  "PearlRiver",
  "YoungChang",
  "Steinway-T",
  "Hsinghai",
  "Kawai",
  "Steinway",
  "Kawai-G",
] as const;

export type PianoLabel = (typeof PIANO_LABELS)[number];

/** Body of a successful POST /api/score. */
export interface ScoreResponse {
  /** Probability per piano label, summing to 1. */
  probabilities: Record<string, number>;

  /** Probability-weighted quality score on the survey's 1-5 scale. */
  expected_score: number;

  /** How many 0.2 s slices of the upload went into the prediction. */
  slices_used: number;

  model_id: string;
  profile_id: string;
}

/** One scored clip in the showroom session. */
export interface SessionEntry {
  /** User-entered name for the piano, e.g. "floor model #2". */
  nickname: string;

  /**
   * The expected_score exactly as the service reported it.
   * The UI never recomputes scores; this is a pass-through.
   */
  score: number;

  /** Brand probabilities exactly as returned by the service. */
  probabilities: Record<string, number>;

  /** Epoch milliseconds when the score arrived. */
  timestamp: number;
}

/** Returns true when the object has the shape of a ScoreResponse. */
export function isScoreResponse(body: unknown): body is ScoreResponse {
  if (typeof body !== "object" || body === null) return false;
  const r = body as Record<string, unknown>;
  if (typeof r.expected_score !== "number" || !Number.isFinite(r.expected_score)) return false;
  if (typeof r.slices_used !== "number") return false;
  if (typeof r.model_id !== "string" || typeof r.profile_id !== "string") return false;
  const probs = r.probabilities;
  if (typeof probs !== "object" || probs === null) return false;
  const entries = Object.entries(probs as Record<string, unknown>);
  if (entries.length !== PIANO_LABELS.length) return false;
  for (const label of PIANO_LABELS) {
    const p = (probs as Record<string, unknown>)[label];
    if (typeof p !== "number" || !Number.isFinite(p)) return false;
  }
  return true;
}
