/** REST client for the scoring service.  One scoring request at a time. */

import { ScoreResponse, isScoreResponse } from "./types.js";

/** Error whose message is meant for the user-facing banner. */
export class ScoreRequestError extends Error {}

async function failureMessage(resp: Response): Promise<string> {
  if (resp.status === 422) return "recording too short";
  try {
    const body = await resp.json();
    if (body && typeof body.error === "string") {
      return typeof body.detail === "string" && body.detail.length > 0
        ? `${body.error}: ${body.detail}`
        : body.error;
    }
  } catch {
    // non-JSON error body, fall through to the generic message
  }
  return `scoring failed (HTTP ${resp.status})`;
}

export function createApiClient(baseUrl: string = "") {
  let pending = false;

  /** Upload a WAV payload to /api/score and return the parsed response. */
  async function scoreWav(wav: Uint8Array | Blob, filename: string = "clip.wav"): Promise<ScoreResponse> {
    if (pending) {
      throw new ScoreRequestError("a scoring request is already in flight");
    }
    pending = true;
    try {
      const blob = wav instanceof Blob ? wav : new Blob([wav.buffer as ArrayBuffer], { type: "audio/wav" });
      const form = new FormData();
      form.append("file", blob, filename);

      let resp: Response;
      try {
        resp = await fetch(baseUrl + "/api/score", { method: "POST", body: form });
      } catch {
        throw new ScoreRequestError("scoring service unreachable");
      }
      if (!resp.ok) {
        throw new ScoreRequestError(await failureMessage(resp));
      }

      let body: unknown;
      try {
        body = await resp.json();
      } catch {
        throw new ScoreRequestError("malformed response from the scoring service");
      }
      if (!isScoreResponse(body)) {
        throw new ScoreRequestError("malformed response from the scoring service");
      }
      return body;
    } finally {
      pending = false;
    }
  }

  async function getPianos(): Promise<string[]> {
    const resp = await fetch(baseUrl + "/api/pianos");
    if (!resp.ok) throw new ScoreRequestError(await failureMessage(resp));
    return resp.json();
  }

  async function getHealth(): Promise<{ status: string; model_id: string }> {
    const resp = await fetch(baseUrl + "/api/health");
    if (!resp.ok) throw new ScoreRequestError(await failureMessage(resp));
    return resp.json();
  }

  return {
    scoreWav,
    getPianos,
    getHealth,
    busy: () => pending,
  };
}

export type ApiClient = ReturnType<typeof createApiClient>;
