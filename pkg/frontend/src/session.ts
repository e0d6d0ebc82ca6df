/** Showroom session state: ranking, CSV export, and local persistence. */

import { PIANO_LABELS, ScoreResponse, SessionEntry } from "./types.js";

const STORAGE_KEY = "pianoq-session";

/** Build a session entry straight from a service response, no recomputation. */
export function entryFromResponse(nickname: string, response: ScoreResponse, timestamp: number): SessionEntry {
  return {
    nickname,
    score: response.expected_score,
    probabilities: { ...response.probabilities },
    timestamp,
  };
}

/**
 * Ranked view of the session: best score first, and when two pianos
 * score the same, the one tried earlier comes first.
 */
export function compareSession(entries: SessionEntry[]): SessionEntry[] {
  return [...entries].sort((a, b) => b.score - a.score || a.timestamp - b.timestamp);
}

function escapeCsv(field: string): string {
  if (/[",\n\r]/.test(field)) return '"' + field.replace(/"/g, '""') + '"';
  return field;
}

function parseCsv(text: string): string[][] {
  const rows: string[][] = [];
  let row: string[] = [];
  let cur = "";
  let quoted = false;
  let sawField = false;
  for (let i = 0; i < text.length; i++) {
    const c = text[i];
    if (quoted) {
      if (c === '"' && text[i + 1] === '"') {
        cur += '"';
        i++;
      } else if (c === '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c === '"') {
      quoted = true;
      sawField = true;
    } else if (c === ",") {
      row.push(cur);
      cur = "";
      sawField = true;
    } else if (c === "\n" || c === "\r") {
      if (c === "\r" && text[i + 1] === "\n") i++;
      if (sawField || cur.length > 0) {
        row.push(cur);
        rows.push(row);
      }
      row = [];
      cur = "";
      sawField = false;
    } else {
      cur += c;
    }
  }
  if (sawField || cur.length > 0) {
    row.push(cur);
    rows.push(row);
  }
  return rows;
}

const CSV_HEADER = ["nickname", "score", ...PIANO_LABELS, "timestamp"].join(",");

/**
 * CSV export of the ranked session.  Scores and probabilities are written
 * with JavaScript's shortest exact decimal form, so parsing the file back
 * reproduces the displayed values bit for bit.
 */
export function sessionToCsv(entries: SessionEntry[]): string {
  const lines = [CSV_HEADER];
  for (const e of compareSession(entries)) {
    const row = [
      escapeCsv(e.nickname),
      String(e.score),
      ...PIANO_LABELS.map((label) => String(e.probabilities[label] ?? 0)),
      new Date(e.timestamp).toISOString(),
    ];
    lines.push(row.join(","));
  }
  return lines.join("\r\n") + "\r\n";
}

/** Parse a session CSV produced by sessionToCsv. */
export function sessionFromCsv(text: string): SessionEntry[] {
  const rows = parseCsv(text);
  if (rows.length === 0 || rows[0].join(",") !== CSV_HEADER) {
    throw new Error("not a session CSV");
  }
  const entries: SessionEntry[] = [];
  for (const fields of rows.slice(1)) {
    if (fields.length !== 2 + PIANO_LABELS.length + 1) {
      throw new Error("wrong column count in session CSV");
    }
    const probabilities: Record<string, number> = {};
    PIANO_LABELS.forEach((label, i) => {
      probabilities[label] = Number(fields[2 + i]);
    });
    entries.push({
      nickname: fields[0],
      score: Number(fields[1]),
      probabilities,
      timestamp: Date.parse(fields[fields.length - 1]),
    });
  }
  return entries;
}

/** Minimal slice of the Web Storage interface, so tests can stub it. */
export interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

/** Session store backed by web storage; survives page reloads. */
export function createSessionStore(storage: StorageLike) {
  let entries: SessionEntry[] = [];
  const raw = storage.getItem(STORAGE_KEY);
  if (raw !== null) {
    try {
      const parsed = JSON.parse(raw);
      if (Array.isArray(parsed)) entries = parsed;
    } catch {
      storage.removeItem(STORAGE_KEY);
    }
  }

  const save = () => storage.setItem(STORAGE_KEY, JSON.stringify(entries));

  return {
    entries: (): SessionEntry[] => [...entries],
    add(entry: SessionEntry) {
      entries.push(entry);
      save();
    },
    clear() {
      entries = [];
      storage.removeItem(STORAGE_KEY);
    },
  };
}

export type SessionStore = ReturnType<typeof createSessionStore>;
