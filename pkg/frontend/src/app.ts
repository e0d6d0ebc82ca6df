/** Page wiring: controls on one side, the score and session views on the other. */

import { createApiClient } from "./api.js";
import { renderBars, renderError, renderGauge, renderTable } from "./render.js";
import { createSessionStore, entryFromResponse, sessionToCsv } from "./session.js";
import { CaptureHandle, startCapture } from "./recorder.js";
import { UPLOAD_RATE, encodeWav, resampleLinear } from "./wav.js";

const $ = (id: string) => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el;
};

const client = createApiClient("");
const store = createSessionStore(window.localStorage);

const banner = $("banner");
const gauge = $("gauge");
const bars = $("bars");
const sessionView = $("session");
const nicknameInput = $("nickname") as HTMLInputElement;
const recordBtn = $("record-btn") as HTMLButtonElement;
const fileInput = $("file-input") as HTMLInputElement;
const exportBtn = $("export-btn") as HTMLButtonElement;
const clearBtn = $("clear-btn") as HTMLButtonElement;

let capture: CaptureHandle | null = null;

function showError(message: string) {
  banner.innerHTML = renderError(message);
}

function clearError() {
  banner.innerHTML = "";
}

function refreshTable() {
  sessionView.innerHTML = renderTable(store.entries());
}

function setBusy(busy: boolean) {
  recordBtn.disabled = busy;
  fileInput.disabled = busy;
}

function currentNickname(): string {
  const typed = nicknameInput.value.trim();
  return typed !== "" ? typed : `piano ${store.entries().length + 1}`;
}

async function submit(payload: Uint8Array | Blob, filename: string) {
  if (client.busy()) return;
  clearError();
  setBusy(true);
  try {
    const response = await client.scoreWav(payload, filename);
    const entry = entryFromResponse(currentNickname(), response, Date.now());
    store.add(entry);
    gauge.innerHTML = renderGauge(response.expected_score);
    bars.innerHTML = renderBars(response.probabilities);
    refreshTable();
    nicknameInput.value = "";
  } catch (err) {
    showError(err instanceof Error ? err.message : "scoring failed");
  } finally {
    setBusy(false);
  }
}

recordBtn.addEventListener("click", async () => {
  if (capture === null) {
    try {
      capture = await startCapture();
    } catch (err) {
      showError(err instanceof Error ? err.message : "microphone unavailable");
      return;
    }
    recordBtn.textContent = "Stop and score";
    recordBtn.classList.add("recording");
  } else {
    const handle = capture;
    capture = null;
    recordBtn.textContent = "Record";
    recordBtn.classList.remove("recording");
    const { samples, sampleRate } = await handle.stop();
    const mono = resampleLinear(samples, sampleRate, UPLOAD_RATE);
    await submit(encodeWav(mono, UPLOAD_RATE), "recording.wav");
  }
});

fileInput.addEventListener("change", async () => {
  const file = fileInput.files && fileInput.files[0];
  fileInput.value = "";
  if (!file) return;
  const isWav =
    file.name.toLowerCase().endsWith(".wav") || file.type === "audio/wav" || file.type === "audio/x-wav";
  if (!isWav) {
    showError("only WAV files are supported");
    return;
  }
  await submit(file, file.name);
});

exportBtn.addEventListener("click", () => {
  const csv = sessionToCsv(store.entries());
  const blob = new Blob([csv], { type: "text/csv" });
  const a = document.createElement("a");
  a.href = URL.createObjectURL(blob);
  a.download = "session.csv";
  a.click();
  URL.revokeObjectURL(a.href);
});

clearBtn.addEventListener("click", () => {
  store.clear();
  refreshTable();
});

refreshTable();

client.getHealth().catch(() => {
  showError("scoring service unreachable");
});
