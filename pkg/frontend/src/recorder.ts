/** Microphone capture as raw float samples, for client-side WAV encoding. */

import { mixToMono } from "./wav.js";

export interface CaptureHandle {
  /** Stop recording and return everything captured so far. */
  stop(): Promise<{ samples: Float32Array; sampleRate: number }>;
}

/**
 * Start capturing microphone audio.  Samples are collected as float PCM via
 * a script processor node, so no browser codec sits between the microphone
 * and the WAV encoder.  Throws with a user-facing message when permission
 * is denied.
 */
export async function startCapture(): Promise<CaptureHandle> {
  let stream: MediaStream;
  try {
    stream = await navigator.mediaDevices.getUserMedia({
      audio: { channelCount: 1, echoCancellation: false, noiseSuppression: false },
    });
  } catch (err) {
    if (err instanceof DOMException && (err.name === "NotAllowedError" || err.name === "SecurityError")) {
      throw new Error("microphone permission denied");
    }
    throw new Error("microphone unavailable");
  }

  const ctx = new AudioContext({ sampleRate: 44100 });
  const source = ctx.createMediaStreamSource(stream);
  const processor = ctx.createScriptProcessor(4096, 1, 1);
  const chunks: Float32Array[] = [];

  processor.onaudioprocess = (ev) => {
    const input = ev.inputBuffer;
    const channels: Float32Array[] = [];
    for (let c = 0; c < input.numberOfChannels; c++) {
      channels.push(new Float32Array(input.getChannelData(c)));
    }
    chunks.push(mixToMono(channels));
  };
  source.connect(processor);
  processor.connect(ctx.destination);

  return {
    async stop() {
      processor.disconnect();
      source.disconnect();
      stream.getTracks().forEach((t) => t.stop());
      const sampleRate = ctx.sampleRate;
      await ctx.close();

      let total = 0;
      for (const c of chunks) total += c.length;
      const samples = new Float32Array(total);
      let off = 0;
      for (const c of chunks) {
        samples.set(c, off);
        off += c.length;
      }
      return { samples, sampleRate };
    },
  };
}
