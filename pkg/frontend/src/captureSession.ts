/**
 * Capture session: drives an XR frame loop purely for data capture (no
 * rendering) and streams one handle frame document per XR frame to the
 * gateway.
 *
 * States: idle -> running -> (reconnecting <-> running) -> idle. Frames
 * are emitted only while running with a valid reference space; during a
 * disconnect frames are discarded, never queued, because stale input is
 * worse than missing input for real-time control. Reconnection uses
 * bounded exponential backoff.
 */

import { buildHandleFrame } from "./frameBuilder.js";
import type { XRSessionLike, EmulatedXRFrame } from "./xrEmulator.js";
import type { FrameTransport } from "./types.js";

export type CaptureState = "idle" | "running" | "reconnecting";

export interface CaptureOptions {
  reconnectBaseMs?: number;
  reconnectMaxMs?: number;
  maxReconnectAttempts?: number;
  now?: () => number;
  /** Test hook: replaces setTimeout-based backoff waits. */
  sleep?: (ms: number) => Promise<void>;
}

const defaultSleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

export class CaptureSession {
  readonly session: XRSessionLike;
  private transport: FrameTransport;
  private options: Required<CaptureOptions>;

  state: CaptureState = "idle";
  framesSent = 0;
  framesDiscarded = 0;
  reconnects = 0;
  lastFrameTimestamp: number | null = null;
  referenceSpaceValid = true;

  private stopping = false;
  private reconnecting: Promise<void> | null = null;

  constructor(session: XRSessionLike, transport: FrameTransport, options: CaptureOptions = {}) {
    this.session = session;
    this.transport = transport;
    this.options = {
      reconnectBaseMs: options.reconnectBaseMs ?? 100,
      reconnectMaxMs: options.reconnectMaxMs ?? 2000,
      maxReconnectAttempts: options.maxReconnectAttempts ?? 8,
      now: options.now ?? (() => Date.now()),
      sleep: options.sleep ?? defaultSleep,
    };
  }

  async start(): Promise<void> {
    if (this.state !== "idle") return;
    await this.transport.connect();
    this.transport.onDisconnect(() => {
      if (!this.stopping) void this.beginReconnect();
    });
    this.stopping = false;
    this.state = "running";
    this.session.requestAnimationFrame(this.onFrame);
  }

  stop(): void {
    this.stopping = true;
    this.state = "idle";
    this.transport.close();
  }

  private onFrame = (frame: EmulatedXRFrame): void => {
    if (this.stopping) return;
    this.session.requestAnimationFrame(this.onFrame);
    const doc = buildHandleFrame(frame, this.options.now());
    if (doc === null) {
      // No trackable handle this frame: reference-space loss pauses
      // emission; it resumes by itself once poses come back.
      this.referenceSpaceValid = frame.inputSources.length === 0;
      return;
    }
    this.referenceSpaceValid = true;
    if (this.state !== "running") {
      this.framesDiscarded++;
      return;
    }
    try {
      this.transport.send(JSON.stringify(doc));
      this.framesSent++;
      this.lastFrameTimestamp = doc.timestamp;
    } catch {
      this.framesDiscarded++;
      void this.beginReconnect();
    }
  };

  private beginReconnect(): Promise<void> {
    if (!this.reconnecting) {
      this.reconnecting = this.reconnectLoop().finally(() => {
        this.reconnecting = null;
      });
    }
    return this.reconnecting;
  }

  private async reconnectLoop(): Promise<void> {
    this.state = "reconnecting";
    let delay = this.options.reconnectBaseMs;
    for (
      let attempt = 0;
      attempt < this.options.maxReconnectAttempts && !this.stopping;
      attempt++
    ) {
      await this.options.sleep(delay);
      if (this.stopping) return;
      try {
        await this.transport.connect();
        this.reconnects++;
        this.state = "running";
        return;
      } catch {
        delay = Math.min(delay * 2, this.options.reconnectMaxMs);
      }
    }
    if (!this.stopping) this.state = "idle";
  }
}
