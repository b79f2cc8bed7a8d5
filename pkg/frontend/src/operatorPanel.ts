/**
 * Operator panel view model.
 *
 * Polls gateway status at 2 Hz and exposes record start/stop actions.
 * Every state shown to the operator comes from a gateway response: actions
 * update the view only after the gateway confirms them, and a failed poll
 * marks the whole panel stale (actions disabled) rather than guessing.
 */

import type { ControlResponse, ControlTransport, GatewayStatus } from "./types.js";

export interface PanelView {
  connection: "live" | "stale";
  lastSeenMs: number | null;
  status: GatewayStatus | null;
  recording: { state: "idle" } | { state: "recording"; episode_id: string } | null;
  actionsEnabled: boolean;
  lastError: string | null;
}

export interface PanelOptions {
  pollIntervalMs?: number;
  now?: () => number;
}

export class OperatorPanel {
  private client: ControlTransport;
  private pollIntervalMs: number;
  private now: () => number;
  private timer: ReturnType<typeof setInterval> | null = null;

  private status: GatewayStatus | null = null;
  private recording: PanelView["recording"] = null;
  private lastSeenMs: number | null = null;
  private stale = true;
  private lastError: string | null = null;

  constructor(client: ControlTransport, options: PanelOptions = {}) {
    this.client = client;
    this.pollIntervalMs = options.pollIntervalMs ?? 500;
    this.now = options.now ?? (() => Date.now());
  }

  start(): void {
    if (this.timer) return;
    this.timer = setInterval(() => void this.pollOnce(), this.pollIntervalMs);
  }

  stop(): void {
    if (this.timer) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  async pollOnce(): Promise<void> {
    try {
      const response = (await this.client.request("status")) as ControlResponse<GatewayStatus>;
      if (!response.ok || response.result === undefined) {
        throw new Error(response.error ?? "status request failed");
      }
      this.status = response.result;
      this.recording = response.result.recording;
      this.lastSeenMs = this.now();
      this.stale = false;
      this.lastError = null;
    } catch (err) {
      this.stale = true;
      this.lastError = err instanceof Error ? err.message : String(err);
    }
  }

  async recordStart(label: string): Promise<string> {
    const response = (await this.client.request(`record start ${label}`)) as ControlResponse<{
      episode_id: string;
    }>;
    if (!response.ok || !response.result) {
      this.lastError = response.error ?? "record start failed";
      throw new Error(this.lastError);
    }
    // Only the confirmed response mutates the view.
    this.recording = { state: "recording", episode_id: response.result.episode_id };
    return response.result.episode_id;
  }

  async recordStop(): Promise<Record<string, unknown>> {
    const response = await this.client.request("record stop");
    if (!response.ok || response.result === undefined) {
      this.lastError = response.error ?? "record stop failed";
      throw new Error(this.lastError);
    }
    this.recording = { state: "idle" };
    return response.result as Record<string, unknown>;
  }

  view(): PanelView {
    return {
      connection: this.stale ? "stale" : "live",
      lastSeenMs: this.lastSeenMs,
      status: this.status,
      recording: this.recording,
      actionsEnabled: !this.stale,
      lastError: this.lastError,
    };
  }

  /** Static HTML rendering of the current view (no framework, no DOM). */
  render(): string {
    const view = this.view();
    const gesture = view.status?.streams.gesture;
    const handle = view.status?.streams.handle;
    const pct = (ratio: number | undefined) =>
      ratio === undefined ? "-" : `${(ratio * 100).toFixed(1)}%`;
    const hz = (value: number | undefined) => (value === undefined ? "-" : value.toFixed(1));
    const recording =
      view.recording?.state === "recording"
        ? `recording ${view.recording.episode_id}`
        : view.recording?.state ?? "unknown";
    const staleBanner =
      view.connection === "stale"
        ? `<div class="banner stale">gateway unreachable${
            view.lastSeenMs ? ` (last seen ${new Date(view.lastSeenMs).toISOString()})` : ""
          }</div>`
        : "";
    const disabled = view.actionsEnabled ? "" : " disabled";
    return [
      staleBanner,
      `<dl class="status">`,
      `<dt>gesture</dt><dd>${hz(gesture?.receive_hz)} Hz, acceptance ${pct(
        gesture?.acceptance_ratio
      )}</dd>`,
      `<dt>handle</dt><dd>${hz(handle?.receive_hz)} Hz, acceptance ${pct(
        handle?.acceptance_ratio
      )}</dd>`,
      `<dt>recording</dt><dd>${recording}</dd>`,
      `</dl>`,
      `<button id="record-start"${disabled}>record</button>`,
      `<button id="record-stop"${disabled}>stop</button>`,
    ].join("\n");
  }
}
