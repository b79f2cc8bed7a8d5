import { describe, expect, it } from "vitest";

import { OperatorPanel } from "../src/operatorPanel.js";
import type { ControlResponse, ControlTransport, GatewayStatus } from "../src/types.js";

function statusDoc(overrides: Partial<GatewayStatus> = {}): GatewayStatus {
  return {
    uptime_s: 12.5,
    recording: { state: "idle" },
    streams: {
      gesture: { receive_hz: 60.1, processed: 600, acceptance_ratio: 0.0 },
      handle: { receive_hz: 89.9, processed: 900, acceptance_ratio: 0.42 },
    },
    ...overrides,
  };
}

class FakeGateway implements ControlTransport {
  offline = false;
  recording: { state: "idle" } | { state: "recording"; episode_id: string } = { state: "idle" };
  requests: string[] = [];

  async request(command: string): Promise<ControlResponse> {
    if (this.offline) throw new Error("connection refused");
    this.requests.push(command);
    if (command === "status") {
      return { ok: true, result: statusDoc({ recording: this.recording }) };
    }
    if (command.startsWith("record start")) {
      if (this.recording.state === "recording") {
        return { ok: false, error: "already recording" };
      }
      this.recording = { state: "recording", episode_id: "ep-123" };
      return { ok: true, result: { episode_id: "ep-123" } };
    }
    if (command === "record stop") {
      if (this.recording.state === "idle") return { ok: false, error: "not recording" };
      this.recording = { state: "idle" };
      return { ok: true, result: { episode_id: "ep-123", frame_count: 42 } };
    }
    return { ok: false, error: `unknown command: ${command}` };
  }
}

describe("OperatorPanel", () => {
  it("starts stale with actions disabled until the first poll", () => {
    const panel = new OperatorPanel(new FakeGateway());
    const view = panel.view();
    expect(view.connection).toBe("stale");
    expect(view.actionsEnabled).toBe(false);
  });

  it("shows live status after polling", async () => {
    const panel = new OperatorPanel(new FakeGateway());
    await panel.pollOnce();
    const view = panel.view();
    expect(view.connection).toBe("live");
    expect(view.actionsEnabled).toBe(true);
    expect(view.status?.streams.gesture.receive_hz).toBeCloseTo(60.1);
    expect(view.recording).toEqual({ state: "idle" });
  });

  it("shows recording state only after gateway confirmation", async () => {
    const gateway = new FakeGateway();
    const panel = new OperatorPanel(gateway);
    await panel.pollOnce();
    const episodeId = await panel.recordStart("pick-cube");
    expect(episodeId).toBe("ep-123");
    expect(panel.view().recording).toEqual({ state: "recording", episode_id: "ep-123" });
    const manifest = await panel.recordStop();
    expect(manifest.frame_count).toBe(42);
    expect(panel.view().recording).toEqual({ state: "idle" });
  });

  it("surfaces gateway refusals without changing state", async () => {
    const gateway = new FakeGateway();
    const panel = new OperatorPanel(gateway);
    await panel.pollOnce();
    await panel.recordStart("a");
    await expect(panel.recordStart("b")).rejects.toThrow("already recording");
    expect(panel.view().recording).toEqual({ state: "recording", episode_id: "ep-123" });
  });

  it("marks the panel stale when the gateway goes away", async () => {
    const gateway = new FakeGateway();
    const panel = new OperatorPanel(gateway);
    await panel.pollOnce();
    expect(panel.view().connection).toBe("live");
    gateway.offline = true;
    await panel.pollOnce();
    const view = panel.view();
    expect(view.connection).toBe("stale");
    expect(view.actionsEnabled).toBe(false);
    expect(view.lastError).toContain("connection refused");
    expect(view.lastSeenMs).not.toBeNull();
  });

  it("renders stale banner and disabled controls in HTML", async () => {
    const gateway = new FakeGateway();
    const panel = new OperatorPanel(gateway);
    expect(panel.render()).toContain("disabled");
    await panel.pollOnce();
    const live = panel.render();
    expect(live).not.toContain("stale");
    expect(live).toContain("60.1 Hz");
    expect(live).toContain("42.0%");
    gateway.offline = true;
    await panel.pollOnce();
    expect(panel.render()).toContain("gateway unreachable");
  });

  it("displays a zero acceptance ratio as 0%", async () => {
    const panel = new OperatorPanel(new FakeGateway());
    await panel.pollOnce();
    expect(panel.render()).toContain("acceptance 0.0%");
  });

  it("polls on a timer at the configured cadence", async () => {
    const gateway = new FakeGateway();
    const panel = new OperatorPanel(gateway, { pollIntervalMs: 20 });
    panel.start();
    await new Promise((resolve) => setTimeout(resolve, 110));
    panel.stop();
    const polls = gateway.requests.filter((r) => r === "status").length;
    expect(polls).toBeGreaterThanOrEqual(3);
  });
});
