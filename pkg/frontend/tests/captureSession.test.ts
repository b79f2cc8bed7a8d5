import { describe, expect, it } from "vitest";

import { CaptureSession } from "../src/captureSession.js";
import { XREmulator } from "../src/xrEmulator.js";
import type { FrameTransport } from "../src/types.js";

class FakeTransport implements FrameTransport {
  sent: string[] = [];
  connected = false;
  connectAttempts = 0;
  failConnects = 0;
  private handlers: Array<() => void> = [];

  async connect(): Promise<void> {
    this.connectAttempts++;
    if (this.failConnects > 0) {
      this.failConnects--;
      throw new Error("connection refused");
    }
    this.connected = true;
  }

  send(text: string): void {
    if (!this.connected) throw new Error("not connected");
    this.sent.push(text);
  }

  close(): void {
    this.connected = false;
  }

  onDisconnect(handler: () => void): void {
    this.handlers.push(handler);
  }

  dropConnection(): void {
    this.connected = false;
    for (const handler of this.handlers) handler();
  }
}

const instantSleep = () => Promise.resolve();

function makeSession(emulator: XREmulator, transport: FakeTransport) {
  let clock = 0;
  return new CaptureSession(emulator, transport, {
    sleep: instantSleep,
    now: () => (clock += 11),
  });
}

describe("CaptureSession", () => {
  it("emits one schema frame per XR frame while running", async () => {
    const emulator = new XREmulator();
    emulator.addController("right");
    const transport = new FakeTransport();
    const session = makeSession(emulator, transport);
    await session.start();
    expect(session.state).toBe("running");
    emulator.pump(90);
    expect(session.framesSent).toBe(90);
    expect(transport.sent).toHaveLength(90);
    const doc = JSON.parse(transport.sent[0]!);
    expect(doc.data[0].handedness).toBe("right");
    expect(session.lastFrameTimestamp).not.toBeNull();
  });

  it("emits nothing with no controllers but stays running", async () => {
    const emulator = new XREmulator();
    const transport = new FakeTransport();
    const session = makeSession(emulator, transport);
    await session.start();
    emulator.pump(30);
    expect(session.state).toBe("running");
    expect(session.framesSent).toBe(0);
  });

  it("pauses on reference-space loss and resumes cleanly", async () => {
    const emulator = new XREmulator();
    emulator.addController("right");
    const transport = new FakeTransport();
    const session = makeSession(emulator, transport);
    await session.start();
    emulator.pump(10);
    emulator.loseReferenceSpace();
    emulator.pump(20);
    expect(session.framesSent).toBe(10);
    expect(session.referenceSpaceValid).toBe(false);
    emulator.restoreReferenceSpace();
    emulator.pump(10);
    expect(session.framesSent).toBe(20);
    expect(session.referenceSpaceValid).toBe(true);
    // Every message is complete JSON; nothing malformed around the gap.
    for (const text of transport.sent) JSON.parse(text);
  });

  it("reconnects with backoff and discards frames while down", async () => {
    const emulator = new XREmulator();
    emulator.addController("right");
    const transport = new FakeTransport();
    const session = makeSession(emulator, transport);
    await session.start();
    emulator.pump(5);
    transport.failConnects = 2;
    transport.dropConnection();
    emulator.pump(3); // sampled during reconnect: discarded, not queued
    await Promise.resolve();
    // allow the reconnect loop (instant sleeps) to finish
    await new Promise((resolve) => setTimeout(resolve, 10));
    expect(session.state).toBe("running");
    expect(session.reconnects).toBe(1);
    expect(session.framesDiscarded).toBeGreaterThanOrEqual(1);
    const before = transport.sent.length;
    emulator.pump(5);
    expect(transport.sent.length).toBe(before + 5);
  });

  it("gives up after bounded attempts", async () => {
    const emulator = new XREmulator();
    emulator.addController("right");
    const transport = new FakeTransport();
    const session = new CaptureSession(emulator, transport, {
      sleep: instantSleep,
      maxReconnectAttempts: 3,
    });
    await session.start();
    transport.failConnects = 99;
    transport.dropConnection();
    await new Promise((resolve) => setTimeout(resolve, 20));
    expect(session.state).toBe("idle");
    expect(transport.connectAttempts).toBe(1 + 3);
  });

  it("stop() ends emission", async () => {
    const emulator = new XREmulator();
    emulator.addController("right");
    const transport = new FakeTransport();
    const session = makeSession(emulator, transport);
    await session.start();
    emulator.pump(3);
    session.stop();
    emulator.pump(5);
    expect(session.framesSent).toBe(3);
    expect(session.state).toBe("idle");
  });
});
